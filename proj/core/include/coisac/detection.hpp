// Monostatic radar model per AP, receive beamforming, radar SINR and the
// cooperative energy (GLRT) detector with its Monte-Carlo evaluation.
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coisac/linalg.hpp"
#include "coisac/scene.hpp"

namespace coisac {

struct RadarParams {
  /// B * T0 of the matched filter; the equivalent noise power is sigma_R^2 / (B * T0).
  double time_bandwidth = 1.0;
  /// Radar cross section of each target (linear); one entry is broadcast.
  std::vector<double> target_rcs{1.0};
  /// Variance of each clutter amplitude (linear); one entry is broadcast.
  std::vector<double> clutter_rcs{1.0};
  /// Waveform autocorrelation at the clutter delay mismatch, in [0, 1].
  double clutter_correlation = 1.0;
};

/// One AP's radar view of a chosen target. Responses are n_rx x n_tx and
/// already include the two-way amplitude gain; the U streams see the same
/// response (block-diagonal I_U kron G structure).
struct ApRadarChannel {
  CMat target_response;
  cd target_amplitude{1.0, 0.0};
  std::vector<CMat> clutter_responses;
  std::vector<double> clutter_variances;
  CMat precoder;  // n_tx x U
  CVec receive_beamformer;  // n_rx * U
};

struct DetectionModel {
  std::vector<ApRadarChannel> per_ap;
  double noise_power = 1e-9;  // equivalent post-matched-filter noise

  int num_aps() const { return static_cast<int>(per_ap.size()); }
};

/// Builds the model for target `target` with MVDR receive beamformers.
/// Targets other than `target` enter as clutter with variance equal to their RCS.
DetectionModel build_detection_model(const NetworkScene& scene, std::span<const CMat> precoders,
                                     int target, const RadarParams& params);

/// vec(R X): the stacked per-stream response (n_rx * U).
CVec effective_response(const CMat& response, const CMat& precoder);

/// Sigma^{-1} g0 with Sigma = sum_q var_q g_q g_q^H + noise I.
CVec mvdr_receive_beamformer(const ApRadarChannel& channel, double noise_power);

/// Interference-plus-noise power at the beamformer output.
double interference_power(const ApRadarChannel& channel, const CVec& w, double noise_power);

/// |xi_0 w^H g0|^2 / interference_power. Throws on a zero beamformer.
double radar_sinr(const ApRadarChannel& channel, const CVec& w, double noise_power);

/// radar_sinr of AP a using the beamformer stored in the model.
double radar_sinr(const DetectionModel& model, int a);

double sum_radar_sinr(const DetectionModel& model);

/// sum_a |y_a|^2 / sigma2_a.
double glrt_statistic(std::span<const cd> samples, std::span<const double> interference_powers);

struct MonteCarloDetection {
  double pr_detect = 0.0;
  double pr_false_alarm = 0.0;
  double stderr_detect = 0.0;
  double stderr_false_alarm = 0.0;
  long trials = 0;
};

/// Simulates the matched-filter outputs under both hypotheses and counts
/// exceedances of `threshold`. Trials are split into fixed partitions with
/// independently seeded streams, so the result does not depend on `threads`.
MonteCarloDetection monte_carlo_detection(const DetectionModel& model, double threshold,
                                          long trials, std::uint64_t seed, int threads = 1);

/// Draws of the normalized energy statistic under one hypothesis, in trial order.
std::vector<double> sample_glrt_statistics(const DetectionModel& model, bool target_present,
                                           long trials, std::uint64_t seed);

/// Independent stream seed for partition `index` of a run seeded with `seed`.
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index);

}  // namespace coisac
