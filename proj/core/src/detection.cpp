#include "coisac/detection.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <thread>

namespace coisac {
namespace {

double broadcast_value(const std::vector<double>& values, std::size_t i, const char* field) {
  if (values.empty()) throw std::invalid_argument(std::string(field) + ": must not be empty");
  return values.size() == 1 ? values.front() : values.at(i);
}

CMat reflector_response(const NetworkScene& scene, int a, Point2 object, double scale) {
  const Point2 ap = scene.ap_positions[a];
  const double angle = relative_angle(ap, scene.broadside(a), object);
  // Two legs of the same length; amplitude gain of each leg is sqrt(path gain).
  const double gain = path_gain(distance(ap, object), scene.reference_pathloss_db);
  const CVec at = steering_vector(angle, scene.n_tx);
  const CVec ar = steering_vector(angle, scene.n_rx);
  return (scale * gain) * (ar * at.adjoint());
}

}  // namespace

DetectionModel build_detection_model(const NetworkScene& scene, std::span<const CMat> precoders,
                                     int target, const RadarParams& params) {
  const int n_targets = static_cast<int>(scene.target_positions.size());
  if (target < 0 || target >= n_targets) throw std::out_of_range("build_detection_model: target index");
  if (static_cast<int>(precoders.size()) != scene.num_aps())
    throw std::invalid_argument("build_detection_model: one precoder per AP required");
  if (!(params.time_bandwidth > 0.0)) throw std::invalid_argument("time_bandwidth: must be positive");
  if (params.clutter_correlation < 0.0 || params.clutter_correlation > 1.0)
    throw std::invalid_argument("clutter_correlation: must lie in [0, 1]");

  DetectionModel model;
  model.noise_power = scene.noise_power_radar / params.time_bandwidth;
  for (int a = 0; a < scene.num_aps(); ++a) {
    ApRadarChannel ch;
    ch.precoder = precoders[a];
    ch.target_response = reflector_response(scene, a, scene.target_positions[target], 1.0);
    ch.target_amplitude = cd(std::sqrt(broadcast_value(params.target_rcs, target, "target_rcs")), 0.0);
    for (int o = 0; o < n_targets; ++o) {
      if (o == target) continue;
      ch.clutter_responses.push_back(reflector_response(scene, a, scene.target_positions[o], 1.0));
      ch.clutter_variances.push_back(broadcast_value(params.target_rcs, o, "target_rcs"));
    }
    for (std::size_t q = 0; q < scene.clutter_positions.size(); ++q) {
      ch.clutter_responses.push_back(
          reflector_response(scene, a, scene.clutter_positions[q], params.clutter_correlation));
      ch.clutter_variances.push_back(broadcast_value(params.clutter_rcs, q, "clutter_rcs"));
    }
    ch.receive_beamformer = mvdr_receive_beamformer(ch, model.noise_power);
    model.per_ap.push_back(std::move(ch));
  }
  return model;
}

CVec effective_response(const CMat& response, const CMat& precoder) {
  const CMat y = response * precoder;
  return Eigen::Map<const CVec>(y.data(), y.size());
}

CVec mvdr_receive_beamformer(const ApRadarChannel& channel, double noise_power) {
  const CVec g0 = effective_response(channel.target_response, channel.precoder);
  const Eigen::Index n = g0.size();
  CMat sigma = CMat::Identity(n, n) * noise_power;
  for (std::size_t q = 0; q < channel.clutter_responses.size(); ++q) {
    const CVec gq = effective_response(channel.clutter_responses[q], channel.precoder);
    sigma.noalias() += channel.clutter_variances[q] * (gq * gq.adjoint());
  }
  return sigma.ldlt().solve(g0);
}

double interference_power(const ApRadarChannel& channel, const CVec& w, double noise_power) {
  double total = noise_power * w.squaredNorm();
  for (std::size_t q = 0; q < channel.clutter_responses.size(); ++q) {
    const cd xq = w.dot(effective_response(channel.clutter_responses[q], channel.precoder));
    total += channel.clutter_variances[q] * std::norm(xq);
  }
  return total;
}

double radar_sinr(const ApRadarChannel& channel, const CVec& w, double noise_power) {
  if (w.squaredNorm() == 0.0) throw std::invalid_argument("radar_sinr: zero receive beamformer");
  const cd x0 = w.dot(effective_response(channel.target_response, channel.precoder));
  return std::norm(channel.target_amplitude * x0) / interference_power(channel, w, noise_power);
}

double radar_sinr(const DetectionModel& model, int a) {
  const auto& ch = model.per_ap.at(a);
  return radar_sinr(ch, ch.receive_beamformer, model.noise_power);
}

double sum_radar_sinr(const DetectionModel& model) {
  double total = 0.0;
  for (int a = 0; a < model.num_aps(); ++a) total += radar_sinr(model, a);
  return total;
}

double glrt_statistic(std::span<const cd> samples, std::span<const double> interference_powers) {
  if (samples.size() != interference_powers.size())
    throw std::invalid_argument("glrt_statistic: size mismatch");
  double total = 0.0;
  for (std::size_t a = 0; a < samples.size(); ++a) total += std::norm(samples[a]) / interference_powers[a];
  return total;
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 finalizer over a golden-ratio stride.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

namespace {

// Beamformer outputs are fixed per AP; only the amplitudes and noise are random.
struct ApScalars {
  cd target;
  std::vector<cd> clutter;
  std::vector<double> clutter_sd;
  double noise_sd;
};

std::vector<ApScalars> output_scalars(const DetectionModel& model, std::vector<double>& sigma2) {
  std::vector<ApScalars> aps;
  sigma2.assign(model.num_aps(), 0.0);
  for (int a = 0; a < model.num_aps(); ++a) {
    const auto& ch = model.per_ap[a];
    const CVec& w = ch.receive_beamformer;
    ApScalars s;
    s.target = ch.target_amplitude * w.dot(effective_response(ch.target_response, ch.precoder));
    for (std::size_t q = 0; q < ch.clutter_responses.size(); ++q) {
      s.clutter.push_back(w.dot(effective_response(ch.clutter_responses[q], ch.precoder)));
      s.clutter_sd.push_back(std::sqrt(ch.clutter_variances[q] / 2.0));
    }
    s.noise_sd = std::sqrt(model.noise_power * w.squaredNorm() / 2.0);
    sigma2[a] = interference_power(ch, w, model.noise_power);
    aps.push_back(std::move(s));
  }
  return aps;
}

cd draw_interference(const ApScalars& s, std::mt19937_64& rng, std::normal_distribution<double>& normal) {
  cd interference(normal(rng) * s.noise_sd, normal(rng) * s.noise_sd);
  for (std::size_t q = 0; q < s.clutter.size(); ++q) {
    const cd xi(normal(rng) * s.clutter_sd[q], normal(rng) * s.clutter_sd[q]);
    interference += xi * s.clutter[q];
  }
  return interference;
}

}  // namespace

std::vector<double> sample_glrt_statistics(const DetectionModel& model, bool target_present,
                                           long trials, std::uint64_t seed) {
  if (trials < 1) throw std::invalid_argument("sample_glrt_statistics: trials must be >= 1");
  std::vector<double> sigma2;
  const auto aps = output_scalars(model, sigma2);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<cd> y(aps.size());
  std::vector<double> out;
  out.reserve(trials);
  for (long t = 0; t < trials; ++t) {
    for (std::size_t a = 0; a < aps.size(); ++a)
      y[a] = draw_interference(aps[a], rng, normal) + (target_present ? aps[a].target : cd(0.0, 0.0));
    out.push_back(glrt_statistic(y, sigma2));
  }
  return out;
}

MonteCarloDetection monte_carlo_detection(const DetectionModel& model, double threshold, long trials,
                                          std::uint64_t seed, int threads) {
  if (trials < 1) throw std::invalid_argument("monte_carlo_detection: trials must be >= 1");
  const int n_aps = model.num_aps();
  std::vector<double> sigma2;
  const auto aps = output_scalars(model, sigma2);

  constexpr int kPartitions = 64;
  std::vector<long> hits_h1(kPartitions, 0), hits_h0(kPartitions, 0);
  auto run_partition = [&](int p) {
    const long begin = trials * p / kPartitions;
    const long end = trials * (p + 1) / kPartitions;
    std::mt19937_64 rng(derive_stream_seed(seed, static_cast<std::uint64_t>(p)));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<cd> y0(n_aps), y1(n_aps);
    for (long t = begin; t < end; ++t) {
      for (int a = 0; a < n_aps; ++a) {
        const cd interference = draw_interference(aps[a], rng, normal);
        y0[a] = interference;
        y1[a] = aps[a].target + interference;
      }
      if (glrt_statistic(y0, sigma2) > threshold) ++hits_h0[p];
      if (glrt_statistic(y1, sigma2) > threshold) ++hits_h1[p];
    }
  };

  const int workers = std::clamp(threads, 1, kPartitions);
  if (workers == 1) {
    for (int p = 0; p < kPartitions; ++p) run_partition(p);
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int p = w; p < kPartitions; p += workers) run_partition(p);
      });
  }

  long h1 = 0, h0 = 0;
  for (int p = 0; p < kPartitions; ++p) {
    h1 += hits_h1[p];
    h0 += hits_h0[p];
  }
  MonteCarloDetection out;
  out.trials = trials;
  const double n = static_cast<double>(trials);
  out.pr_detect = h1 / n;
  out.pr_false_alarm = h0 / n;
  out.stderr_detect = std::sqrt(out.pr_detect * (1.0 - out.pr_detect) / n);
  out.stderr_false_alarm = std::sqrt(out.pr_false_alarm * (1.0 - out.pr_false_alarm) / n);
  return out;
}

}  // namespace coisac
