// Communication and beampattern performance metrics.
#pragma once

#include <span>
#include <vector>

#include "coisac/linalg.hpp"
#include "coisac/scene.hpp"

namespace coisac {

/// Hybrid beamformer of one AP: analog (n_tx x n_rf, unit modulus) and digital (n_rf x U).
struct HbfState {
  CMat analog;
  CMat digital;

  CMat precoder() const { return analog * digital; }
};

/// Effective downlink matrix sum_a H_a^H X_a (U x U); entry (u, v) is the
/// amplitude of stream v at user u.
CMat effective_downlink(std::span<const CMat> channels, std::span<const CMat> precoders);

/// Per-user SINR from an effective downlink matrix.
RVec user_sinr(const CMat& downlink, const RVec& noises);

/// log2(1 + SINR_u) for user u.
double user_rate(std::span<const CMat> channels, std::span<const HbfState> states, int u,
                 double noise);

/// sum_u w_u * log2(1 + SINR_u).
double weighted_sum_rate(std::span<const HbfState> states, std::span<const CMat> channels,
                         const RVec& weights, const RVec& noises);

/// Same, evaluated directly from fully digital precoders X_a.
double weighted_sum_rate(std::span<const CMat> precoders, std::span<const CMat> channels,
                         const RVec& weights, const RVec& noises);

/// ||a_T(theta)^H X||^2.
double transmit_beampattern(const CMat& precoder, double angle);

/// Beampattern sampled at every grid angle.
RVec beampattern_on_grid(const CMat& precoder, const RVec& angles);

/// Beampattern for precomputed steering columns.
RVec beampattern_from_steering(const CMat& precoder, const CMat& steering);

/// (1/L) sum_l mu_l |P(theta_l) - psi p(theta_l)|^2.
double beampattern_mse(const CMat& precoder, const BeampatternSpec& spec, double psi);
double beampattern_mse(const RVec& pattern, const BeampatternSpec& spec, double psi);

/// Least-squares psi >= 0 minimizing beampattern_mse for a fixed precoder.
double optimal_beampattern_scale(const CMat& precoder, const BeampatternSpec& spec);
double optimal_beampattern_scale(const RVec& pattern, const BeampatternSpec& spec);

/// Largest beampattern value over the notch grid points (0 when the notch set is empty).
double max_notch_power(const CMat& precoder, const BeampatternSpec& spec);
double max_notch_power(const RVec& pattern, const BeampatternSpec& spec);

}  // namespace coisac
