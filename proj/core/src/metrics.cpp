#include "coisac/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace coisac {

CMat effective_downlink(std::span<const CMat> channels, std::span<const CMat> precoders) {
  if (channels.size() != precoders.size() || channels.empty())
    throw std::invalid_argument("effective_downlink: channel/precoder count mismatch");
  CMat xi = channels[0].adjoint() * precoders[0];
  for (std::size_t a = 1; a < channels.size(); ++a) xi += channels[a].adjoint() * precoders[a];
  return xi;
}

RVec user_sinr(const CMat& downlink, const RVec& noises) {
  const Eigen::Index users = downlink.rows();
  RVec sinr(users);
  for (Eigen::Index u = 0; u < users; ++u) {
    const double signal = std::norm(downlink(u, u));
    const double interference = downlink.row(u).squaredNorm() - signal;
    sinr(u) = signal / (interference + noises(u));
  }
  return sinr;
}

namespace {

std::vector<CMat> precoders_of(std::span<const HbfState> states) {
  std::vector<CMat> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.precoder());
  return out;
}

}  // namespace

double user_rate(std::span<const CMat> channels, std::span<const HbfState> states, int u,
                 double noise) {
  const auto precoders = precoders_of(states);
  const CMat xi = effective_downlink(channels, precoders);
  const double signal = std::norm(xi(u, u));
  const double interference = xi.row(u).squaredNorm() - signal;
  return std::log2(1.0 + signal / (interference + noise));
}

double weighted_sum_rate(std::span<const CMat> precoders, std::span<const CMat> channels,
                         const RVec& weights, const RVec& noises) {
  const RVec sinr = user_sinr(effective_downlink(channels, precoders), noises);
  double wsr = 0.0;
  for (Eigen::Index u = 0; u < sinr.size(); ++u) wsr += weights(u) * std::log2(1.0 + sinr(u));
  return wsr;
}

double weighted_sum_rate(std::span<const HbfState> states, std::span<const CMat> channels,
                         const RVec& weights, const RVec& noises) {
  const auto precoders = precoders_of(states);
  return weighted_sum_rate(std::span<const CMat>(precoders), channels, weights, noises);
}

double transmit_beampattern(const CMat& precoder, double angle) {
  const CVec a = steering_vector(angle, static_cast<int>(precoder.rows()));
  return (a.adjoint() * precoder).squaredNorm();
}

RVec beampattern_on_grid(const CMat& precoder, const RVec& angles) {
  return beampattern_from_steering(precoder, steering_matrix(angles, static_cast<int>(precoder.rows())));
}

RVec beampattern_from_steering(const CMat& precoder, const CMat& steering) {
  return (steering.adjoint() * precoder).rowwise().squaredNorm();
}

double beampattern_mse(const RVec& pattern, const BeampatternSpec& spec, double psi) {
  const RVec err = pattern - psi * spec.desired;
  return spec.weights.dot(err.cwiseAbs2()) / static_cast<double>(spec.grid_size());
}

double beampattern_mse(const CMat& precoder, const BeampatternSpec& spec, double psi) {
  return beampattern_mse(beampattern_on_grid(precoder, spec.grid_angles), spec, psi);
}

double optimal_beampattern_scale(const RVec& pattern, const BeampatternSpec& spec) {
  const double den = spec.weights.dot(spec.desired.cwiseAbs2());
  if (den <= 0.0) return 0.0;
  const double num = spec.weights.dot(pattern.cwiseProduct(spec.desired));
  return std::max(0.0, num / den);
}

double optimal_beampattern_scale(const CMat& precoder, const BeampatternSpec& spec) {
  return optimal_beampattern_scale(beampattern_on_grid(precoder, spec.grid_angles), spec);
}

double max_notch_power(const RVec& pattern, const BeampatternSpec& spec) {
  double worst = 0.0;
  for (int idx : spec.notch_indices) worst = std::max(worst, pattern(idx));
  return worst;
}

double max_notch_power(const CMat& precoder, const BeampatternSpec& spec) {
  double worst = 0.0;
  for (int idx : spec.notch_indices)
    worst = std::max(worst, transmit_beampattern(precoder, spec.grid_angles(idx)));
  return worst;
}

}  // namespace coisac
