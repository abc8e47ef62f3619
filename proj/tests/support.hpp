// Shared fixtures for the unit and acceptance tests.
#pragma once

#include <cmath>
#include <random>

#include "coisac/linalg.hpp"
#include "coisac/scene.hpp"

namespace coisac::testing {

inline CMat random_cmat(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  CMat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = cd(n(rng), n(rng));
  return m;
}

inline CMat random_phases(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * kPi);
  CMat m(rows, cols);
  for (Eigen::Index k = 0; k < m.size(); ++k) m(k) = std::polar(1.0, u(rng));
  return m;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Three APs, one target, two clutter points and two UEs at reduced array size.
inline NetworkScene desk_scene(int n_aps = 3) {
  NetworkScene s;
  const Point2 all_aps[] = {{0.0, 0.0}, {90.0, 0.0}, {45.0, 45.0 * std::sqrt(3.0)}};
  for (int a = 0; a < n_aps; ++a) s.ap_positions.push_back(all_aps[a]);
  s.ue_positions = {{20.0, 60.0}, {70.0, 35.0}};
  s.target_positions = {{33.0, 26.0}};
  s.clutter_positions = {{28.0, 36.0}, {51.0, 26.0}};
  s.n_tx = 16;
  s.n_rx = 16;
  s.n_rf = 4;
  s.tx_power_budget = 100.0;
  s.noise_power_comm = {1e-9};
  s.noise_power_radar = 1e-9;
  return s;
}

inline BeampatternParams desk_params(double gamma = 4.0, double notch_db = -30.0) {
  BeampatternParams p;
  p.grid_size = 61;
  p.mse_budget = gamma;
  p.notch_budget = db2lin(notch_db);
  return p;
}

}  // namespace coisac::testing
