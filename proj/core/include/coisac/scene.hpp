// Network geometry, ULA steering vectors, path loss, Saleh-Valenzuela channels
// and per-AP beampattern specifications.
#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "coisac/linalg.hpp"

namespace coisac {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Geometry and radio parameters of a cooperative ISAC network. Powers in mW.
struct NetworkScene {
  std::vector<Point2> ap_positions;
  std::vector<Point2> ue_positions;
  std::vector<Point2> target_positions;
  std::vector<Point2> clutter_positions;
  /// Broadside direction of each AP's ULA. Empty means every array faces +y.
  std::vector<Point2> ap_broadside;

  int n_tx = 32;
  int n_rx = 32;
  int n_rf = 4;
  double tx_power_budget = 100.0;
  /// Per-UE noise power; a single entry is broadcast to every UE.
  std::vector<double> noise_power_comm{1e-9};
  double noise_power_radar = 1e-9;
  double rician_factor = 6.0;
  int n_paths = 10;
  double reference_pathloss_db = 60.0;

  int num_aps() const { return static_cast<int>(ap_positions.size()); }
  int num_ues() const { return static_cast<int>(ue_positions.size()); }
  double comm_noise(int u) const;
  Point2 broadside(int a) const;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Per-AP downlink channels; column u of per_ap[a] is h_{a,u} (n_tx x U).
struct ChannelSet {
  std::vector<CMat> per_ap;
  std::uint64_t rng_seed = 0;
};

/// Desired beampattern, weights and notch set of one AP on a uniform angle grid.
struct BeampatternSpec {
  RVec grid_angles;      // radians, ascending over [-pi/2, pi/2]
  RVec desired;          // p_a(theta_l) in {0, 1}
  RVec weights;          // mu_{a,l} > 0
  std::vector<int> notch_indices;  // grid indices forming the notch set
  double mse_budget = 4.0;         // gamma_a
  double notch_budget = 1e-3;      // Gamma_a, linear power

  int grid_size() const { return static_cast<int>(grid_angles.size()); }
  int notch_count() const { return static_cast<int>(notch_indices.size()); }
  RVec notch_angles() const;
};

struct BeampatternParams {
  double mainlobe_halfwidth = deg2rad(4.0);
  double notch_halfwidth = deg2rad(2.0);
  double mse_budget = 4.0;
  double notch_budget = 1e-3;
  int grid_size = 181;
};

/// Half-wavelength ULA response, entry m = exp(j*pi*m*sin(angle)).
CVec steering_vector(double angle, int n);

/// Columns are steering vectors for each angle.
CMat steering_matrix(const RVec& angles, int n);

/// ref_db + 20*log10(distance). Throws on nonpositive distance.
double path_loss_db(double distance, double reference_db = 60.0);

/// Linear power gain 10^(-loss/10) for a link of the given length.
double path_gain(double distance, double reference_db = 60.0);

double distance(Point2 a, Point2 b);

/// Angle of `to` seen from an array at `from` whose broadside points along
/// `broadside`, folded into [-pi/2, pi/2] (ULA front/back ambiguity).
double relative_angle(Point2 from, Point2 broadside, Point2 to);

/// SV channel from AP a to UE u.
CVec generate_sv_channel(const NetworkScene& scene, int a, int u, std::mt19937_64& rng);

/// All channels for the scene, drawn AP-major then UE-major from one seeded stream.
ChannelSet generate_channels(const NetworkScene& scene, std::uint64_t seed);

struct SceneAngles {
  std::vector<double> targets;
  std::vector<double> clutter;
  std::vector<double> other_aps;
};

/// Throws std::invalid_argument if any object coincides with the AP.
SceneAngles scene_angles(const NetworkScene& scene, int a);

/// Uniform grid of `size` angles spanning [-pi/2, pi/2].
RVec uniform_angle_grid(int size);

BeampatternSpec build_beampattern_spec(const NetworkScene& scene, int a,
                                       const BeampatternParams& params);

}  // namespace coisac
