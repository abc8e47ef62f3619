#include "coisac/scene.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace coisac {

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw std::invalid_argument(field + ": " + what);
}

}  // namespace

double NetworkScene::comm_noise(int u) const {
  if (noise_power_comm.size() == 1) return noise_power_comm.front();
  return noise_power_comm.at(static_cast<std::size_t>(u));
}

Point2 NetworkScene::broadside(int a) const {
  if (ap_broadside.empty()) return {0.0, 1.0};
  return ap_broadside.at(static_cast<std::size_t>(a));
}

void NetworkScene::validate() const {
  require(!ap_positions.empty(), "ap_positions", "at least one AP is required");
  require(!ue_positions.empty(), "ue_positions", "at least one UE is required");
  require(n_tx >= 1, "n_tx", "must be >= 1");
  require(n_rx >= 1, "n_rx", "must be >= 1");
  require(n_rf >= 1, "n_rf", "must be >= 1");
  require(num_ues() <= n_rf, "n_rf", "must be >= number of UEs");
  require(n_rf <= n_tx, "n_rf", "must be <= n_tx");
  require(tx_power_budget > 0.0, "tx_power_budget", "must be positive");
  require(noise_power_radar > 0.0, "noise_power_radar", "must be positive");
  require(!noise_power_comm.empty(), "noise_power_comm", "must not be empty");
  require(noise_power_comm.size() == 1 ||
              noise_power_comm.size() == ue_positions.size(),
          "noise_power_comm", "needs one entry or one per UE");
  for (double n : noise_power_comm) require(n > 0.0, "noise_power_comm", "must be positive");
  require(rician_factor >= 0.0, "rician_factor", "must be nonnegative");
  require(n_paths >= 1, "n_paths", "must be >= 1");
  require(ap_broadside.empty() || ap_broadside.size() == ap_positions.size(),
          "ap_broadside", "needs one direction per AP");
  for (const auto& b : ap_broadside)
    require(std::hypot(b.x, b.y) > 0.0, "ap_broadside", "direction must be nonzero");
}

RVec BeampatternSpec::notch_angles() const {
  RVec out(notch_count());
  for (int t = 0; t < notch_count(); ++t) out(t) = grid_angles(notch_indices[t]);
  return out;
}

CVec steering_vector(double angle, int n) {
  if (n < 1) throw std::invalid_argument("steering_vector: n must be >= 1");
  CVec a(n);
  const double step = kPi * std::sin(angle);
  for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, step * m);
  return a;
}

CMat steering_matrix(const RVec& angles, int n) {
  CMat out(n, angles.size());
  for (Eigen::Index l = 0; l < angles.size(); ++l) out.col(l) = steering_vector(angles(l), n);
  return out;
}

double path_loss_db(double distance, double reference_db) {
  if (!(distance > 0.0)) throw std::invalid_argument("path_loss_db: distance must be positive");
  return reference_db + 20.0 * std::log10(distance);
}

double path_gain(double distance, double reference_db) {
  return db2lin(-path_loss_db(distance, reference_db));
}

double distance(Point2 a, Point2 b) { return std::hypot(b.x - a.x, b.y - a.y); }

double relative_angle(Point2 from, Point2 broadside, Point2 to) {
  const double dx = to.x - from.x;
  const double dy = to.y - from.y;
  if (dx == 0.0 && dy == 0.0) throw std::invalid_argument("relative_angle: coincident points");
  const double norm = std::hypot(broadside.x, broadside.y);
  const double bx = broadside.x / norm;
  const double by = broadside.y / norm;
  const double along = bx * dx + by * dy;
  const double across = dx * by - dy * bx;
  double theta = std::atan2(across, along);
  // sin(pi - theta) == sin(theta): fold rear half-plane onto the front.
  if (theta > kPi / 2) theta = kPi - theta;
  if (theta < -kPi / 2) theta = -kPi - theta;
  return theta;
}

CVec generate_sv_channel(const NetworkScene& scene, int a, int u, std::mt19937_64& rng) {
  const Point2 ap = scene.ap_positions.at(static_cast<std::size_t>(a));
  const Point2 ue = scene.ue_positions.at(static_cast<std::size_t>(u));
  const double gain = path_gain(distance(ap, ue), scene.reference_pathloss_db);
  const double kappa = scene.rician_factor;
  const double k_los = std::isinf(kappa) ? 1.0 : std::sqrt(kappa / (1.0 + kappa));
  const double k_nlos = std::isinf(kappa) ? 0.0 : std::sqrt(1.0 / (1.0 + kappa));

  const double aod = relative_angle(ap, scene.broadside(a), ue);
  CVec h = k_los * steering_vector(aod, scene.n_tx);
  std::uniform_real_distribution<double> uniform(-kPi / 2, kPi / 2);
  for (int p = 1; p < scene.n_paths; ++p) h += k_nlos * steering_vector(uniform(rng), scene.n_tx);
  return std::sqrt(gain / scene.n_paths) * h;
}

ChannelSet generate_channels(const NetworkScene& scene, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ChannelSet set;
  set.rng_seed = seed;
  for (int a = 0; a < scene.num_aps(); ++a) {
    CMat h(scene.n_tx, scene.num_ues());
    for (int u = 0; u < scene.num_ues(); ++u) h.col(u) = generate_sv_channel(scene, a, u, rng);
    set.per_ap.push_back(std::move(h));
  }
  return set;
}

SceneAngles scene_angles(const NetworkScene& scene, int a) {
  const Point2 ap = scene.ap_positions.at(static_cast<std::size_t>(a));
  const Point2 b = scene.broadside(a);
  SceneAngles out;
  for (const auto& p : scene.target_positions) out.targets.push_back(relative_angle(ap, b, p));
  for (const auto& p : scene.clutter_positions) out.clutter.push_back(relative_angle(ap, b, p));
  for (int o = 0; o < scene.num_aps(); ++o) {
    if (o == a) continue;
    out.other_aps.push_back(relative_angle(ap, b, scene.ap_positions[static_cast<std::size_t>(o)]));
  }
  return out;
}

RVec uniform_angle_grid(int size) {
  if (size < 2) throw std::invalid_argument("uniform_angle_grid: size must be >= 2");
  return RVec::LinSpaced(size, -kPi / 2, kPi / 2);
}

BeampatternSpec build_beampattern_spec(const NetworkScene& scene, int a,
                                       const BeampatternParams& params) {
  if (!(params.mainlobe_halfwidth > 0.0) || !(params.notch_halfwidth > 0.0))
    throw std::invalid_argument("build_beampattern_spec: half-widths must be positive");
  const SceneAngles angles = scene_angles(scene, a);

  BeampatternSpec spec;
  spec.grid_angles = uniform_angle_grid(params.grid_size);
  spec.desired = RVec::Zero(params.grid_size);
  spec.weights = RVec::Ones(params.grid_size);
  spec.mse_budget = params.mse_budget;
  spec.notch_budget = params.notch_budget;

  // Small slack so grid points that sit exactly on an interval edge are kept.
  constexpr double kEdge = 1e-9;
  auto within = [&](double theta, double center, double half) {
    return std::abs(theta - center) <= half + kEdge;
  };

  std::vector<double> notch_centers = angles.clutter;
  notch_centers.insert(notch_centers.end(), angles.other_aps.begin(), angles.other_aps.end());

  for (int l = 0; l < params.grid_size; ++l) {
    const double theta = spec.grid_angles(l);
    const bool mainlobe = std::any_of(angles.targets.begin(), angles.targets.end(), [&](double c) {
      return within(theta, c, params.mainlobe_halfwidth);
    });
    if (mainlobe) {
      spec.desired(l) = 1.0;
      continue;
    }
    const bool notch = std::any_of(notch_centers.begin(), notch_centers.end(), [&](double c) {
      return within(theta, c, params.notch_halfwidth);
    });
    if (notch) spec.notch_indices.push_back(l);
  }
  return spec;
}

}  // namespace coisac
