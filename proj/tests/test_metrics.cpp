#include <doctest.h>

#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "coisac/metrics.hpp"
#include "support.hpp"

using namespace coisac;
using coisac::testing::random_cmat;

namespace {

// Direct per-user evaluation of SINR from the downlink model.
double reference_wsr(const std::vector<CMat>& h, const std::vector<CMat>& x, const RVec& w,
                     const RVec& noise) {
  const int users = static_cast<int>(h[0].cols());
  double total = 0.0;
  for (int u = 0; u < users; ++u) {
    double signal = 0.0, interference = 0.0;
    for (int v = 0; v < users; ++v) {
      cd amp = 0.0;
      for (std::size_t a = 0; a < h.size(); ++a) amp += h[a].col(u).dot(x[a].col(v));
      (v == u ? signal : interference) += std::norm(amp);
    }
    total += w(u) * std::log2(1.0 + signal / (interference + noise(u)));
  }
  return total;
}

}  // namespace

TEST_CASE("weighted sum rate matches the per-user definition") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const int aps = 1 + trial % 3, users = 2 + trial % 3, n = 6;
    std::vector<CMat> h, x;
    std::vector<HbfState> states;
    for (int a = 0; a < aps; ++a) {
      h.push_back(random_cmat(n, users, rng));
      HbfState s{coisac::testing::random_phases(n, users, rng), random_cmat(users, users, rng)};
      x.push_back(s.precoder());
      states.push_back(s);
    }
    RVec w = RVec::LinSpaced(users, 0.5, 1.5);
    RVec noise = RVec::Constant(users, 0.3);
    const double ref = reference_wsr(h, x, w, noise);
    CHECK(weighted_sum_rate(std::span<const CMat>(x), h, w, noise) == doctest::Approx(ref).epsilon(1e-12));
    CHECK(weighted_sum_rate(std::span<const HbfState>(states), h, w, noise) ==
          doctest::Approx(ref).epsilon(1e-12));
    double sum = 0.0;
    for (int u = 0; u < users; ++u) sum += w(u) * user_rate(h, states, u, noise(u));
    CHECK(sum == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("orthogonal single-user links") {
  // H = I, X = diag(2, 3), noise 1: SINR = 4, 9 with no interference.
  std::vector<CMat> h{CMat::Identity(2, 2)};
  std::vector<CMat> x{CMat::Zero(2, 2)};
  x[0](0, 0) = 2.0;
  x[0](1, 1) = cd(0.0, 3.0);
  const RVec sinr = user_sinr(effective_downlink(h, x), RVec::Ones(2));
  CHECK(sinr(0) == doctest::Approx(4.0));
  CHECK(sinr(1) == doctest::Approx(9.0));
  CHECK(weighted_sum_rate(std::span<const CMat>(x), h, RVec::Ones(2), RVec::Ones(2)) ==
        doctest::Approx(std::log2(5.0) + std::log2(10.0)));
}

TEST_CASE("beampattern integrates to twice the precoder energy over sine space") {
  std::mt19937_64 rng(21);
  for (int n : {1, 4, 9}) {
    const CMat x = random_cmat(n, 3, rng);
    auto f = [&](double u) { return transmit_beampattern(x, std::asin(u)); };
    const double integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -1.0, 1.0, 10, 1e-13);
    CHECK(integral == doctest::Approx(2.0 * x.squaredNorm()).epsilon(1e-9));
  }
}

TEST_CASE("beampattern grid and steering forms agree") {
  std::mt19937_64 rng(2);
  const CMat x = random_cmat(8, 2, rng);
  const RVec grid = uniform_angle_grid(31);
  const RVec p1 = beampattern_on_grid(x, grid);
  const RVec p2 = beampattern_from_steering(x, steering_matrix(grid, 8));
  for (Eigen::Index l = 0; l < grid.size(); ++l) {
    CHECK(p1(l) == doctest::Approx(transmit_beampattern(x, grid(l))));
    CHECK(p2(l) == doctest::Approx(p1(l)));
    CHECK(p1(l) >= 0.0);
  }
  // Single-column X equal to a steering vector peaks at n^2 there.
  const CMat aim = steering_vector(0.3, 8);
  CHECK(transmit_beampattern(aim, 0.3) == doctest::Approx(64.0));
}

TEST_CASE("beampattern MSE and optimal scale") {
  BeampatternSpec spec;
  spec.grid_angles = uniform_angle_grid(5);
  spec.desired = (RVec(5) << 0, 1, 1, 0, 0).finished();
  spec.weights = (RVec(5) << 1, 2, 1, 1, 3).finished();
  spec.notch_indices = {0, 4};
  const RVec pattern = (RVec(5) << 0.5, 3.0, 1.0, 0.2, 0.1).finished();

  // Closed form: psi* = (2*3 + 1*1) / (2 + 1).
  const double psi = optimal_beampattern_scale(pattern, spec);
  CHECK(psi == doctest::Approx(7.0 / 3.0));
  const double direct = (0.25 + 2 * std::pow(3.0 - psi, 2) + std::pow(1.0 - psi, 2) + 0.04 + 3 * 0.01) / 5.0;
  CHECK(beampattern_mse(pattern, spec, psi) == doctest::Approx(direct));
  for (double d : {-0.3, 0.1, 0.5})
    CHECK(beampattern_mse(pattern, spec, psi + d) > beampattern_mse(pattern, spec, psi));
  CHECK(max_notch_power(pattern, spec) == doctest::Approx(0.5));

  spec.notch_indices.clear();
  CHECK(max_notch_power(pattern, spec) == 0.0);
}
