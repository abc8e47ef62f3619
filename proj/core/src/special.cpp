#include "coisac/special.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace coisac {

double upper_gamma_regularized(double s, double x) {
  if (x <= 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return boost::math::gamma_q(s, x);
}

double chi_square_cdf(double x, double dof) {
  if (x <= 0.0) return 0.0;
  return boost::math::gamma_p(dof / 2.0, x / 2.0);
}

double chi_square_inv_cdf(double p, double dof, double tolerance) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("chi_square_inv_cdf: p must be in [0, 1)");
  if (!(dof > 0.0)) throw std::invalid_argument("chi_square_inv_cdf: dof must be positive");
  if (p == 0.0) return 0.0;
  // Work on the survival side so small tail probabilities keep full precision.
  const double tail = 1.0 - p;
  auto survival = [&](double x) { return upper_gamma_regularized(dof / 2.0, x / 2.0); };
  double lo = 0.0;
  double hi = std::max(1.0, dof);
  while (survival(hi) > tail) {
    lo = hi;
    hi *= 2.0;
  }
  for (int it = 0; it < 2000 && hi - lo > tolerance * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (survival(mid) > tail)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

double marcum_q(int order, double a, double b, double tail_tolerance) {
  if (order < 1) throw std::invalid_argument("marcum_q: order must be >= 1");
  if (a < 0.0 || b < 0.0) throw std::invalid_argument("marcum_q: arguments must be nonnegative");
  if (b == 0.0) return 1.0;
  const double lambda = 0.5 * a * a;
  const double x = 0.5 * b * b;
  if (lambda == 0.0) return upper_gamma_regularized(order, x);

  // Poisson(lambda) weights, expanded outward from the mode until the
  // unvisited mass is below tolerance.
  auto log_weight = [&](double k) { return -lambda + k * std::log(lambda) - std::lgamma(k + 1.0); };
  const long mode = static_cast<long>(std::floor(lambda));
  long up = mode;
  long down = mode - 1;
  double mass = 0.0;
  double sum = 0.0;
  double w_up = std::exp(log_weight(static_cast<double>(up)));
  double w_down = down >= 0 ? std::exp(log_weight(static_cast<double>(down))) : 0.0;
  constexpr long kMaxTerms = 50'000'000;
  for (long n = 0; n < kMaxTerms && 1.0 - mass > tail_tolerance; ++n) {
    if (down < 0 || w_up >= w_down) {
      sum += w_up * upper_gamma_regularized(order + static_cast<double>(up), x);
      mass += w_up;
      ++up;
      w_up *= lambda / static_cast<double>(up);
      if (w_up == 0.0 && down < 0) break;
    } else {
      sum += w_down * upper_gamma_regularized(order + static_cast<double>(down), x);
      mass += w_down;
      w_down = down > 0 ? w_down * static_cast<double>(down) / lambda : 0.0;
      --down;
    }
    if (w_up == 0.0 && w_down == 0.0) break;
  }
  return std::clamp(sum, 0.0, 1.0);
}

double detection_threshold(double pr_fa, int n_aps) {
  if (!(pr_fa > 0.0 && pr_fa <= 1.0)) throw std::invalid_argument("detection_threshold: pr_fa must be in (0, 1]");
  if (n_aps < 1) throw std::invalid_argument("detection_threshold: n_aps must be >= 1");
  return 0.5 * chi_square_inv_cdf(1.0 - pr_fa, 2.0 * n_aps);
}

double detection_probability(double sum_sinr, double pr_fa, int n_aps) {
  if (sum_sinr < 0.0) throw std::invalid_argument("detection_probability: sum_sinr must be >= 0");
  if (std::isinf(sum_sinr)) return 1.0;
  const double threshold = detection_threshold(pr_fa, n_aps);
  return marcum_q(n_aps, std::sqrt(2.0 * sum_sinr), std::sqrt(2.0 * threshold));
}

}  // namespace coisac
