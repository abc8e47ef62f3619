// Chi-square quantiles, generalized Marcum Q and the analytic detection curve.
#pragma once

namespace coisac {

/// Regularized upper incomplete gamma Q(s, x).
double upper_gamma_regularized(double s, double x);

/// Chi-square CDF with `dof` degrees of freedom.
double chi_square_cdf(double x, double dof);

/// Inverse chi-square CDF by bracketed bisection to a relative tolerance; p in [0, 1).
double chi_square_inv_cdf(double p, double dof, double tolerance = 1e-10);

/// Generalized Marcum Q of integer order, Q_M(a, b) = P[chi'^2_{2M}(a^2) > b^2],
/// as a Poisson mixture of upper incomplete gammas truncated once the
/// neglected Poisson mass drops below `tail_tolerance`.
double marcum_q(int order, double a, double b, double tail_tolerance = 1e-12);

/// GLRT threshold on the normalized energy sum: 0.5 * F^{-1}_{chi2(2A)}(1 - pr_fa).
double detection_threshold(double pr_fa, int n_aps);

/// Pr_D = Q_A(sqrt(2 * sum_sinr), sqrt(F^{-1}_{chi2(2A)}(1 - pr_fa))).
double detection_probability(double sum_sinr, double pr_fa, int n_aps);

}  // namespace coisac
