// Common complex linear-algebra aliases and small helpers shared by every module.
#pragma once

#include <complex>
#include <cstdint>

#include <Eigen/Dense>

namespace coisac {

using cd = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// 10^(dB/10).
inline double db2lin(double db) { return std::pow(10.0, db / 10.0); }
inline double lin2db(double lin) { return 10.0 * std::log10(lin); }

/// Largest eigenvalue of a Hermitian matrix (exact, via self-adjoint eigensolver).
double hermitian_lambda_max(const CMat& m);

}  // namespace coisac
