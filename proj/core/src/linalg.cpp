#include "coisac/linalg.hpp"

#include <Eigen/Eigenvalues>

namespace coisac {

double hermitian_lambda_max(const CMat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

}  // namespace coisac
