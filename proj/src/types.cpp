#include "tracesum/types.hpp"

#include <Eigen/Eigenvalues>

namespace tracesum
{

Sampled sample(const ScalarFn &fn, const std::vector<double> &grid)
{
  Sampled out;
  out.grid = grid;
  out.values.reserve(grid.size());
  for (double x : grid)
  {
    out.values.push_back(fn(x));
  }
  return out;
}

double hermitian_defect(const CMatrix &a)
{
  if (a.size() == 0)
  {
    return 0.0;
  }
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() / scale;
}

CMatrix hermitian_sqrt(const CMatrix &a)
{
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(0.5 * (a + a.adjoint()));
  RVector ev = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * ev.cast<Complex>().asDiagonal() * eig.eigenvectors().adjoint();
}

}  // namespace tracesum
