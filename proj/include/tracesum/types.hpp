#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace tracesum
{

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

// A function on one block (an interval or half-line of the real axis).
using ScalarFn = std::function<Complex(double)>;

// One function per block of a direct sum.
using PiecewiseFn = std::vector<ScalarFn>;

// Tabulated function. The grid is strictly increasing and lies inside the
// owning block; values[i] is the function at grid[i].
struct Sampled
{
  std::vector<double> grid;
  std::vector<Complex> values;
};

Sampled sample(const ScalarFn &fn, const std::vector<double> &grid);

// Relative Hermitian defect ||A - A^H|| / max(1, ||A||).
double hermitian_defect(const CMatrix &a);

// Principal square root of a Hermitian positive-definite matrix.
CMatrix hermitian_sqrt(const CMatrix &a);

}  // namespace tracesum
