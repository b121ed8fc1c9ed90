#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tracesum/krein.hpp"

namespace tracesum
{

struct OraclePoint
{
  double position = 0.0;
  PointCoupling coupling;
};

// Point interactions on the full line, or on (-inf, wall] with a Dirichlet
// wall when `wall` is set.
struct OracleModel
{
  std::vector<OraclePoint> points;
  std::optional<double> wall;

  // Validates ordering and the wall position.
  void validate() const;
  std::vector<double> positions() const;
  std::vector<PointCoupling> couplings() const;
};

OracleModel delta_model(const std::vector<double> &points, const std::vector<double> &strengths,
                        std::optional<double> wall = {});
OracleModel delta_prime_model(const std::vector<double> &points, const std::vector<double> &strengths,
                              std::optional<double> wall = {});

struct TransferOptions
{
  int scan_points = 4000;
  double root_tol = 1e-12;
};

// Bound states E in [e_min, e_max] (both < 0) by matching decaying
// exponentials through the jump conditions.
SpectrumReport transfer_matrix_spectrum(const OracleModel &model, double e_min, double e_max,
                                        const TransferOptions &options = {});

// Normalized mismatch g(E); zero exactly at bound states.
double transfer_mismatch(const OracleModel &model, double energy);

struct FdGrid
{
  double margin = 20.0;  // box [x_1 - margin, x_N + margin] (or up to the wall)
  double h = 1e-3;
};

// Lowest eigenvalues of the second-order stencil with delta strengths alpha/h
// added at the grid node of each point (points must lie on the grid). Returns
// eigenvalues below e_max.
std::vector<double> fd_spectrum(const OracleModel &model, const FdGrid &grid, double e_max = 0.0);

// -f'' + k^2 f on [0, length] with u'(0) = rho u(0) (Dirichlet when rho is
// empty) and Dirichlet at the far end; eigenvalues below k^2.
std::vector<double> mode_fd_spectrum(int k, std::optional<double> robin, double length = 20.0,
                                     double h = 1e-4);

// Eigenvalues below `upper` of a symmetric tridiagonal matrix, ascending, by
// Sturm-sequence bisection.
std::vector<double> tridiagonal_eigenvalues_below(const RVector &diag, const RVector &off, double upper,
                                                  double tol = 1e-13);

SpectrumReport to_report(const std::vector<double> &energies, const std::string &source);

std::string model_digest(const OracleModel &model);

}  // namespace tracesum
