#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tracesum/trace_sum.hpp"

namespace tracesum
{

// Coordinates used for extension parameters. Renormed keeps the original
// traces with metric Gram^{-1}; regularized rescales traces by r^{-1},
// r = Gram^{1/2}, so the metric is the identity.
enum class Representation
{
  Renormed,
  Regularized,
};

std::string to_string(Representation rep);

// (Pi, Theta) stored as an orthonormal basis U (m x p) of range(Pi) in the
// representation metric Q, plus Theta as a p x p Hermitian matrix in that
// basis. Pi = U U^H Q.
struct ExtensionParams
{
  Representation representation = Representation::Renormed;
  CMatrix basis;
  CMatrix theta;

  int rank() const { return static_cast<int>(basis.cols()); }
  int dim() const { return static_cast<int>(basis.rows()); }
};

// Metric of the given representation on the truncated trace space.
CMatrix representation_metric(const DirectSumProblem &problem, Representation rep);

CMatrix projection_matrix(const DirectSumProblem &problem, const ExtensionParams &params);

// Theta as an m x m matrix, U Theta U^H Q.
CMatrix theta_matrix(const DirectSumProblem &problem, const ExtensionParams &params);

// From dense m x m matrices. Pi must be idempotent and self-adjoint in the
// representation metric; Theta is compressed to range(Pi) and must be
// self-adjoint there.
ExtensionParams make_params(const DirectSumProblem &problem, Representation rep, const CMatrix &pi,
                            const CMatrix &theta);

// Boundary values psi = u at the trace endpoints (defect part). The
// conditions psi = V c and V^H n = L c, with n the inward derivatives,
// define a self-adjoint extension for any full-rank V (m x p) and Hermitian L.
ExtensionParams from_boundary_conditions(const DirectSumProblem &problem, const CMatrix &v,
                                         const CMatrix &l, Representation rep = Representation::Renormed);

struct BoundaryRelation
{
  CMatrix values;  // V
  CMatrix coupling;  // L
};

// Inverse of from_boundary_conditions with V normalized so that S = I.
BoundaryRelation physical_boundary_relation(const DirectSumProblem &problem, const ExtensionParams &params);

// Same extension expressed in the other representation.
ExtensionParams convert_params(const DirectSumProblem &problem, const ExtensionParams &params,
                               Representation target);

// Boundary-value basis Psi = B U (B = Q or r^{-1}); invariant across
// representations.
CMatrix boundary_basis(const DirectSumProblem &problem, const ExtensionParams &params);

// Line geometry: blocks left_half_line(x_1), interval(x_n, x_{n+1}), and
// right_half_line(x_N) or interval(x_N, wall).
std::vector<BlockSpec> line_blocks(const std::vector<double> &points, std::optional<double> wall = {});

enum class CouplingKind
{
  Delta,
  DeltaPrime,
};

struct PointCoupling
{
  CouplingKind kind = CouplingKind::Delta;
  double strength = 0.0;
};

// Trace indices of the two sides of point n in a line_blocks problem.
std::pair<int, int> point_components(const DirectSumProblem &problem, std::size_t point);

// Point couplings at the N points of a line_blocks problem. delta: u
// continuous, u'(x+) - u'(x-) = alpha u(x). delta': u' continuous,
// u(x+) - u(x-) = beta u'(x); beta = 0 is the free junction.
ExtensionParams coupling_params(const DirectSumProblem &problem, const std::vector<PointCoupling> &couplings,
                                Representation rep = Representation::Renormed);
ExtensionParams delta_params(const DirectSumProblem &problem, const std::vector<double> &strengths,
                             Representation rep = Representation::Renormed);
ExtensionParams delta_prime_params(const DirectSumProblem &problem, const std::vector<double> &strengths,
                                   Representation rep = Representation::Renormed);

// Pi = identity with Theta = diag(theta_k) for a mode family.
ExtensionParams robin_mode_params(const DirectSumProblem &problem, const std::vector<double> &theta,
                                  Representation rep = Representation::Renormed);

// Pi = 0: the extension is the decoupled sum.
ExtensionParams decoupled_params(const DirectSumProblem &problem, Representation rep = Representation::Renormed);

// Robin parameter rho with u'(0) = rho u(0) equivalent to a scalar
// renormed parameter theta on a FlatMode block.
double robin_parameter(const DirectSumProblem &problem, std::size_t block, double theta);

struct SearchOptions
{
  double z_min = 1e-6;
  double z_max = 100.0;
  double root_tol = 1e-13;      // bracket width, relative to max(1, |z|)
  double residual_tol = 1e-9;   // min singular value accepted at a root
  double null_tol = 1e-9;       // singular-value threshold for multiplicity
};

struct SpectralRoot
{
  double z = 0.0;
  double energy = 0.0;  // E = -z
  double residual = 0.0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
  int multiplicity = 1;
};

struct SpectrumReport
{
  std::vector<SpectralRoot> roots;
  std::string params_digest;
  int truncation = 0;
  double z_min = 0.0;
  double z_max = 0.0;
  int evaluations = 0;
  std::string source = "krein";

  std::string to_json() const;
};

class SecularSystem
{
public:
  SecularSystem(const DirectSumProblem &problem, ExtensionParams params);

  const DirectSumProblem &problem() const { return *problem_; }
  const ExtensionParams &params() const { return params_; }
  const CMatrix &boundary_basis() const { return psi_; }

  bool admissible(Complex z) const;

  // M(z) = Theta + U^H Q W(z) U with W block-diagonal of Weyl blocks.
  CMatrix secular_matrix(Complex z) const;
  // dM/dz = Psi^H Gram(z) Psi at real z.
  CMatrix secular_derivative(double z) const;

  SpectrumReport find_eigenvalues(const SearchOptions &options = {}) const;

  std::string params_digest() const;

private:
  void require_admissible(Complex z) const;
  int negative_count(double z) const;

  const DirectSumProblem *problem_;
  ExtensionParams params_;
  CMatrix psi_;
  CMatrix metric_;
};

inline CMatrix secular_matrix(const SecularSystem &sys, Complex z) { return sys.secular_matrix(z); }
inline SpectrumReport find_eigenvalues(const SecularSystem &sys, const SearchOptions &opts = {})
{
  return sys.find_eigenvalues(opts);
}

struct Eigenfunction
{
  double z = 0.0;
  CVector boundary_values;  // psi, global trace layout
  PiecewiseFn blocks;       // unit L^2 norm over the sum
  double norm_factor = 1.0;
};

// Null vectors of M at z_root mapped to u_k = G_k(z) psi_k, orthonormal in L^2.
std::vector<Eigenfunction> eigenfunctions(const SecularSystem &sys, double z_root, double null_tol = 1e-9);
Eigenfunction eigenfunction(const SecularSystem &sys, double z_root, double null_tol = 1e-9);

// (-A_{Pi,Theta} + z)^{-1} f = R(z) f + G(z) Psi M(z)^{-1} Psi^H G(conj z)^* f.
PiecewiseFn resolvent_apply(const SecularSystem &sys, Complex z, const PiecewiseFn &f);
PiecewiseFn free_resolvent_apply(const DirectSumProblem &problem, Complex z, const PiecewiseFn &f);

// Sum over blocks of int conj(f) g.
Complex l2_inner(const DirectSumProblem &problem, const PiecewiseFn &f, const PiecewiseFn &g);

std::string digest_matrices(const std::vector<const CMatrix *> &mats);

}  // namespace tracesum
