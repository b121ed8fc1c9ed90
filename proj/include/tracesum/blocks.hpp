#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tracesum/quadrature.hpp"
#include "tracesum/types.hpp"

namespace tracesum
{

// The five summand kinds. All act as A = d^2/dx^2 (minus k^2 or the Grushin
// potential for modes) with Dirichlet conditions at finite endpoints; the
// trace is the inward derivative at each finite endpoint.
enum class BlockKind
{
  LeftHalfLine,   // (-inf, b]
  RightHalfLine,  // [a, +inf)
  Interval,       // [a, b]
  FlatMode,       // [0, +inf), A = d^2 - k^2
  GrushinMode,    // [0, +inf), A = d^2 - (alpha/x) d - k^2 x^(2 alpha), L^2(x^-alpha dx)
};

std::string to_string(BlockKind kind);

struct BlockSpec
{
  BlockKind kind = BlockKind::Interval;
  double a = 0.0;
  double b = 1.0;
  int mode = 0;
  double alpha = 0.0;
  QuadratureRule quadrature;

  static BlockSpec left_half_line(double b);
  static BlockSpec right_half_line(double a);
  static BlockSpec interval(double a, double b);
  static BlockSpec flat_mode(int k);
  static BlockSpec grushin_mode(int k, double alpha);
};

// Location of one trace component on the real line. `block_on_right` is true
// when the block extends to the right of the endpoint (trace = +u').
struct TraceEndpoint
{
  double position;
  bool block_on_right;
};

// Differentiable function on a block domain, used for Green-identity checks.
// Missing derivatives are taken by finite differences.
struct DomainFunction
{
  ScalarFn value;
  ScalarFn derivative;
  ScalarFn second_derivative;
};

class BlockOperator
{
public:
  explicit BlockOperator(BlockSpec spec);

  const BlockSpec &spec() const { return spec_; }
  BlockKind kind() const { return spec_.kind; }
  int trace_dim() const { return spec_.kind == BlockKind::Interval ? 2 : 1; }
  double lower() const;
  double upper() const;
  bool contains(double x) const;
  std::vector<TraceEndpoint> endpoints() const;

  // True when z lies in the resolvent set of -A on this block.
  bool admissible(Complex z) const;

  // Defect functions g_i(z; .) spanning the range of G(z); g_i carries unit
  // boundary value at trace component i and zero at the others.
  CVector green_basis(Complex z, double x) const;
  Complex green_eval(Complex z, const CVector &xi, double x) const;

  // Dirichlet-to-Neumann matrix D(z) = tau G(z) and its z-derivative.
  CMatrix dtn(Complex z) const;
  CMatrix dtn_derivative(Complex z) const;

  // G(z1)^* G(z2).
  CMatrix cross_gram(Complex z1, Complex z2) const;
  CMatrix gram(double lambda) const;

  // (z - lambda) G(lambda)^* G(z) Gram(lambda)^{-1} = tau(G_(lambda) - G_(z)).
  CMatrix weyl_block(Complex z, double lambda) const;

  Complex resolvent_kernel(Complex z, double x, double y) const;
  Complex resolvent_apply(Complex z, const ScalarFn &f, double x) const;

  // G(z)^* f, componentwise integral of conj(g_i(z)) f.
  CVector green_adjoint_apply(Complex z, const ScalarFn &f) const;

  // Values at x of R(lambda) g_i(lambda) = -d/dz g_i(z) at z = lambda.
  // Grushin modes: closed form at lambda = 0 only.
  CVector lift_basis(double lambda, double x) const;

  // Inward derivatives at the endpoints, by one-sided differences. Grushin
  // modes use tau f = int (-A f) g x^-alpha dx instead, valid for f(0) = 0.
  CVector numeric_trace(const ScalarFn &f, double h = 1e-3) const;

  // (-A f)(x) on a Grushin mode by finite differences in s = x^p / p,
  // p = alpha + 1, where -A = x^(2 alpha) (-d^2/ds^2 + k^2).
  Complex grushin_apply_fd(const ScalarFn &f, double x) const;

  // Quadrature for the block's L^2 measure (weights include x^-alpha on
  // Grushin modes).
  QuadNodes nodes(std::span<const double> breaks = {}) const;

  // Quadrature of int conj(f) g dx in the block's L^2 (x^-alpha dx for Grushin).
  Complex l2_inner(const ScalarFn &f, const ScalarFn &g, std::span<const double> breaks = {}) const;

private:
  Complex omega(Complex z) const;
  double length() const { return spec_.b - spec_.a; }
  void require_kernel(Complex z, const char *what) const;

  BlockSpec spec_;
};

struct GramMatrix
{
  CMatrix matrix;
  double base_point = 0.0;
};

BlockOperator build_block(const BlockSpec &spec);
Complex green_eval(const BlockOperator &block, Complex z, const CVector &xi, double x);
GramMatrix gram(const BlockOperator &block, double lambda);
CMatrix weyl_block(const BlockOperator &block, Complex z, double lambda);
Complex resolvent_kernel_apply(const BlockOperator &block, Complex z, const ScalarFn &f, double x);

// Green-type identity for a FlatMode block with base point i:
// elements u = u0 + G0 phi, G0 = (G(i) + G(-i))/2, S^* u = A u0 + A G0 phi,
// beta0 u = tau u0, beta1 u = phi. Returns
// |<S*u, v> - <u, S*v> - conj(beta1 u) beta0 v + conj(beta0 u) beta1 v|.
struct BoundaryElement
{
  DomainFunction regular;  // u0, must vanish at 0
  Complex phi = 0.0;
};

double green_identity_residual(const BlockOperator &block, const BoundaryElement &u,
                               const BoundaryElement &v);

}  // namespace tracesum
