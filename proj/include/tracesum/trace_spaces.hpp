#pragma once

#include <iosfwd>
#include <optional>
#include <vector>

#include "tracesum/types.hpp"

namespace tracesum
{

// Scalar product of one summand of the renormed trace space, as the matrix
// M with [phi, psi] = phi^H M psi. dim is 1 or 2.
struct ComponentMetric
{
  int block_index = 0;
  CMatrix metric;

  int dim() const { return static_cast<int>(metric.rows()); }
};

// Finite truncation of a direct sum of weighted trace spaces. Immutable.
class WeightedSeqSpace
{
public:
  WeightedSeqSpace() = default;

  // Validates each metric (Hermitian, positive-definite) and index ordering.
  static WeightedSeqSpace build(std::vector<ComponentMetric> metrics);

  const std::vector<ComponentMetric> &components() const { return components_; }
  int total_dim() const { return total_dim_; }
  int offset(std::size_t component) const { return offsets_[component]; }

  // Block-diagonal matrix of the full scalar product.
  CMatrix metric_matrix() const;

  Complex inner(const CVector &phi, const CVector &psi) const;
  double norm(const CVector &phi) const;

private:
  std::vector<ComponentMetric> components_;
  std::vector<int> offsets_;
  int total_dim_ = 0;
};

inline WeightedSeqSpace build_weighted_space(std::vector<ComponentMetric> metrics)
{
  return WeightedSeqSpace::build(std::move(metrics));
}

Complex weighted_inner(const WeightedSeqSpace &space, const CVector &phi, const CVector &psi);

struct ExponentFit
{
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // RMS deviation of log(weight) from the fitted line
  int points = 0;
};

// Least-squares slope of log(weight) against log|k| over scalar components
// with k_min <= |block_index| <= k_max.
ExponentFit fit_weight_exponent(const WeightedSeqSpace &space, int k_min, int k_max);

// Uniform equivalence of two metrics on the same component layout: the
// extreme generalized eigenvalues of (b, a) over all components.
struct EquivalenceReport
{
  double lower = 0.0;
  double upper = 0.0;
  double spread() const { return upper / lower; }
};

EquivalenceReport metric_equivalence(const WeightedSeqSpace &a, const WeightedSeqSpace &b);

// CSV rows "block_index,row,col,metric[,r]" with 17 significant digits.
// When r_factors is given it must align with the components.
void write_weights_csv(std::ostream &os, const WeightedSeqSpace &space,
                       const std::vector<CMatrix> *r_factors = nullptr);

}  // namespace tracesum
