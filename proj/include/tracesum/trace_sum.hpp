#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "tracesum/blocks.hpp"
#include "tracesum/trace_spaces.hpp"

namespace tracesum
{

// Exact: [.,.]_(k) = Gram_k(lambda)^{-1}. Simplified: the equivalent products
// xi.zeta/d (intervals), |k| xi.zeta (flat), |k|^((1-a)/(1+a)) xi.zeta
// (Grushin) and the plain product on half-lines.
enum class MetricChoice
{
  Exact,
  Simplified,
};

struct AssembleOptions
{
  MetricChoice metric = MetricChoice::Exact;
  // Labels for the trace-space components. Empty: mode index for mode
  // families, position 0..n-1 otherwise.
  std::vector<int> block_indices;
};

// Finite truncation of the direct sum with a common real base point.
class DirectSumProblem
{
public:
  const std::vector<BlockOperator> &blocks() const { return blocks_; }
  const BlockOperator &block(std::size_t i) const { return blocks_[i]; }
  std::size_t truncation_size() const { return blocks_.size(); }
  double base_point() const { return base_point_; }
  MetricChoice metric_choice() const { return metric_; }
  const WeightedSeqSpace &space() const { return space_; }
  int total_dim() const { return space_.total_dim(); }
  int offset(std::size_t block) const { return space_.offset(block); }
  int block_index(std::size_t block) const { return space_.components()[block].block_index; }

  const CMatrix &gram(std::size_t block) const { return grams_[block]; }
  // Block-diagonal assemblies over the whole truncation.
  CMatrix gram_matrix() const;
  CMatrix metric_matrix() const { return space_.metric_matrix(); }

  // Component range of a block inside a global trace vector.
  CVector component(const CVector &phi, std::size_t block) const;

  friend DirectSumProblem assemble_problem(const std::vector<BlockSpec> &specs, double lambda,
                                           const AssembleOptions &options);

private:
  std::vector<BlockOperator> blocks_;
  std::vector<CMatrix> grams_;
  WeightedSeqSpace space_;
  double base_point_ = 0.0;
  MetricChoice metric_ = MetricChoice::Exact;
};

DirectSumProblem assemble_problem(const std::vector<BlockSpec> &specs, double lambda,
                                  const AssembleOptions &options = {});

// Base point used when none is configured: 1 with half-lines, else 0.
double default_base_point(const std::vector<BlockSpec> &specs);

// Canonical right inverse iota = R(lambda) G(lambda) Gram^{-1}, applied to a
// global trace vector; one function per block.
PiecewiseFn lift(const DirectSumProblem &problem, const CVector &phi);

// Traces of per-block functions by one-sided differences (inverse of lift).
CVector numeric_trace(const DirectSumProblem &problem, const PiecewiseFn &v, double h = 1e-3);

// || (-A + lambda) v || over all blocks, with v'' by finite differences.
double graph_norm_fd(const DirectSumProblem &problem, const PiecewiseFn &v);

struct NormEstimate
{
  double estimate = 0.0;
  int grid_intervals = 0;
  int iterations = 0;
};

struct NormEstimateOptions
{
  std::uint64_t seed = 1;
  double stabilize_tol = 1e-3;
  int initial_intervals = 200;
  int max_intervals = 1 << 14;
};

// Power-iteration estimate of |||iota_k tau_k||| in the graph norm, on a
// uniform grid with second-order differences; the grid doubles until two
// successive estimates agree to stabilize_tol.
NormEstimate iota_tau_norm_estimate(const DirectSumProblem &problem, std::size_t block,
                                    const NormEstimateOptions &options = {});

// Graph-norm discretization of iota_k tau_k at a fixed grid size; exposed so
// idempotence can be checked directly. Returns P with u -> P u on interior
// nodes, plus the grid.
struct DiscreteLiftProjection
{
  RMatrix projection;
  RMatrix graph_operator;  // (-A + lambda) with Dirichlet ends
  std::vector<double> grid;
};

DiscreteLiftProjection discrete_lift_projection(const DirectSumProblem &problem,
                                                std::size_t block, int intervals);

struct RangeGapReport
{
  double sup_inverse_gram = 0.0;
  ExponentFit growth;
  bool naive_target_not_surjective = false;
};

// Growth of ||Gram_k^{-1}|| against |block index| over [k_min, k_max].
RangeGapReport naive_range_gap(const DirectSumProblem &problem, int k_min, int k_max);

struct RegularizedRep
{
  std::vector<CMatrix> r_factors;  // Gram_k^{1/2}
  bool flat_target = true;
};

RegularizedRep regularized_rep(const DirectSumProblem &problem);

// Regularized traces r_k^{-1} phi_k: their flat norm equals |phi|_o.
CVector regularized_coordinates(const DirectSumProblem &problem, const RegularizedRep &rep,
                                const CVector &phi);

}  // namespace tracesum
