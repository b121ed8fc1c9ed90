#include "tracesum/trace_sum.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

#include "tracesum/errors.hpp"
#include "tracesum/parallel.hpp"
#include "format.hpp"

namespace tracesum
{

namespace
{

bool is_mode(BlockKind k) { return k == BlockKind::FlatMode || k == BlockKind::GrushinMode; }

CMatrix simplified_metric(const BlockOperator &b)
{
  const auto &s = b.spec();
  switch (s.kind)
  {
    case BlockKind::Interval:
      return CMatrix::Identity(2, 2) / (s.b - s.a);
    case BlockKind::FlatMode:
      return CMatrix::Constant(1, 1, std::abs(s.mode));
    case BlockKind::GrushinMode:
      return CMatrix::Constant(1, 1, std::pow(std::abs(s.mode), (1.0 - s.alpha) / (1.0 + s.alpha)));
    default:
      return CMatrix::Identity(1, 1);
  }
}

double graph_shift(const BlockOperator &b, double lambda)
{
  const double k = b.spec().mode;
  return (b.kind() == BlockKind::FlatMode ? k * k : 0.0) + lambda;
}

// Symmetric tridiagonal solve (Thomas), constant off-diagonal.
RVector solve_tridiagonal(const RVector &diag, double off, const RVector &rhs)
{
  const auto n = diag.size();
  RVector c(n), d(n);
  double denom = diag(0);
  c(0) = off / denom;
  d(0) = rhs(0) / denom;
  for (Eigen::Index i = 1; i < n; i++)
  {
    denom = diag(i) - off * c(i - 1);
    c(i) = off / denom;
    d(i) = (rhs(i) - off * d(i - 1)) / denom;
  }
  RVector x(n);
  x(n - 1) = d(n - 1);
  for (Eigen::Index i = n - 1; i-- > 0;)
  {
    x(i) = d(i) - c(i) * x(i + 1);
  }
  return x;
}

struct Discretization
{
  double lo, h;
  int n;  // interior nodes
  RVector diag;
  double off;
  RMatrix lift;   // n x m, columns = iota e_j at the nodes
  RMatrix trace;  // m x n, second-order one-sided inward derivatives
};

Discretization discretize(const DirectSumProblem &problem, std::size_t index, int intervals)
{
  const auto &b = problem.block(index);
  const double lambda = problem.base_point();
  double lo = b.lower(), hi = b.upper();
  if (b.kind() == BlockKind::GrushinMode)
  {
    throw Error(ErrorCode::UnsupportedBlock, "norm estimate is not available for Grushin modes");
  }
  const double decay = std::sqrt(graph_shift(b, lambda));
  if (!std::isfinite(lo))
  {
    lo = hi - 40.0 / decay;
  }
  if (!std::isfinite(hi))
  {
    hi = lo + 40.0 / decay;
  }
  Discretization d;
  d.lo = lo;
  d.h = (hi - lo) / intervals;
  d.n = intervals - 1;
  const double h2 = d.h * d.h;
  d.diag = RVector::Constant(d.n, 2.0 / h2 + graph_shift(b, lambda));
  d.off = -1.0 / h2;

  const int m = b.trace_dim();
  const CMatrix ginv = problem.gram(index).inverse();
  d.lift.resize(d.n, m);
  for (int i = 0; i < d.n; i++)
  {
    const CVector basis = b.lift_basis(lambda, lo + (i + 1) * d.h);
    d.lift.row(i) = (basis.transpose() * ginv).real();
  }
  d.trace = RMatrix::Zero(m, d.n);
  const auto ends = b.endpoints();
  for (int j = 0; j < m; j++)
  {
    // Truncated half-lines keep only their finite endpoint.
    if (ends[j].block_on_right)
    {
      d.trace(j, 0) = 4.0 / (2.0 * d.h);
      d.trace(j, 1) = -1.0 / (2.0 * d.h);
    }
    else
    {
      d.trace(j, d.n - 1) = 4.0 / (2.0 * d.h);
      d.trace(j, d.n - 2) = -1.0 / (2.0 * d.h);
    }
  }
  // Normalize so the discrete trace inverts the sampled lift exactly; the
  // correction is O(h^2) and makes lift * trace a true projection.
  const RMatrix tl = d.trace * d.lift;
  d.lift = (d.lift * tl.inverse()).eval();
  return d;
}

RVector apply_graph(const Discretization &d, const RVector &u)
{
  RVector out(d.n);
  for (int i = 0; i < d.n; i++)
  {
    out(i) = d.diag(i) * u(i) + d.off * ((i > 0 ? u(i - 1) : 0.0) + (i + 1 < d.n ? u(i + 1) : 0.0));
  }
  return out;
}

std::pair<double, int> power_norm(const Discretization &d, std::uint64_t seed)
{
  // T = X Y^T with X = B S and Y = B^{-1} J^T; the norm of T is the graph
  // norm of iota tau since f = B u is an isometry onto l2.
  const auto m = d.lift.cols();
  RMatrix x(d.n, m), y(d.n, m);
  for (Eigen::Index j = 0; j < m; j++)
  {
    x.col(j) = apply_graph(d, d.lift.col(j));
    y.col(j) = solve_tridiagonal(d.diag, d.off, d.trace.row(j).transpose());
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  RVector v(d.n);
  for (int i = 0; i < d.n; i++)
  {
    v(i) = normal(rng);
  }
  v.normalize();
  double est = 0.0;
  int it = 0;
  for (; it < 500; it++)
  {
    const RVector tv = x * (y.transpose() * v);
    const double next = tv.norm();
    RVector w = y * (x.transpose() * tv);
    const double wn = w.norm();
    if (wn == 0.0)
    {
      est = 0.0;
      break;
    }
    v = w / wn;
    if (it > 0 && std::abs(next - est) <= 1e-14 * std::max(1.0, next))
    {
      est = next;
      break;
    }
    est = next;
  }
  return {est, it + 1};
}

}  // namespace

CMatrix DirectSumProblem::gram_matrix() const
{
  const int m = total_dim();
  CMatrix out = CMatrix::Zero(m, m);
  for (std::size_t i = 0; i < blocks_.size(); i++)
  {
    const int d = blocks_[i].trace_dim();
    out.block(offset(i), offset(i), d, d) = grams_[i];
  }
  return out;
}

CVector DirectSumProblem::component(const CVector &phi, std::size_t block) const
{
  if (phi.size() != total_dim())
  {
    throw Error(ErrorCode::DimensionMismatch,
                "trace vector has length " + std::to_string(phi.size()) + ", expected " +
                  std::to_string(total_dim()));
  }
  return phi.segment(offset(block), blocks_[block].trace_dim());
}

double default_base_point(const std::vector<BlockSpec> &specs)
{
  for (const auto &s : specs)
  {
    if (s.kind == BlockKind::LeftHalfLine || s.kind == BlockKind::RightHalfLine)
    {
      return 1.0;
    }
  }
  return 0.0;
}

DirectSumProblem assemble_problem(const std::vector<BlockSpec> &specs, double lambda,
                                  const AssembleOptions &options)
{
  DirectSumProblem p;
  p.base_point_ = lambda;
  p.metric_ = options.metric;
  const bool all_modes =
    !specs.empty() && std::all_of(specs.begin(), specs.end(), [](const BlockSpec &s) { return is_mode(s.kind); });
  if (!options.block_indices.empty() && options.block_indices.size() != specs.size())
  {
    throw Error(ErrorCode::DimensionMismatch, "one block index per block is required");
  }
  std::vector<ComponentMetric> metrics;
  for (std::size_t i = 0; i < specs.size(); i++)
  {
    p.blocks_.emplace_back(specs[i]);
    const auto &b = p.blocks_.back();
    CMatrix g;
    try
    {
      g = b.gram(lambda);
    }
    catch (const Error &e)
    {
      throw Error(e.code(), "block " + std::to_string(i) + " (" + to_string(b.kind()) + "): " + e.what());
    }
    p.grams_.push_back(g);
    int index = static_cast<int>(i);
    if (!options.block_indices.empty())
    {
      index = options.block_indices[i];
    }
    else if (all_modes)
    {
      index = b.spec().mode;
    }
    metrics.push_back({index, options.metric == MetricChoice::Exact ? CMatrix(g.inverse()) : simplified_metric(b)});
  }
  p.space_ = WeightedSeqSpace::build(std::move(metrics));
  return p;
}

PiecewiseFn lift(const DirectSumProblem &problem, const CVector &phi)
{
  PiecewiseFn out;
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    const auto &b = problem.block(i);
    const CVector psi = problem.gram(i).inverse() * problem.component(phi, i);
    const double lambda = problem.base_point();
    out.push_back([&b, psi, lambda](double x) -> Complex { return b.lift_basis(lambda, x).transpose() * psi; });
  }
  return out;
}

CVector numeric_trace(const DirectSumProblem &problem, const PiecewiseFn &v, double h)
{
  if (v.size() != problem.truncation_size())
  {
    throw Error(ErrorCode::DimensionMismatch, "one function per block is required");
  }
  CVector out(problem.total_dim());
  parallel_for(v.size(), [&](std::size_t i) {
    out.segment(problem.offset(i), problem.block(i).trace_dim()) = problem.block(i).numeric_trace(v[i], h);
  });
  return out;
}

double graph_norm_fd(const DirectSumProblem &problem, const PiecewiseFn &v)
{
  if (v.size() != problem.truncation_size())
  {
    throw Error(ErrorCode::DimensionMismatch, "one function per block is required");
  }
  const double h = 1e-3;
  std::vector<double> sums(v.size(), 0.0);
  parallel_for(v.size(), [&](std::size_t i) {
    const auto &b = problem.block(i);
    const auto &f = v[i];
    const double c = graph_shift(b, problem.base_point());
    double sum = 0.0;
    for (const auto &n : b.nodes())
    {
      const double x = n.x;
      if (b.kind() == BlockKind::GrushinMode)
      {
        sum += n.w * std::norm(b.grushin_apply_fd(f, x));
        continue;
      }
      Complex d2;
      if (b.contains(x - 2 * h) && b.contains(x + 2 * h))
      {
        d2 = (-f(x - 2 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2 * h)) / (12.0 * h * h);
      }
      else
      {
        const double s = b.contains(x + 5 * h) ? h : -h;
        d2 = (45.0 * f(x) - 154.0 * f(x + s) + 214.0 * f(x + 2 * s) - 156.0 * f(x + 3 * s) +
              61.0 * f(x + 4 * s) - 10.0 * f(x + 5 * s)) /
             (12.0 * h * h);
      }
      sum += n.w * std::norm(-d2 + c * f(x));
    }
    sums[i] = sum;
  });
  double total = 0.0;
  for (double s : sums)
  {
    total += s;
  }
  return std::sqrt(total);
}

DiscreteLiftProjection discrete_lift_projection(const DirectSumProblem &problem, std::size_t block,
                                                int intervals)
{
  const Discretization d = discretize(problem, block, intervals);
  DiscreteLiftProjection out;
  out.projection = d.lift * d.trace;
  out.graph_operator = RMatrix::Zero(d.n, d.n);
  for (int i = 0; i < d.n; i++)
  {
    out.graph_operator(i, i) = d.diag(i);
    if (i + 1 < d.n)
    {
      out.graph_operator(i, i + 1) = d.off;
      out.graph_operator(i + 1, i) = d.off;
    }
    out.grid.push_back(d.lo + (i + 1) * d.h);
  }
  return out;
}

NormEstimate iota_tau_norm_estimate(const DirectSumProblem &problem, std::size_t block,
                                    const NormEstimateOptions &options)
{
  if (block >= problem.truncation_size())
  {
    throw Error(ErrorCode::DimensionMismatch, "block index out of range");
  }
  NormEstimate prev;
  for (int n = options.initial_intervals; n <= options.max_intervals; n *= 2)
  {
    const auto [est, iters] = power_norm(discretize(problem, block, n), options.seed);
    NormEstimate cur{est, n, iters};
    if (prev.grid_intervals > 0 && std::abs(cur.estimate - prev.estimate) < options.stabilize_tol)
    {
      return cur;
    }
    prev = cur;
  }
  return prev;
}

RangeGapReport naive_range_gap(const DirectSumProblem &problem, int k_min, int k_max)
{
  std::vector<ComponentMetric> norms;
  RangeGapReport rep;
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    const int k = problem.block_index(i);
    if (std::abs(k) < k_min || std::abs(k) > k_max || k == 0)
    {
      continue;
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(problem.gram(i));
    const double inv_norm = 1.0 / eig.eigenvalues().minCoeff();
    rep.sup_inverse_gram = std::max(rep.sup_inverse_gram, inv_norm);
    norms.push_back({k, CMatrix::Constant(1, 1, inv_norm)});
  }
  std::stable_sort(norms.begin(), norms.end(),
                   [](const auto &a, const auto &b) { return a.block_index < b.block_index; });
  rep.growth = fit_weight_exponent(WeightedSeqSpace::build(std::move(norms)), k_min, k_max);
  rep.naive_target_not_surjective = rep.growth.slope > 1e-9;
  return rep;
}

RegularizedRep regularized_rep(const DirectSumProblem &problem)
{
  RegularizedRep rep;
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    rep.r_factors.push_back(hermitian_sqrt(problem.gram(i)));
  }
  return rep;
}

CVector regularized_coordinates(const DirectSumProblem &problem, const RegularizedRep &rep,
                                const CVector &phi)
{
  CVector out(problem.total_dim());
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    out.segment(problem.offset(i), problem.block(i).trace_dim()) =
      rep.r_factors[i].inverse() * problem.component(phi, i);
  }
  return out;
}

}  // namespace tracesum
