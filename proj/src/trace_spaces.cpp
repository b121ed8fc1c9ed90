#include "tracesum/trace_spaces.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>

#include <Eigen/Eigenvalues>

#include "tracesum/errors.hpp"
#include "format.hpp"

namespace tracesum
{

WeightedSeqSpace WeightedSeqSpace::build(std::vector<ComponentMetric> metrics)
{
  WeightedSeqSpace space;
  for (std::size_t i = 0; i < metrics.size(); i++)
  {
    const auto &c = metrics[i];
    if (c.metric.rows() != c.metric.cols() || c.dim() < 1 || c.dim() > 2)
    {
      throw Error(ErrorCode::DimensionMismatch,
                  "component " + std::to_string(c.block_index) + " metric must be 1x1 or 2x2");
    }
    if (hermitian_defect(c.metric) > 1e-12)
    {
      throw Error(ErrorCode::NonPositiveMetric,
                  "component " + std::to_string(c.block_index) + " metric is not Hermitian");
    }
    Eigen::SelfAdjointEigenSolver<CMatrix> eig(c.metric);
    if (!(eig.eigenvalues().minCoeff() > 0.0))
    {
      throw Error(ErrorCode::NonPositiveMetric,
                  "component " + std::to_string(c.block_index) + " metric has eigenvalue " +
                    format_double(eig.eigenvalues().minCoeff()));
    }
    if (i > 0)
    {
      const int prev = metrics[i - 1].block_index;
      if (c.block_index == prev)
      {
        throw Error(ErrorCode::DuplicateIndex, "block index " + std::to_string(prev));
      }
      if (c.block_index < prev)
      {
        throw Error(ErrorCode::InvalidSpec, "block indexes must be increasing");
      }
    }
    space.offsets_.push_back(space.total_dim_);
    space.total_dim_ += c.dim();
  }
  space.components_ = std::move(metrics);
  return space;
}

CMatrix WeightedSeqSpace::metric_matrix() const
{
  CMatrix out = CMatrix::Zero(total_dim_, total_dim_);
  for (std::size_t i = 0; i < components_.size(); i++)
  {
    const int d = components_[i].dim();
    out.block(offsets_[i], offsets_[i], d, d) = components_[i].metric;
  }
  return out;
}

Complex WeightedSeqSpace::inner(const CVector &phi, const CVector &psi) const
{
  if (phi.size() != total_dim_ || psi.size() != total_dim_)
  {
    throw Error(ErrorCode::DimensionMismatch, "expected vectors of length " +
                                                std::to_string(total_dim_));
  }
  Complex sum = 0.0;
  for (std::size_t i = 0; i < components_.size(); i++)
  {
    const int d = components_[i].dim();
    sum += phi.segment(offsets_[i], d).dot(components_[i].metric * psi.segment(offsets_[i], d));
  }
  return sum;
}

double WeightedSeqSpace::norm(const CVector &phi) const
{
  return std::sqrt(std::max(0.0, inner(phi, phi).real()));
}

Complex weighted_inner(const WeightedSeqSpace &space, const CVector &phi, const CVector &psi)
{
  return space.inner(phi, psi);
}

ExponentFit fit_weight_exponent(const WeightedSeqSpace &space, int k_min, int k_max)
{
  std::vector<double> lx, ly;
  for (const auto &c : space.components())
  {
    const int k = std::abs(c.block_index);
    if (k < k_min || k > k_max)
    {
      continue;
    }
    if (c.dim() != 1 || k == 0)
    {
      throw Error(ErrorCode::InvalidSpec, "exponent fit needs scalar components with k != 0");
    }
    lx.push_back(std::log(static_cast<double>(k)));
    ly.push_back(std::log(c.metric(0, 0).real()));
  }
  const auto n = static_cast<int>(lx.size());
  if (n < 3)
  {
    throw Error(ErrorCode::InsufficientPoints,
                "exponent fit needs at least 3 components, got " + std::to_string(n));
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; i++)
  {
    mx += lx[i] / n;
    my += ly[i] / n;
  }
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; i++)
  {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  ExponentFit fit;
  fit.points = n;
  fit.slope = sxx > 0.0 ? sxy / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (int i = 0; i < n; i++)
  {
    const double r = ly[i] - fit.intercept - fit.slope * lx[i];
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

EquivalenceReport metric_equivalence(const WeightedSeqSpace &a, const WeightedSeqSpace &b)
{
  if (a.components().size() != b.components().size())
  {
    throw Error(ErrorCode::DimensionMismatch, "spaces have different component counts");
  }
  EquivalenceReport rep{std::numeric_limits<double>::infinity(), 0.0};
  for (std::size_t i = 0; i < a.components().size(); i++)
  {
    const auto &ma = a.components()[i].metric;
    const auto &mb = b.components()[i].metric;
    if (ma.rows() != mb.rows())
    {
      throw Error(ErrorCode::DimensionMismatch, "component dimensions differ");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<CMatrix> eig(mb, ma);
    rep.lower = std::min(rep.lower, eig.eigenvalues().minCoeff());
    rep.upper = std::max(rep.upper, eig.eigenvalues().maxCoeff());
  }
  return rep;
}

void write_weights_csv(std::ostream &os, const WeightedSeqSpace &space,
                       const std::vector<CMatrix> *r_factors)
{
  os << "block_index,row,col,metric" << (r_factors ? ",r" : "") << "\n";
  for (std::size_t i = 0; i < space.components().size(); i++)
  {
    const auto &c = space.components()[i];
    for (int r = 0; r < c.dim(); r++)
    {
      for (int s = 0; s < c.dim(); s++)
      {
        os << c.block_index << ',' << r << ',' << s << ',' << format_double(c.metric(r, s).real());
        if (r_factors)
        {
          os << ',' << format_double((*r_factors)[i](r, s).real());
        }
        os << '\n';
      }
    }
  }
}

}  // namespace tracesum
