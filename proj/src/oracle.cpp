#include "tracesum/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "tracesum/errors.hpp"
#include "tracesum/parallel.hpp"
#include "format.hpp"

namespace tracesum
{

namespace
{

// (u, u'/kappa) carried with a positive normalization.
struct State
{
  double u;
  double v;

  void normalize()
  {
    const double n = std::hypot(u, v);
    u /= n;
    v /= n;
  }
};

// Free propagation over distance d, divided by exp(kappa d).
State propagate(State s, double kappa, double d)
{
  const double e = std::exp(-2.0 * kappa * d);
  const double c = 0.5 * (1.0 + e), sh = 0.5 * (1.0 - e);
  State out{c * s.u + sh * s.v, sh * s.u + c * s.v};
  out.normalize();
  return out;
}

State jump(State s, double kappa, const PointCoupling &c)
{
  if (c.kind == CouplingKind::Delta)
  {
    s.v += c.strength * s.u / kappa;
  }
  else
  {
    s.u += c.strength * kappa * s.v;
  }
  s.normalize();
  return s;
}

double mismatch_kappa(const OracleModel &model, double kappa)
{
  State s{1.0, 1.0};
  s.normalize();
  const auto &pts = model.points;
  for (std::size_t i = 0; i < pts.size(); i++)
  {
    if (i > 0)
    {
      s = propagate(s, kappa, pts[i].position - pts[i - 1].position);
    }
    s = jump(s, kappa, pts[i].coupling);
  }
  if (model.wall)
  {
    s = propagate(s, kappa, *model.wall - pts.back().position);
    return s.u;
  }
  return (s.u + s.v) / std::sqrt(2.0);
}

int sturm_count(const RVector &diag, const RVector &off, double x)
{
  int count = 0;
  double q = diag(0) - x;
  const double tiny = std::numeric_limits<double>::min() * 1e10;
  if (q < 0.0)
  {
    count++;
  }
  for (Eigen::Index i = 1; i < diag.size(); i++)
  {
    if (q == 0.0)
    {
      q = tiny;
    }
    q = diag(i) - x - off(i - 1) * off(i - 1) / q;
    if (q < 0.0)
    {
      count++;
    }
  }
  return count;
}

int grid_index(double x, double lo, double h, const char *what)
{
  const double t = (x - lo) / h;
  const double j = std::round(t);
  if (std::abs(t - j) > 1e-6)
  {
    throw Error(ErrorCode::InvalidSpec, std::string(what) + " at " + format_double(x) + " is not on the grid of step " +
                                          format_double(h));
  }
  return static_cast<int>(j);
}

}  // namespace

void OracleModel::validate() const
{
  if (points.empty())
  {
    throw Error(ErrorCode::InvalidSpec, "oracle model needs at least one point");
  }
  for (std::size_t i = 1; i < points.size(); i++)
  {
    if (!(points[i].position > points[i - 1].position))
    {
      throw Error(ErrorCode::InvalidSpec, "points must be strictly increasing");
    }
  }
  if (wall && !(*wall > points.back().position))
  {
    throw Error(ErrorCode::InvalidSpec, "wall must lie right of the last point");
  }
}

std::vector<double> OracleModel::positions() const
{
  std::vector<double> out;
  for (const auto &p : points)
  {
    out.push_back(p.position);
  }
  return out;
}

std::vector<PointCoupling> OracleModel::couplings() const
{
  std::vector<PointCoupling> out;
  for (const auto &p : points)
  {
    out.push_back(p.coupling);
  }
  return out;
}

OracleModel delta_model(const std::vector<double> &points, const std::vector<double> &strengths,
                        std::optional<double> wall)
{
  if (points.size() != strengths.size())
  {
    throw Error(ErrorCode::ModelMismatch, "one strength per point is required");
  }
  OracleModel m;
  for (std::size_t i = 0; i < points.size(); i++)
  {
    m.points.push_back({points[i], {CouplingKind::Delta, strengths[i]}});
  }
  m.wall = wall;
  m.validate();
  return m;
}

OracleModel delta_prime_model(const std::vector<double> &points, const std::vector<double> &strengths,
                              std::optional<double> wall)
{
  if (points.size() != strengths.size())
  {
    throw Error(ErrorCode::ModelMismatch, "one strength per point is required");
  }
  OracleModel m;
  for (std::size_t i = 0; i < points.size(); i++)
  {
    m.points.push_back({points[i], {CouplingKind::DeltaPrime, strengths[i]}});
  }
  m.wall = wall;
  m.validate();
  return m;
}

double transfer_mismatch(const OracleModel &model, double energy)
{
  if (!(energy < 0.0))
  {
    throw Error(ErrorCode::OutOfDomain, "transfer-matrix energies must be negative");
  }
  model.validate();
  return mismatch_kappa(model, std::sqrt(-energy));
}

SpectrumReport transfer_matrix_spectrum(const OracleModel &model, double e_min, double e_max,
                                        const TransferOptions &options)
{
  model.validate();
  if (!(e_min < e_max) || !(e_max < 0.0))
  {
    throw Error(ErrorCode::OutOfDomain, "energy interval must satisfy e_min < e_max < 0");
  }
  const double k_lo = std::sqrt(-e_max), k_hi = std::sqrt(-e_min);
  const int n = std::max(2, options.scan_points);
  std::vector<double> kappa(n + 1), g(n + 1);
  for (int i = 0; i <= n; i++)
  {
    kappa[i] = k_lo + (k_hi - k_lo) * i / n;
  }
  parallel_for(static_cast<std::size_t>(n + 1), [&](std::size_t i) { g[i] = mismatch_kappa(model, kappa[i]); });

  std::vector<double> energies;
  std::vector<std::pair<double, double>> brackets;
  std::vector<double> residuals;
  for (int i = 0; i < n; i++)
  {
    double a = kappa[i], b = kappa[i + 1], ga = g[i], gb = g[i + 1];
    if (ga == 0.0 && i > 0)
    {
      continue;  // counted as the right end of the previous cell
    }
    if (ga != 0.0 && gb != 0.0 && std::signbit(ga) == std::signbit(gb))
    {
      continue;
    }
    if (ga != 0.0 && gb != 0.0)
    {
      while (b - a > options.root_tol * std::max(1.0, b))
      {
        const double mid = 0.5 * (a + b);
        if (mid <= a || mid >= b)
        {
          break;
        }
        const double gm = mismatch_kappa(model, mid);
        if (gm == 0.0)
        {
          a = b = mid;
          break;
        }
        if (std::signbit(gm) == std::signbit(ga))
        {
          a = mid;
          ga = gm;
        }
        else
        {
          b = mid;
        }
      }
    }
    else
    {
      a = b = (ga == 0.0 ? a : b);
    }
    const double k = 0.5 * (a + b);
    energies.push_back(-k * k);
    brackets.push_back({a * a, b * b});
    residuals.push_back(std::abs(mismatch_kappa(model, k)));
  }
  SpectrumReport rep;
  rep.source = "transfer-matrix";
  rep.params_digest = model_digest(model);
  rep.truncation = static_cast<int>(model.points.size());
  rep.z_min = -e_max;
  rep.z_max = -e_min;
  rep.evaluations = n + 1;
  for (std::size_t i = 0; i < energies.size(); i++)
  {
    SpectralRoot r;
    r.z = -energies[i];
    r.energy = energies[i];
    r.residual = residuals[i];
    r.bracket_lo = brackets[i].first;
    r.bracket_hi = brackets[i].second;
    rep.roots.push_back(r);
  }
  std::sort(rep.roots.begin(), rep.roots.end(), [](const auto &x, const auto &y) { return x.z < y.z; });
  return rep;
}

std::vector<double> tridiagonal_eigenvalues_below(const RVector &diag, const RVector &off, double upper,
                                                  double tol)
{
  const Eigen::Index n = diag.size();
  if (n == 0)
  {
    return {};
  }
  if (off.size() != n - 1)
  {
    throw Error(ErrorCode::DimensionMismatch, "off-diagonal must have n - 1 entries");
  }
  double lower = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; i++)
  {
    const double r = (i > 0 ? std::abs(off(i - 1)) : 0.0) + (i + 1 < n ? std::abs(off(i)) : 0.0);
    lower = std::min(lower, diag(i) - r);
  }
  const int count = sturm_count(diag, off, upper);
  std::vector<double> out(count);
  parallel_for(static_cast<std::size_t>(count), [&](std::size_t j) {
    double a = lower - 1.0, b = upper;
    while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b)))
    {
      const double mid = 0.5 * (a + b);
      if (mid <= a || mid >= b)
      {
        break;
      }
      if (sturm_count(diag, off, mid) > static_cast<int>(j))
      {
        b = mid;
      }
      else
      {
        a = mid;
      }
    }
    out[j] = 0.5 * (a + b);
  });
  return out;
}

std::vector<double> fd_spectrum(const OracleModel &model, const FdGrid &grid, double e_max)
{
  model.validate();
  double max_strength = 0.0;
  for (const auto &p : model.points)
  {
    if (p.coupling.kind == CouplingKind::DeltaPrime && p.coupling.strength != 0.0)
    {
      throw Error(ErrorCode::ModelMismatch, "finite differences support delta couplings only");
    }
    if (p.coupling.kind == CouplingKind::Delta)
    {
      max_strength = std::max(max_strength, std::abs(p.coupling.strength));
    }
  }
  const double h = grid.h;
  if (!(h > 0.0) || 1.0 / h <= max_strength)
  {
    throw Error(ErrorCode::GridTooCoarse, "need 1/h > max |alpha| = " + format_double(max_strength));
  }
  const double lo = model.points.front().position - grid.margin;
  int last;
  if (model.wall)
  {
    last = grid_index(*model.wall, lo, h, "wall");
  }
  else
  {
    last = static_cast<int>(std::ceil((model.points.back().position + grid.margin - lo) / h - 1e-9));
  }
  const int n = last - 1;  // interior nodes 1..last-1
  if (n < 3)
  {
    throw Error(ErrorCode::GridTooCoarse, "box holds fewer than 3 interior nodes");
  }
  RVector diag = RVector::Constant(n, 2.0 / (h * h));
  RVector off = RVector::Constant(n - 1, -1.0 / (h * h));
  for (const auto &p : model.points)
  {
    const int j = grid_index(p.position, lo, h, "point");
    diag(j - 1) += p.coupling.strength / h;
  }
  return tridiagonal_eigenvalues_below(diag, off, e_max);
}

std::vector<double> mode_fd_spectrum(int k, std::optional<double> robin, double length, double h)
{
  if (!(h > 0.0) || !(length > 0.0))
  {
    throw Error(ErrorCode::InvalidSpec, "grid step and length must be positive");
  }
  const double k2 = static_cast<double>(k) * k;
  const int last = static_cast<int>(std::llround(length / h));
  if (robin && 1.0 / h <= std::abs(*robin))
  {
    throw Error(ErrorCode::GridTooCoarse, "need 1/h > |rho| = " + format_double(*robin));
  }
  if (last < 4)
  {
    throw Error(ErrorCode::GridTooCoarse, "box holds fewer than 3 interior nodes");
  }
  const double h2 = h * h;
  RVector diag, off;
  if (robin)
  {
    // Nodes 0..last-1; ghost-point Robin row symmetrized by a half mass at 0.
    diag = RVector::Constant(last, 2.0 / h2 + k2);
    off = RVector::Constant(last - 1, -1.0 / h2);
    diag(0) = 2.0 * (1.0 + h * *robin) / h2 + k2;
    off(0) = -std::sqrt(2.0) / h2;
  }
  else
  {
    diag = RVector::Constant(last - 1, 2.0 / h2 + k2);
    off = RVector::Constant(last - 2, -1.0 / h2);
  }
  return tridiagonal_eigenvalues_below(diag, off, k2);
}

SpectrumReport to_report(const std::vector<double> &energies, const std::string &source)
{
  SpectrumReport rep;
  rep.source = source;
  for (double e : energies)
  {
    SpectralRoot r;
    r.z = -e;
    r.energy = e;
    r.bracket_lo = r.bracket_hi = -e;
    rep.roots.push_back(r);
  }
  std::sort(rep.roots.begin(), rep.roots.end(), [](const auto &x, const auto &y) { return x.z < y.z; });
  return rep;
}

std::string model_digest(const OracleModel &model)
{
  CMatrix m(static_cast<Eigen::Index>(model.points.size()), 3);
  for (std::size_t i = 0; i < model.points.size(); i++)
  {
    const auto &p = model.points[i];
    m(i, 0) = p.position;
    m(i, 1) = p.coupling.kind == CouplingKind::Delta ? 0.0 : 1.0;
    m(i, 2) = p.coupling.strength;
  }
  CMatrix w = CMatrix::Constant(1, 1, model.wall ? *model.wall : std::numeric_limits<double>::infinity());
  return digest_matrices({&m, &w});
}

}  // namespace tracesum
