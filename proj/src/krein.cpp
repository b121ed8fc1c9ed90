#include "tracesum/krein.hpp"

#include <cstdio>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <json.hpp>

#include "tracesum/errors.hpp"
#include "format.hpp"

namespace tracesum
{

namespace
{

constexpr double kStructureTol = 1e-10;

template <typename F>
CMatrix block_diagonal(const DirectSumProblem &problem, F &&per_block)
{
  const int m = problem.total_dim();
  CMatrix out = CMatrix::Zero(m, m);
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    const int d = problem.block(i).trace_dim();
    out.block(problem.offset(i), problem.offset(i), d, d) = per_block(i);
  }
  return out;
}

CMatrix dtn_matrix(const DirectSumProblem &problem, Complex z)
{
  return block_diagonal(problem, [&](std::size_t i) { return problem.block(i).dtn(z); });
}

void require_exact(const DirectSumProblem &problem)
{
  if (problem.metric_choice() != MetricChoice::Exact)
  {
    throw Error(ErrorCode::InvalidSpec, "extension parameters need the exact Gram-inverse metric");
  }
}

// B maps basis coordinates to boundary values: Q (renormed) or r^{-1}.
CMatrix boundary_map(const DirectSumProblem &problem, Representation rep)
{
  if (rep == Representation::Renormed)
  {
    return problem.metric_matrix();
  }
  return block_diagonal(problem, [&](std::size_t i) { return CMatrix(hermitian_sqrt(problem.gram(i)).inverse()); });
}

CMatrix boundary_map_inverse(const DirectSumProblem &problem, Representation rep)
{
  if (rep == Representation::Renormed)
  {
    return problem.gram_matrix();
  }
  return block_diagonal(problem, [&](std::size_t i) { return hermitian_sqrt(problem.gram(i)); });
}

CMatrix inverse_sqrt(const CMatrix &a)
{
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(a);
  if (eig.eigenvalues().minCoeff() <= 0.0)
  {
    throw Error(ErrorCode::InvalidSpec, "boundary value matrix V is rank deficient");
  }
  return eig.eigenvectors() * eig.eigenvalues().cwiseInverse().cwiseSqrt().asDiagonal() *
         eig.eigenvectors().adjoint();
}

CMatrix hermitize(const CMatrix &a) { return 0.5 * (a + a.adjoint()); }

void require_dims(const CMatrix &a, int rows, int cols, const std::string &what)
{
  if (a.rows() != rows || a.cols() != cols)
  {
    throw Error(ErrorCode::DimensionMismatch, what + " is " + std::to_string(a.rows()) + "x" +
                                                std::to_string(a.cols()) + ", expected " +
                                                std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

std::string to_string(Representation rep)
{
  return rep == Representation::Renormed ? "renormed" : "regularized";
}

CMatrix representation_metric(const DirectSumProblem &problem, Representation rep)
{
  require_exact(problem);
  if (rep == Representation::Renormed)
  {
    return problem.metric_matrix();
  }
  return CMatrix::Identity(problem.total_dim(), problem.total_dim());
}

CMatrix projection_matrix(const DirectSumProblem &problem, const ExtensionParams &params)
{
  const CMatrix q = representation_metric(problem, params.representation);
  return params.basis * params.basis.adjoint() * q;
}

CMatrix theta_matrix(const DirectSumProblem &problem, const ExtensionParams &params)
{
  const CMatrix q = representation_metric(problem, params.representation);
  return params.basis * params.theta * params.basis.adjoint() * q;
}

CMatrix boundary_basis(const DirectSumProblem &problem, const ExtensionParams &params)
{
  return boundary_map(problem, params.representation) * params.basis;
}

ExtensionParams make_params(const DirectSumProblem &problem, Representation rep, const CMatrix &pi,
                            const CMatrix &theta)
{
  const int m = problem.total_dim();
  require_dims(pi, m, m, "projection matrix");
  require_dims(theta, m, m, "theta matrix");
  const CMatrix q = representation_metric(problem, rep);
  const double scale = std::max(1.0, pi.norm());
  if ((pi * pi - pi).norm() > kStructureTol * scale)
  {
    throw Error(ErrorCode::InvalidSpec, "projection matrix is not idempotent");
  }
  const CMatrix qpi = q * pi;
  if ((qpi - qpi.adjoint()).norm() > kStructureTol * std::max(1.0, qpi.norm()))
  {
    throw Error(ErrorCode::InvalidSpec, "projection matrix is not orthogonal in the " + to_string(rep) + " metric");
  }
  // Orthonormal basis of range(pi) in metric q via the symmetrized projector.
  const CMatrix c = hermitian_sqrt(q);
  const CMatrix cinv = c.inverse();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitize(c * pi * cinv));
  std::vector<int> cols;
  for (int i = 0; i < m; i++)
  {
    if (eig.eigenvalues()(i) > 0.5)
    {
      cols.push_back(i);
    }
  }
  ExtensionParams out;
  out.representation = rep;
  out.basis.resize(m, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); j++)
  {
    out.basis.col(static_cast<Eigen::Index>(j)) = cinv * eig.eigenvectors().col(cols[j]);
  }
  const CMatrix compressed = out.basis.adjoint() * q * theta * out.basis;
  if (hermitian_defect(compressed) > kStructureTol)
  {
    throw Error(ErrorCode::InvalidSpec, "theta is not self-adjoint on range(pi)");
  }
  out.theta = hermitize(compressed);
  return out;
}

ExtensionParams from_boundary_conditions(const DirectSumProblem &problem, const CMatrix &v, const CMatrix &l,
                                         Representation rep)
{
  require_exact(problem);
  const int m = problem.total_dim();
  if (v.rows() != m)
  {
    throw Error(ErrorCode::DimensionMismatch,
                "V has " + std::to_string(v.rows()) + " rows, expected " + std::to_string(m));
  }
  require_dims(l, static_cast<int>(v.cols()), static_cast<int>(v.cols()), "L");
  if (hermitian_defect(l) > kStructureTol)
  {
    throw Error(ErrorCode::InvalidSpec, "L is not Hermitian");
  }
  ExtensionParams out;
  out.representation = rep;
  if (v.cols() == 0)
  {
    out.basis = CMatrix::Zero(m, 0);
    out.theta = CMatrix::Zero(0, 0);
    return out;
  }
  const double lambda = problem.base_point();
  const CMatrix s = inverse_sqrt(hermitize(v.adjoint() * problem.gram_matrix() * v));
  const CMatrix psi = v * s;
  out.theta = hermitize(s * (l - v.adjoint() * dtn_matrix(problem, lambda) * v) * s);
  out.basis = boundary_map_inverse(problem, rep) * psi;
  return out;
}

BoundaryRelation physical_boundary_relation(const DirectSumProblem &problem, const ExtensionParams &params)
{
  const CMatrix psi = boundary_basis(problem, params);
  return {psi, hermitize(params.theta + psi.adjoint() * dtn_matrix(problem, problem.base_point()) * psi)};
}

ExtensionParams convert_params(const DirectSumProblem &problem, const ExtensionParams &params,
                               Representation target)
{
  if (params.representation == target)
  {
    return params;
  }
  ExtensionParams out;
  out.representation = target;
  out.theta = params.theta;
  out.basis = boundary_map_inverse(problem, target) * boundary_basis(problem, params);
  return out;
}

std::vector<BlockSpec> line_blocks(const std::vector<double> &points, std::optional<double> wall)
{
  if (points.empty())
  {
    throw Error(ErrorCode::InvalidSpec, "line geometry needs at least one point");
  }
  for (std::size_t i = 1; i < points.size(); i++)
  {
    if (!(points[i] > points[i - 1]))
    {
      throw Error(ErrorCode::InvalidSpec, "points must be strictly increasing");
    }
  }
  if (wall && !(*wall > points.back()))
  {
    throw Error(ErrorCode::InvalidSpec, "wall must lie right of the last point");
  }
  std::vector<BlockSpec> out{BlockSpec::left_half_line(points.front())};
  for (std::size_t i = 1; i < points.size(); i++)
  {
    out.push_back(BlockSpec::interval(points[i - 1], points[i]));
  }
  out.push_back(wall ? BlockSpec::interval(points.back(), *wall) : BlockSpec::right_half_line(points.back()));
  return out;
}

std::pair<int, int> point_components(const DirectSumProblem &problem, std::size_t point)
{
  const std::size_t n = problem.truncation_size();
  if (n < 2 || problem.block(0).kind() != BlockKind::LeftHalfLine)
  {
    throw Error(ErrorCode::ModelMismatch, "point couplings need a line geometry");
  }
  for (std::size_t i = 1; i < n; i++)
  {
    const auto kind = problem.block(i).kind();
    const bool ok = kind == BlockKind::Interval || (i + 1 == n && kind == BlockKind::RightHalfLine);
    if (!ok)
    {
      throw Error(ErrorCode::ModelMismatch, "point couplings need a line geometry");
    }
  }
  if (point + 1 >= n)
  {
    throw Error(ErrorCode::ModelMismatch, "point " + std::to_string(point) + " out of range");
  }
  return {problem.offset(point) + problem.block(point).trace_dim() - 1, problem.offset(point + 1)};
}

ExtensionParams coupling_params(const DirectSumProblem &problem, const std::vector<PointCoupling> &couplings,
                                Representation rep)
{
  const std::size_t points = problem.truncation_size() - 1;
  if (couplings.size() != points)
  {
    throw Error(ErrorCode::ModelMismatch, std::to_string(couplings.size()) + " couplings for " +
                                            std::to_string(points) + " points");
  }
  int cols = 0;
  for (const auto &c : couplings)
  {
    cols += (c.kind == CouplingKind::DeltaPrime && c.strength != 0.0) ? 2 : 1;
  }
  const int m = problem.total_dim();
  CMatrix v = CMatrix::Zero(m, cols);
  CMatrix l = CMatrix::Zero(cols, cols);
  int col = 0;
  for (std::size_t n = 0; n < points; n++)
  {
    const auto [left, right] = point_components(problem, n);
    const auto &c = couplings[n];
    if (c.kind == CouplingKind::DeltaPrime && c.strength != 0.0)
    {
      const double inv = 1.0 / c.strength;
      v(left, col) = 1.0;
      v(right, col + 1) = 1.0;
      l(col, col) = inv;
      l(col + 1, col + 1) = inv;
      l(col, col + 1) = -inv;
      l(col + 1, col) = -inv;
      col += 2;
    }
    else
    {
      const double strength = c.kind == CouplingKind::Delta ? c.strength : 0.0;
      v(left, col) = M_SQRT1_2;
      v(right, col) = M_SQRT1_2;
      l(col, col) = 0.5 * strength;
      col += 1;
    }
  }
  return from_boundary_conditions(problem, v, l, rep);
}

ExtensionParams delta_params(const DirectSumProblem &problem, const std::vector<double> &strengths,
                             Representation rep)
{
  std::vector<PointCoupling> c;
  for (double a : strengths)
  {
    c.push_back({CouplingKind::Delta, a});
  }
  return coupling_params(problem, c, rep);
}

ExtensionParams delta_prime_params(const DirectSumProblem &problem, const std::vector<double> &strengths,
                                   Representation rep)
{
  std::vector<PointCoupling> c;
  for (double b : strengths)
  {
    c.push_back({CouplingKind::DeltaPrime, b});
  }
  return coupling_params(problem, c, rep);
}

ExtensionParams robin_mode_params(const DirectSumProblem &problem, const std::vector<double> &theta,
                                  Representation rep)
{
  require_exact(problem);
  if (theta.size() != problem.truncation_size())
  {
    throw Error(ErrorCode::ModelMismatch, std::to_string(theta.size()) + " theta values for " +
                                            std::to_string(problem.truncation_size()) + " modes");
  }
  const int m = problem.total_dim();
  if (m != static_cast<int>(problem.truncation_size()))
  {
    throw Error(ErrorCode::ModelMismatch, "robin presets need scalar-trace blocks");
  }
  ExtensionParams out;
  out.representation = Representation::Renormed;
  out.basis = CMatrix::Zero(m, m);
  out.theta = CMatrix::Zero(m, m);
  for (int i = 0; i < m; i++)
  {
    out.basis(i, i) = std::sqrt(problem.gram(i)(0, 0).real());
    out.theta(i, i) = theta[i];
  }
  return convert_params(problem, out, rep);
}

ExtensionParams decoupled_params(const DirectSumProblem &problem, Representation rep)
{
  ExtensionParams out;
  out.representation = rep;
  out.basis = CMatrix::Zero(problem.total_dim(), 0);
  out.theta = CMatrix::Zero(0, 0);
  return out;
}

double robin_parameter(const DirectSumProblem &problem, std::size_t block, double theta)
{
  const auto &b = problem.block(block);
  if (b.trace_dim() != 1)
  {
    throw Error(ErrorCode::ModelMismatch, "Robin parameter needs a scalar-trace block");
  }
  const double weight = 1.0 / problem.gram(block)(0, 0).real();
  return theta / weight + b.dtn(problem.base_point())(0, 0).real();
}

std::string digest_matrices(const std::vector<const CMatrix *> &mats)
{
  std::uint64_t h = 1469598103934665603ull;
  auto feed = [&h](const std::string &s) {
    for (unsigned char c : s)
    {
      h ^= c;
      h *= 1099511628211ull;
    }
  };
  for (const CMatrix *m : mats)
  {
    feed(std::to_string(m->rows()) + "x" + std::to_string(m->cols()) + ";");
    for (Eigen::Index j = 0; j < m->cols(); j++)
    {
      for (Eigen::Index i = 0; i < m->rows(); i++)
      {
        feed(format_double((*m)(i, j).real()) + "," + format_double((*m)(i, j).imag()) + ";");
      }
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string SpectrumReport::to_json() const
{
  nlohmann::ordered_json j;
  j["source"] = source;
  j["roots"] = nlohmann::ordered_json::array();
  for (const auto &r : roots)
  {
    nlohmann::ordered_json e;
    e["z"] = r.z;
    e["E"] = r.energy;
    e["residual"] = r.residual;
    e["bracket"] = {r.bracket_lo, r.bracket_hi};
    e["multiplicity"] = r.multiplicity;
    j["roots"].push_back(e);
  }
  j["params_digest"] = params_digest;
  j["truncation"] = truncation;
  j["search"] = {{"z_min", z_min}, {"z_max", z_max}, {"evaluations", evaluations}};
  return j.dump(2);
}

SecularSystem::SecularSystem(const DirectSumProblem &problem, ExtensionParams params)
  : problem_(&problem), params_(std::move(params))
{
  const int m = problem.total_dim();
  if (params_.basis.rows() != m)
  {
    throw Error(ErrorCode::DimensionMismatch, "extension basis has " + std::to_string(params_.basis.rows()) +
                                                " rows, expected " + std::to_string(m));
  }
  require_dims(params_.theta, params_.rank(), params_.rank(), "theta");
  if (hermitian_defect(params_.theta) > kStructureTol)
  {
    throw Error(ErrorCode::InvalidSpec, "theta is not Hermitian");
  }
  metric_ = representation_metric(problem, params_.representation);
  const CMatrix gram = params_.basis.adjoint() * metric_ * params_.basis;
  if ((gram - CMatrix::Identity(params_.rank(), params_.rank())).norm() > 1e-8)
  {
    throw Error(ErrorCode::InvalidSpec, "extension basis is not orthonormal in the " +
                                          to_string(params_.representation) + " metric");
  }
  psi_ = tracesum::boundary_basis(problem, params_);
}

bool SecularSystem::admissible(Complex z) const
{
  for (const auto &b : problem_->blocks())
  {
    if (!b.admissible(z))
    {
      return false;
    }
  }
  return true;
}

void SecularSystem::require_admissible(Complex z) const
{
  for (std::size_t i = 0; i < problem_->truncation_size(); i++)
  {
    if (!problem_->block(i).admissible(z))
    {
      throw Error(ErrorCode::SpectrumHit, "z = " + format_double(z.real()) + (z.imag() < 0 ? "" : "+") +
                                            format_double(z.imag()) + "i is in the spectrum of block " +
                                            std::to_string(i));
    }
  }
}

CMatrix SecularSystem::secular_matrix(Complex z) const
{
  require_admissible(z);
  CMatrix out = params_.theta;
  const double lambda = problem_->base_point();
  for (std::size_t i = 0; i < problem_->truncation_size(); i++)
  {
    const auto &b = problem_->block(i);
    const int d = b.trace_dim();
    const auto u = params_.basis.middleRows(problem_->offset(i), d);
    if (u.norm() == 0.0)
    {
      continue;
    }
    if (params_.representation == Representation::Renormed)
    {
      const CMatrix q = metric_.block(problem_->offset(i), problem_->offset(i), d, d);
      out.noalias() += u.adjoint() * q * b.weyl_block(z, lambda) * u;
    }
    else
    {
      const CMatrix rinv = hermitian_sqrt(problem_->gram(i)).inverse();
      out.noalias() += u.adjoint() * rinv * (b.dtn(lambda) - b.dtn(z)) * rinv * u;
    }
  }
  return out;
}

CMatrix SecularSystem::secular_derivative(double z) const
{
  require_admissible(z);
  CMatrix out = CMatrix::Zero(params_.rank(), params_.rank());
  for (std::size_t i = 0; i < problem_->truncation_size(); i++)
  {
    const auto &b = problem_->block(i);
    const auto psi = psi_.middleRows(problem_->offset(i), b.trace_dim());
    out.noalias() -= psi.adjoint() * b.dtn_derivative(z) * psi;
  }
  return out;
}

int SecularSystem::negative_count(double z) const
{
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitize(secular_matrix(z)), Eigen::EigenvaluesOnly);
  int n = 0;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); i++)
  {
    n += eig.eigenvalues()(i) < 0.0 ? 1 : 0;
  }
  return n;
}

std::string SecularSystem::params_digest() const
{
  return digest_matrices({&psi_, &params_.theta});
}

SpectrumReport SecularSystem::find_eigenvalues(const SearchOptions &opts) const
{
  SpectrumReport rep;
  rep.params_digest = params_digest();
  rep.truncation = static_cast<int>(problem_->truncation_size());
  rep.z_min = opts.z_min;
  rep.z_max = opts.z_max;
  if (!(opts.z_min < opts.z_max) || !std::isfinite(opts.z_max))
  {
    throw Error(ErrorCode::SearchFailure, "empty search interval [" + format_double(opts.z_min) + ", " +
                                            format_double(opts.z_max) + "]");
  }
  if (!admissible(opts.z_min))
  {
    throw Error(ErrorCode::SearchFailure,
                "search interval starts inside a block spectrum at z = " + format_double(opts.z_min));
  }
  if (params_.rank() == 0)
  {
    return rep;
  }
  // Eigenvalues of M(z) increase with z (dM/dz >= 0), so the number of
  // negative eigenvalues only drops, once per root and multiplicity.
  struct Bracket
  {
    double a, b;
    int na, nb;
  };
  const int n_lo = negative_count(opts.z_min);
  const int n_hi = negative_count(opts.z_max);
  rep.evaluations = 2;
  if (n_lo < n_hi)
  {
    throw Error(ErrorCode::SearchFailure, "negative count rises from " + std::to_string(n_lo) + " to " +
                                            std::to_string(n_hi) + " across the interval");
  }
  std::vector<Bracket> stack{{opts.z_min, opts.z_max, n_lo, n_hi}};
  while (!stack.empty())
  {
    Bracket br = stack.back();
    stack.pop_back();
    if (br.na == br.nb)
    {
      continue;
    }
    const double mid = 0.5 * (br.a + br.b);
    const bool narrow = br.b - br.a <= opts.root_tol * std::max(1.0, std::abs(mid));
    if (narrow || mid <= br.a || mid >= br.b)
    {
      SpectralRoot r;
      r.z = mid;
      r.energy = -mid;
      r.bracket_lo = br.a;
      r.bracket_hi = br.b;
      r.multiplicity = br.na - br.nb;
      Eigen::JacobiSVD<CMatrix> svd(secular_matrix(mid));
      r.residual = svd.singularValues().minCoeff();
      rep.evaluations++;
      if (r.residual > opts.residual_tol)
      {
        throw Error(ErrorCode::SearchFailure, "root near z = " + format_double(mid) +
                                                " has residual " + format_double(r.residual) +
                                                " above tolerance " + format_double(opts.residual_tol));
      }
      rep.roots.push_back(r);
      continue;
    }
    const int nm = negative_count(mid);
    rep.evaluations++;
    if (nm > br.na || nm < br.nb)
    {
      throw Error(ErrorCode::SearchFailure, "non-monotone negative count at z = " + format_double(mid));
    }
    // Right half first so that the left half is popped next.
    stack.push_back({mid, br.b, nm, br.nb});
    stack.push_back({br.a, mid, br.na, nm});
  }
  std::sort(rep.roots.begin(), rep.roots.end(), [](const auto &x, const auto &y) { return x.z < y.z; });
  return rep;
}

std::vector<Eigenfunction> eigenfunctions(const SecularSystem &sys, double z_root, double null_tol)
{
  if (sys.params().rank() == 0)
  {
    throw Error(ErrorCode::DegenerateNull, "Pi = 0 has no secular roots");
  }
  const auto &problem = sys.problem();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(hermitize(sys.secular_matrix(z_root)));
  std::vector<int> null;
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); i++)
  {
    if (std::abs(eig.eigenvalues()(i)) <= null_tol)
    {
      null.push_back(static_cast<int>(i));
    }
  }
  if (null.empty())
  {
    throw Error(ErrorCode::DegenerateNull, "M(" + format_double(z_root) + ") has no null vector; smallest |eigenvalue| " +
                                             format_double(eig.eigenvalues().cwiseAbs().minCoeff()));
  }
  CMatrix c(sys.params().rank(), static_cast<Eigen::Index>(null.size()));
  for (std::size_t j = 0; j < null.size(); j++)
  {
    c.col(static_cast<Eigen::Index>(j)) = eig.eigenvectors().col(null[j]);
  }
  // Orthonormalize in L^2: ||G(z) psi||^2 = psi^H Gram(z) psi.
  const CMatrix values = sys.boundary_basis() * c;
  const CMatrix gram_z =
    block_diagonal(problem, [&](std::size_t i) { return problem.block(i).gram(z_root); });
  const CMatrix l2 = hermitize(values.adjoint() * gram_z * values);
  const CMatrix normalized = values * inverse_sqrt(l2);
  std::vector<Eigenfunction> out;
  for (Eigen::Index j = 0; j < normalized.cols(); j++)
  {
    Eigenfunction e;
    e.z = z_root;
    e.boundary_values = normalized.col(j);
    e.norm_factor = 1.0 / std::sqrt(l2(j, j).real());
    for (std::size_t i = 0; i < problem.truncation_size(); i++)
    {
      const auto &b = problem.block(i);
      const CVector xi = e.boundary_values.segment(problem.offset(i), b.trace_dim());
      e.blocks.push_back([&b, xi, z_root](double x) { return b.green_eval(z_root, xi, x); });
    }
    out.push_back(std::move(e));
  }
  return out;
}

Eigenfunction eigenfunction(const SecularSystem &sys, double z_root, double null_tol)
{
  auto all = eigenfunctions(sys, z_root, null_tol);
  return std::move(all.front());
}

PiecewiseFn free_resolvent_apply(const DirectSumProblem &problem, Complex z, const PiecewiseFn &f)
{
  if (f.size() != problem.truncation_size())
  {
    throw Error(ErrorCode::DimensionMismatch, "one function per block is required");
  }
  PiecewiseFn out;
  for (std::size_t i = 0; i < f.size(); i++)
  {
    const auto &b = problem.block(i);
    if (!b.admissible(z))
    {
      throw Error(ErrorCode::SpectrumHit, "z is in the spectrum of block " + std::to_string(i));
    }
    ScalarFn fi = f[i];
    out.push_back([&b, fi, z](double x) { return b.resolvent_apply(z, fi, x); });
  }
  return out;
}

PiecewiseFn resolvent_apply(const SecularSystem &sys, Complex z, const PiecewiseFn &f)
{
  const auto &problem = sys.problem();
  PiecewiseFn out = free_resolvent_apply(problem, z, f);
  if (sys.params().rank() == 0)
  {
    return out;
  }
  const CMatrix m = sys.secular_matrix(z);
  Eigen::JacobiSVD<CMatrix> svd(m);
  const auto &sv = svd.singularValues();
  if (sv.minCoeff() <= 1e-12 * std::max(1.0, sv.maxCoeff()))
  {
    throw Error(ErrorCode::SecularSingular, "M(z) is singular at z = " + format_double(z.real()) + " + " +
                                              format_double(z.imag()) + "i");
  }
  CVector h(problem.total_dim());
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    const auto &b = problem.block(i);
    h.segment(problem.offset(i), b.trace_dim()) = b.green_adjoint_apply(std::conj(z), f[i]);
  }
  const CMatrix &psi = sys.boundary_basis();
  const CVector coeff = psi * m.fullPivLu().solve(psi.adjoint() * h);
  for (std::size_t i = 0; i < problem.truncation_size(); i++)
  {
    const auto &b = problem.block(i);
    const CVector xi = coeff.segment(problem.offset(i), b.trace_dim());
    ScalarFn free = out[i];
    out[i] = [&b, free, xi, z](double x) { return free(x) + b.green_eval(z, xi, x); };
  }
  return out;
}

Complex l2_inner(const DirectSumProblem &problem, const PiecewiseFn &f, const PiecewiseFn &g)
{
  if (f.size() != problem.truncation_size() || g.size() != problem.truncation_size())
  {
    throw Error(ErrorCode::DimensionMismatch, "one function per block is required");
  }
  Complex sum = 0.0;
  for (std::size_t i = 0; i < f.size(); i++)
  {
    sum += problem.block(i).l2_inner(f[i], g[i]);
  }
  return sum;
}

}  // namespace tracesum
