#include "tracesum/blocks.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "tracesum/errors.hpp"
#include "format.hpp"
#include "hyperbolic.hpp"

namespace tracesum
{

using detail::cexpm1;
using detail::coth_series;
using detail::sinhc_series;
using detail::sinhc_series_derivative;

namespace
{

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr Complex kI{0.0, 1.0};

// e^{-u} sinh u and e^{-u} cosh u, bounded for Re u >= 0.
Complex scaled_sinh(Complex u) { return -0.5 * cexpm1(-2.0 * u); }
Complex scaled_cosh(Complex u) { return 0.5 * (1.0 + std::exp(-2.0 * u)); }

// S(s) = sinh(omega s)/sinh(omega d), 0 <= s <= d.
Complex interval_profile(Complex z, Complex omega, double s, double d)
{
  if (std::abs(z) * d * d < 1.0)
  {
    return (s / d) * sinhc_series(z * s * s) / sinhc_series(z * d * d);
  }
  return std::exp(-omega * (d - s)) * scaled_sinh(omega * s) / scaled_sinh(omega * d);
}

// d/dz S(s).
Complex interval_profile_dz(Complex z, Complex omega, double s, double d)
{
  const Complex ts = z * s * s, td = z * d * d;
  Complex a1, a2, b;
  if (std::abs(td) < 1.0)
  {
    const Complex hd = sinhc_series(td);
    a1 = sinhc_series_derivative(ts) / hd;
    a2 = sinhc_series(ts) / hd;
    b = sinhc_series_derivative(td) / hd;
  }
  else
  {
    const Complex ud = omega * d, us = omega * s;
    const Complex ed = scaled_sinh(ud);
    const Complex inv_hd = ud * std::exp(-ud) / ed;
    if (std::abs(ts) < 1.0)
    {
      a1 = sinhc_series_derivative(ts) * inv_hd;
      a2 = sinhc_series(ts) * inv_hd;
    }
    else
    {
      const Complex shift = std::exp(us - ud);
      a2 = (d / s) * shift * scaled_sinh(us) / ed;
      a1 = shift * (us * scaled_cosh(us) - scaled_sinh(us)) * ud / (2.0 * us * us * us * ed);
    }
    b = (ud * scaled_cosh(ud) - ed) / (2.0 * ud * ud * ed);
  }
  return (s / d) * (s * s * a1 - d * d * a2 * b);
}

double grushin_constant(double alpha)
{
  const double p = alpha + 1.0;
  const double s = (1.0 - alpha) / p;
  return std::tgamma(s) * std::pow(0.5 * p, s) / p;
}

// R(0) g on a Grushin mode as a function of s = x^p / p. With g = e^{-ks},
// the second solution sinh(ks)/k and weight (p s)^-beta ds, beta = 2 alpha / p:
// v = c/(2k) [e^{-ks} I(s) + 2 sinh(ks) (2k)^-a Gamma(a, 2ks)], a = 1 - beta,
// I(s) = int_0^s (1 - e^{-2k t}) t^-beta dt, c = p^-beta.
double grushin_lift_profile(double alpha, double k, double s)
{
  const double p = alpha + 1.0;
  const double beta = 2.0 * alpha / p;
  const double a = 1.0 - beta;
  const double y = 2.0 * k * s;
  if (k * s > 300.0)
  {
    return 0.0;
  }
  double inner;
  if (y < 1.0)
  {
    // Series avoids the cancellation between s^a / a and the lower gamma.
    double term = 1.0, sum = 0.0;
    for (int n = 1; n < 60; n++)
    {
      term *= -y / n;
      const double add = -term / (n + a);
      sum += add;
      if (std::abs(add) < 1e-18 * std::abs(sum))
      {
        break;
      }
    }
    inner = std::pow(s, a) * sum;
  }
  else
  {
    inner = std::pow(s, a) / a - std::pow(2.0 * k, -a) * boost::math::tgamma_lower(a, y);
  }
  const double outer = 2.0 * std::sinh(k * s) * std::pow(2.0 * k, -a) * boost::math::tgamma(a, y);
  return std::pow(p, -beta) / (2.0 * k) * (std::exp(-k * s) * inner + outer);
}

// Fourth-order one-sided first derivative; dir = +1 forward, -1 backward.
Complex one_sided_derivative(const ScalarFn &f, double x, double h, int dir)
{
  const double hh = dir * h;
  return (-25.0 * f(x) + 48.0 * f(x + hh) - 36.0 * f(x + 2 * hh) + 16.0 * f(x + 3 * hh) -
          3.0 * f(x + 4 * hh)) /
         (12.0 * hh);
}

Complex second_derivative_fd(const ScalarFn &f, double x, double lo)
{
  const double h = 1e-3;
  if (x - 2 * h >= lo)
  {
    return (-f(x - 2 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2 * h)) /
           (12.0 * h * h);
  }
  return (45.0 * f(x) - 154.0 * f(x + h) + 214.0 * f(x + 2 * h) - 156.0 * f(x + 3 * h) +
          61.0 * f(x + 4 * h) - 10.0 * f(x + 5 * h)) /
         (12.0 * h * h);
}

}  // namespace

std::string to_string(BlockKind kind)
{
  switch (kind)
  {
    case BlockKind::LeftHalfLine:
      return "left_half_line";
    case BlockKind::RightHalfLine:
      return "right_half_line";
    case BlockKind::Interval:
      return "interval";
    case BlockKind::FlatMode:
      return "flat_mode";
    case BlockKind::GrushinMode:
      return "grushin_mode";
  }
  return "unknown";
}

BlockSpec BlockSpec::left_half_line(double b)
{
  BlockSpec s;
  s.kind = BlockKind::LeftHalfLine;
  s.a = -kInf;
  s.b = b;
  return s;
}

BlockSpec BlockSpec::right_half_line(double a)
{
  BlockSpec s;
  s.kind = BlockKind::RightHalfLine;
  s.a = a;
  s.b = kInf;
  return s;
}

BlockSpec BlockSpec::interval(double a, double b)
{
  BlockSpec s;
  s.kind = BlockKind::Interval;
  s.a = a;
  s.b = b;
  return s;
}

BlockSpec BlockSpec::flat_mode(int k)
{
  BlockSpec s;
  s.kind = BlockKind::FlatMode;
  s.a = 0.0;
  s.b = kInf;
  s.mode = k;
  return s;
}

BlockSpec BlockSpec::grushin_mode(int k, double alpha)
{
  BlockSpec s;
  s.kind = BlockKind::GrushinMode;
  s.a = 0.0;
  s.b = kInf;
  s.mode = k;
  s.alpha = alpha;
  return s;
}

BlockOperator::BlockOperator(BlockSpec spec) : spec_(std::move(spec))
{
  switch (spec_.kind)
  {
    case BlockKind::Interval:
      if (!std::isfinite(spec_.a) || !std::isfinite(spec_.b) || !(spec_.a < spec_.b))
      {
        throw Error(ErrorCode::InvalidSpec, "interval needs finite a < b");
      }
      break;
    case BlockKind::LeftHalfLine:
      if (!std::isfinite(spec_.b))
      {
        throw Error(ErrorCode::InvalidSpec, "left half-line needs a finite endpoint");
      }
      spec_.a = -kInf;
      break;
    case BlockKind::RightHalfLine:
      if (!std::isfinite(spec_.a))
      {
        throw Error(ErrorCode::InvalidSpec, "right half-line needs a finite endpoint");
      }
      spec_.b = kInf;
      break;
    case BlockKind::GrushinMode:
      if (!(spec_.alpha > 0.0 && spec_.alpha < 1.0))
      {
        throw Error(ErrorCode::InvalidSpec, "alpha out of (0,1)");
      }
      [[fallthrough]];
    case BlockKind::FlatMode:
      if (spec_.mode == 0)
      {
        throw Error(ErrorCode::InvalidSpec, "mode index k must be nonzero");
      }
      spec_.a = 0.0;
      spec_.b = kInf;
      break;
  }
  if (spec_.quadrature.order < 1 || !(spec_.quadrature.panel_width > 0.0))
  {
    throw Error(ErrorCode::InvalidSpec, "invalid quadrature settings");
  }
}

double BlockOperator::lower() const { return spec_.a; }
double BlockOperator::upper() const { return spec_.b; }

bool BlockOperator::contains(double x) const { return x >= spec_.a && x <= spec_.b; }

std::vector<TraceEndpoint> BlockOperator::endpoints() const
{
  switch (spec_.kind)
  {
    case BlockKind::Interval:
      return {{spec_.a, true}, {spec_.b, false}};
    case BlockKind::LeftHalfLine:
      return {{spec_.b, false}};
    default:
      return {{spec_.a, true}};
  }
}

Complex BlockOperator::omega(Complex z) const
{
  const double shift =
    spec_.kind == BlockKind::FlatMode ? static_cast<double>(spec_.mode) * spec_.mode : 0.0;
  return std::sqrt(z + shift);
}

bool BlockOperator::admissible(Complex z) const
{
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()))
  {
    return false;
  }
  const bool real_axis = z.imag() == 0.0;
  switch (spec_.kind)
  {
    case BlockKind::LeftHalfLine:
    case BlockKind::RightHalfLine:
      return !(real_axis && z.real() <= 0.0);
    case BlockKind::FlatMode:
      return !(real_axis && z.real() <= -static_cast<double>(spec_.mode) * spec_.mode);
    case BlockKind::GrushinMode:
      return !(real_axis && z.real() < 0.0);
    case BlockKind::Interval:
    {
      if (!real_axis || z.real() >= 0.0)
      {
        return true;
      }
      const double theta = std::sqrt(-z.real()) * length() / std::numbers::pi;
      const double n = std::round(theta);
      return n < 1.0 || std::abs(theta - n) > 1e-10 * n;
    }
  }
  return false;
}

void BlockOperator::require_kernel(Complex z, const char *what) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    throw Error(ErrorCode::UnsupportedKernel, std::string(what) + " is not available for Grushin modes");
  }
  if (!admissible(z))
  {
    throw Error(ErrorCode::SpectrumHit, std::string(what) + ": z = (" + format_double(z.real()) +
                                          ", " + format_double(z.imag()) + ") lies in the " +
                                          to_string(spec_.kind) + " spectrum");
  }
}

CVector BlockOperator::green_basis(Complex z, double x) const
{
  if (!contains(x))
  {
    throw Error(ErrorCode::OutOfDomain, "x = " + format_double(x) + " outside " + to_string(spec_.kind));
  }
  CVector g(trace_dim());
  if (spec_.kind == BlockKind::GrushinMode)
  {
    if (z != Complex(0.0))
    {
      throw Error(ErrorCode::UnsupportedKernel, "Grushin Green map is only available at z = 0");
    }
    const double p = spec_.alpha + 1.0;
    g(0) = std::exp(-std::abs(spec_.mode) * std::pow(x, p) / p);
    return g;
  }
  require_kernel(z, "green map");
  const Complex w = omega(z);
  switch (spec_.kind)
  {
    case BlockKind::LeftHalfLine:
      g(0) = std::exp(-w * (spec_.b - x));
      break;
    case BlockKind::RightHalfLine:
    case BlockKind::FlatMode:
      g(0) = std::exp(-w * (x - spec_.a));
      break;
    case BlockKind::Interval:
      g(0) = interval_profile(z, w, spec_.b - x, length());
      g(1) = interval_profile(z, w, x - spec_.a, length());
      break;
    default:
      break;
  }
  return g;
}

Complex BlockOperator::green_eval(Complex z, const CVector &xi, double x) const
{
  if (xi.size() != trace_dim())
  {
    throw Error(ErrorCode::DimensionMismatch, "boundary vector has wrong length");
  }
  return green_basis(z, x).transpose() * xi;
}

CMatrix BlockOperator::dtn(Complex z) const
{
  require_kernel(z, "DtN map");
  const Complex w = omega(z);
  if (spec_.kind != BlockKind::Interval)
  {
    return CMatrix::Constant(1, 1, -w);
  }
  const double d = length();
  Complex p, c;
  const Complex t = z * d * d;
  if (std::abs(t) < 1.0)
  {
    p = detail::poly(coth_series().a, t) / d;
    c = detail::poly(coth_series().b, t) / d;
  }
  else
  {
    const Complex u = w * d;
    const Complex e = std::exp(-2.0 * u);
    const Complex den = -cexpm1(-2.0 * u);
    p = w * (1.0 + e) / den;
    c = w * 2.0 * std::exp(-u) / den;
  }
  CMatrix out(2, 2);
  out << -p, c, c, -p;
  return out;
}

CMatrix BlockOperator::dtn_derivative(Complex z) const
{
  require_kernel(z, "DtN derivative");
  const Complex w = omega(z);
  if (spec_.kind != BlockKind::Interval)
  {
    return CMatrix::Constant(1, 1, -0.5 / w);
  }
  const double d = length();
  Complex dp, dc;
  const Complex t = z * d * d;
  if (std::abs(t) < 1.0)
  {
    dp = d * detail::poly_derivative(coth_series().a, t);
    dc = d * detail::poly_derivative(coth_series().b, t);
  }
  else
  {
    const Complex u = w * d;
    const Complex den = -cexpm1(-2.0 * u);
    const Complex coth = (1.0 + std::exp(-2.0 * u)) / den;
    const Complex csch = 2.0 * std::exp(-u) / den;
    dp = (coth - u * csch * csch) / (2.0 * w);
    dc = (csch - u * csch * coth) / (2.0 * w);
  }
  CMatrix out(2, 2);
  out << -dp, dc, dc, -dp;
  return out;
}

CMatrix BlockOperator::cross_gram(Complex z1, Complex z2) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    if (z1 == Complex(0.0) && z2 == Complex(0.0))
    {
      return gram(0.0);
    }
    throw Error(ErrorCode::UnsupportedKernel, "Grushin Gram is only available at z = 0");
  }
  const Complex za = std::conj(z1);
  require_kernel(za, "cross Gram");
  require_kernel(z2, "cross Gram");
  const Complex delta = z2 - za;
  if (std::abs(delta) > 1e-5 * (1.0 + std::abs(z2)))
  {
    return (dtn(za) - dtn(z2)) / delta;
  }
  return -dtn_derivative(0.5 * (za + z2));
}

CMatrix BlockOperator::gram(double lambda) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    if (lambda != 0.0)
    {
      throw Error(ErrorCode::UnsupportedKernel, "Grushin Gram is only available at lambda = 0");
    }
    const double alpha = spec_.alpha;
    const double k = std::abs(spec_.mode);
    return CMatrix::Constant(1, 1, std::pow(k, (alpha - 1.0) / (alpha + 1.0)) * grushin_constant(alpha));
  }
  if (!admissible(lambda))
  {
    throw Error(ErrorCode::BasePointInSpectrum,
                "lambda = " + format_double(lambda) + " is not in the resolvent set of " + to_string(spec_.kind));
  }
  CMatrix g = -dtn_derivative(lambda);
  return 0.5 * (g + g.adjoint());
}

CMatrix BlockOperator::weyl_block(Complex z, double lambda) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    throw Error(ErrorCode::UnsupportedKernel, "no Weyl block for Grushin modes");
  }
  const CMatrix g = gram(lambda);
  require_kernel(z, "Weyl block");
  return (z - lambda) * cross_gram(lambda, z) * g.inverse();
}

Complex BlockOperator::resolvent_kernel(Complex z, double x, double y) const
{
  require_kernel(z, "resolvent kernel");
  if (!contains(x) || !contains(y))
  {
    throw Error(ErrorCode::OutOfDomain, "kernel arguments outside the block");
  }
  const Complex w = omega(z);
  if (spec_.kind == BlockKind::Interval)
  {
    const double d = length();
    const double s1 = std::min(x, y) - spec_.a;
    const double s2 = spec_.b - std::max(x, y);
    if (std::abs(z) * d * d < 1.0)
    {
      return (s1 * s2 / d) * sinhc_series(z * s1 * s1) * sinhc_series(z * s2 * s2) /
             sinhc_series(z * d * d);
    }
    return std::exp(w * (s1 + s2 - d)) * scaled_sinh(w * s1) * scaled_sinh(w * s2) /
           (w * scaled_sinh(w * d));
  }
  double s, t;
  if (spec_.kind == BlockKind::LeftHalfLine)
  {
    s = spec_.b - x;
    t = spec_.b - y;
  }
  else
  {
    s = x - spec_.a;
    t = y - spec_.a;
  }
  const double lo = std::min(s, t), hi = std::max(s, t);
  return std::exp(-w * (hi - lo)) * (-cexpm1(-2.0 * w * lo)) / (2.0 * w);
}

QuadNodes BlockOperator::nodes(std::span<const double> breaks) const
{
  switch (spec_.kind)
  {
    case BlockKind::Interval:
      return interval_nodes(spec_.a, spec_.b, breaks, spec_.quadrature);
    case BlockKind::LeftHalfLine:
      return half_line_nodes(spec_.b, Side::Left, breaks, spec_.quadrature);
    case BlockKind::RightHalfLine:
      return half_line_nodes(spec_.a, Side::Right, breaks, spec_.quadrature);
    case BlockKind::FlatMode:
    {
      // Extra panels down to the Green function decay length 1/|k|.
      const double k = std::abs(static_cast<double>(spec_.mode));
      std::vector<double> refined(breaks.begin(), breaks.end());
      for (double t = 0.5 / k; t < 1.0; t *= 2.0)
      {
        refined.push_back(spec_.a + t);
      }
      return half_line_nodes(spec_.a, Side::Right, refined, spec_.quadrature);
    }
    case BlockKind::GrushinMode:
      break;
  }
  // x^-alpha dx with x = l y, l = |k|^(-1/(alpha+1)) the decay length of the
  // Green function. On y in [0,1] substitute y = t^q, q = 1/(1-alpha), so that
  // the weight becomes q dt; beyond 1 it is smooth.
  const double alpha = spec_.alpha;
  const double q = 1.0 / (1.0 - alpha);
  const double l = std::min(1.0, std::pow(std::abs(static_cast<double>(spec_.mode)), -1.0 / (alpha + 1.0)));
  std::vector<double> scaled(breaks.begin(), breaks.end());
  for (auto &b : scaled)
  {
    b /= l;
  }
  // The substituted integrand still carries fractional powers of t (from
  // x^(alpha+1)), so the panels are graded towards 0.
  std::vector<double> graded;
  for (double t = 0.25; t > 1e-8; t *= 0.25)
  {
    graded.push_back(t);
  }
  QuadNodes out;
  for (const auto &n : interval_nodes(0.0, 1.0, graded, spec_.quadrature))
  {
    out.push_back({l * std::pow(n.x, q), n.w * q * std::pow(l, 1.0 - alpha)});
  }
  for (const auto &n : half_line_nodes(1.0, Side::Right, scaled, spec_.quadrature))
  {
    const double x = l * n.x;
    out.push_back({x, n.w * l * std::pow(x, -alpha)});
  }
  return out;
}

Complex BlockOperator::l2_inner(const ScalarFn &f, const ScalarFn &g,
                                std::span<const double> breaks) const
{
  return integrate(nodes(breaks), [&](double x) { return std::conj(f(x)) * g(x); });
}

Complex BlockOperator::resolvent_apply(Complex z, const ScalarFn &f, double x) const
{
  require_kernel(z, "resolvent");
  const double br[1] = {x};
  return integrate(nodes(br), [&](double y) { return resolvent_kernel(z, x, y) * f(y); });
}

CVector BlockOperator::green_adjoint_apply(Complex z, const ScalarFn &f) const
{
  CVector out(trace_dim());
  for (int i = 0; i < trace_dim(); i++)
  {
    out(i) = l2_inner([&](double x) { return green_basis(z, x)(i); }, f);
  }
  return out;
}

CVector BlockOperator::lift_basis(double lambda, double x) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    if (lambda != 0.0)
    {
      throw Error(ErrorCode::UnsupportedKernel, "Grushin lift is only available at lambda = 0");
    }
    if (!contains(x))
    {
      throw Error(ErrorCode::OutOfDomain, "x = " + format_double(x) + " outside grushin_mode");
    }
    const double p = spec_.alpha + 1.0;
    return CVector::Constant(1, grushin_lift_profile(spec_.alpha, std::abs(spec_.mode), std::pow(x, p) / p));
  }
  require_kernel(lambda, "lift");
  if (!contains(x))
  {
    throw Error(ErrorCode::OutOfDomain, "x = " + format_double(x) + " outside " + to_string(spec_.kind));
  }
  const Complex w = omega(lambda);
  CVector v(trace_dim());
  switch (spec_.kind)
  {
    case BlockKind::LeftHalfLine:
    {
      const double s = spec_.b - x;
      v(0) = s * std::exp(-w * s) / (2.0 * w);
      break;
    }
    case BlockKind::RightHalfLine:
    case BlockKind::FlatMode:
    {
      const double s = x - spec_.a;
      v(0) = s * std::exp(-w * s) / (2.0 * w);
      break;
    }
    case BlockKind::Interval:
      if (w.real() * length() > 300.0)
      {
        throw Error(ErrorCode::OutOfDomain, "interval lift overflows for sqrt(lambda) d > 300");
      }
      v(0) = -interval_profile_dz(lambda, w, spec_.b - x, length());
      v(1) = -interval_profile_dz(lambda, w, x - spec_.a, length());
      break;
    default:
      break;
  }
  return v;
}

CVector BlockOperator::numeric_trace(const ScalarFn &f, double h) const
{
  if (spec_.kind == BlockKind::GrushinMode)
  {
    // A pointwise difference at 0 only converges like h^(1 - beta) here, so
    // the trace comes from Green's formula against the Green function.
    const auto g = [this](double x) { return green_basis(0.0, x)(0); };
    const auto af = [&](double x) { return grushin_apply_fd(f, x); };
    return CVector::Constant(1, l2_inner(g, af));
  }
  const auto ends = endpoints();
  CVector out(ends.size());
  for (std::size_t i = 0; i < ends.size(); i++)
  {
    const auto &e = ends[i];
    // Inward derivative: +f' from the right side, -f' from the left side.
    out(i) = e.block_on_right ? one_sided_derivative(f, e.position, h, +1)
                              : -one_sided_derivative(f, e.position, h, -1);
  }
  return out;
}

Complex BlockOperator::grushin_apply_fd(const ScalarFn &f, double x) const
{
  if (spec_.kind != BlockKind::GrushinMode)
  {
    throw Error(ErrorCode::UnsupportedBlock, "grushin_apply_fd needs a Grushin mode");
  }
  const double alpha = spec_.alpha;
  const double p = alpha + 1.0;
  const double k = std::abs(static_cast<double>(spec_.mode));
  const double s = std::pow(x, p) / p;
  const auto fs = [&](double t) { return f(std::pow(p * t, 1.0 / p)); };
  // f_ss blows up like s^-beta at 0; a step proportional to s keeps the
  // relative error uniform there.
  const double h = std::min(0.01 * s, 1e-3 / std::max(1.0, k));
  const Complex d2 =
    (-fs(s - 2 * h) + 16.0 * fs(s - h) - 30.0 * fs(s) + 16.0 * fs(s + h) - fs(s + 2 * h)) / (12.0 * h * h);
  return std::pow(x, 2.0 * alpha) * (-d2 + k * k * fs(s));
}

BlockOperator build_block(const BlockSpec &spec) { return BlockOperator(spec); }

Complex green_eval(const BlockOperator &block, Complex z, const CVector &xi, double x)
{
  return block.green_eval(z, xi, x);
}

GramMatrix gram(const BlockOperator &block, double lambda)
{
  return {block.gram(lambda), lambda};
}

CMatrix weyl_block(const BlockOperator &block, Complex z, double lambda)
{
  return block.weyl_block(z, lambda);
}

Complex resolvent_kernel_apply(const BlockOperator &block, Complex z, const ScalarFn &f, double x)
{
  return block.resolvent_apply(z, f, x);
}

double green_identity_residual(const BlockOperator &block, const BoundaryElement &u,
                               const BoundaryElement &v)
{
  if (block.kind() != BlockKind::FlatMode)
  {
    throw Error(ErrorCode::UnsupportedBlock, "Green identity check is implemented for flat modes");
  }
  const double k2 = static_cast<double>(block.spec().mode) * block.spec().mode;
  const Complex wp = std::sqrt(k2 + kI), wm = std::sqrt(k2 - kI);

  struct Prepared
  {
    ScalarFn value, d1, d2;
    Complex phi;
  };
  auto prepare = [&](const BoundaryElement &e) {
    if (!e.regular.value)
    {
      throw Error(ErrorCode::OutOfDomain, "domain element has no value function");
    }
    if (std::abs(e.regular.value(0.0)) > 1e-10)
    {
      throw Error(ErrorCode::OutOfDomain, "regular part must vanish at the boundary");
    }
    Prepared p{e.regular.value, e.regular.derivative, e.regular.second_derivative, e.phi};
    if (!p.d1)
    {
      p.d1 = [f = p.value](double x) { return one_sided_derivative(f, x, 1e-3, +1); };
    }
    if (!p.d2)
    {
      p.d2 = [f = p.value](double x) { return second_derivative_fd(f, x, 0.0); };
    }
    return p;
  };
  const Prepared pu = prepare(u), pv = prepare(v);

  auto full = [&](const Prepared &p, double x) {
    const Complex gp = std::exp(-wp * x), gm = std::exp(-wm * x);
    const Complex g0 = 0.5 * (gp + gm);
    const Complex ag0 = 0.5 * kI * (gp - gm);
    const Complex val = p.value(x) + p.phi * g0;
    const Complex sstar = p.d2(x) - k2 * p.value(x) + p.phi * ag0;
    return std::pair{val, sstar};
  };

  Complex lhs = 0.0;
  for (const auto &n : block.nodes())
  {
    const auto [uv, su] = full(pu, n.x);
    const auto [vv, sv] = full(pv, n.x);
    lhs += n.w * (std::conj(su) * vv - std::conj(uv) * sv);
  }
  const Complex beta0u = pu.d1(0.0), beta0v = pv.d1(0.0);
  const Complex rhs = std::conj(pu.phi) * beta0v - std::conj(beta0u) * pv.phi;
  return std::abs(lhs - rhs);
}

}  // namespace tracesum
