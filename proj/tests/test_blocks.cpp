#include <doctest.h>

#include <cmath>
#include <random>

#include "tracesum/blocks.hpp"
#include "tracesum/errors.hpp"
#include "tracesum/quadrature.hpp"
#include "tracesum/trace_spaces.hpp"

using namespace tracesum;

namespace
{

CMatrix quadrature_cross_gram(const BlockOperator &b, Complex z1, Complex z2)
{
  const int m = b.trace_dim();
  CMatrix q(m, m);
  for (int i = 0; i < m; i++)
  {
    for (int j = 0; j < m; j++)
    {
      q(i, j) = b.l2_inner([&](double x) { return b.green_basis(z1, x)(i); },
                           [&](double x) { return b.green_basis(z2, x)(j); });
    }
  }
  return q;
}

double rel(const CMatrix &a, const CMatrix &b) { return (a - b).norm() / b.norm(); }

// -f'' + (k^2 + z) f by centred differences.
Complex ode_residual(const BlockOperator &b, Complex z, double x)
{
  const double h = 1e-3;
  const CVector xi = CVector::Ones(b.trace_dim());
  auto f = [&](double t) { return b.green_eval(z, xi, t); };
  const double k = b.kind() == BlockKind::FlatMode ? b.spec().mode : 0.0;
  const Complex d2 = (-f(x - 2 * h) + 16.0 * f(x - h) - 30.0 * f(x) + 16.0 * f(x + h) - f(x + 2 * h)) / (12 * h * h);
  return -d2 + (k * k + z) * f(x);
}

}  // namespace

TEST_CASE("build_block")
{
  CHECK(build_block(BlockSpec::interval(0, 1)).trace_dim() == 2);
  CHECK(build_block(BlockSpec::left_half_line(0)).trace_dim() == 1);
  CHECK(build_block(BlockSpec::flat_mode(-3)).trace_dim() == 1);
  CHECK_THROWS_WITH_AS(build_block(BlockSpec::grushin_mode(1, 2.0)), doctest::Contains("alpha out of (0,1)"), Error);
  CHECK_THROWS_WITH_AS(build_block(BlockSpec::flat_mode(0)), doctest::Contains("InvalidSpec"), Error);
  CHECK_THROWS_WITH_AS(build_block(BlockSpec::interval(1, 1)), doctest::Contains("InvalidSpec"), Error);
}

TEST_CASE("endpoint orientation")
{
  const auto e = build_block(BlockSpec::interval(2, 5)).endpoints();
  REQUIRE(e.size() == 2);
  CHECK(e[0].position == 2.0);
  CHECK(e[0].block_on_right);
  CHECK(e[1].position == 5.0);
  CHECK_FALSE(e[1].block_on_right);
  CHECK_FALSE(build_block(BlockSpec::left_half_line(0)).endpoints()[0].block_on_right);
}

TEST_CASE("green_eval values")
{
  CVector e1(2);
  e1 << 1.0, 0.0;
  CHECK(std::abs(green_eval(build_block(BlockSpec::interval(0, 2)), 0.0, e1, 1.0) - 0.5) < 1e-15);
  const CVector one = CVector::Ones(1);
  CHECK(std::abs(green_eval(build_block(BlockSpec::flat_mode(1)), 0.0, one, 1.0) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(green_eval(build_block(BlockSpec::grushin_mode(1, 0.5)), 0.0, one, 1.0) - std::exp(-2.0 / 3.0)) <
        1e-15);
  // Interval at z = 0 is the linear interpolant.
  CVector xi(2);
  xi << 3.0, -1.0;
  const auto b = build_block(BlockSpec::interval(1, 3));
  for (double x : {1.0, 1.3, 2.0, 2.9, 3.0})
  {
    CHECK(std::abs(b.green_eval(0.0, xi, x) - (3.0 * (3 - x) - (x - 1)) / 2.0) < 1e-14);
  }
}

TEST_CASE("green_eval errors")
{
  const auto b = build_block(BlockSpec::flat_mode(1));
  CHECK_THROWS_WITH_AS(b.green_eval(-2.0, CVector::Ones(1), 1.0), doctest::Contains("SpectrumHit"), Error);
  CHECK_THROWS_WITH_AS(b.green_eval(0.0, CVector::Ones(1), -1.0), doctest::Contains("OutOfDomain"), Error);
  CHECK_THROWS_AS(build_block(BlockSpec::interval(0, 1)).green_eval(-M_PI * M_PI, CVector::Ones(2), 0.5), Error);
}

TEST_CASE("defect property: green functions solve the block ODE")
{
  for (const auto &spec : {BlockSpec::interval(0, 1.5), BlockSpec::left_half_line(0), BlockSpec::right_half_line(1),
                           BlockSpec::flat_mode(3)})
  {
    const auto b = build_block(spec);
    for (Complex z : {Complex(0.7), Complex(2.0, 1.0), Complex(0.3, -2.0)})
    {
      const double x = spec.kind == BlockKind::LeftHalfLine ? -0.6 : (spec.kind == BlockKind::RightHalfLine ? 1.8 : 0.6);
      CHECK(std::abs(ode_residual(b, z, x)) < 1e-6);
    }
  }
}

TEST_CASE("interval Gram at zero")
{
  for (double d : {0.1, 1.0, 10.0})
  {
    const auto b = build_block(BlockSpec::interval(0, d));
    CMatrix expected(2, 2);
    expected << d / 3, d / 6, d / 6, d / 3;
    CHECK(rel(gram(b, 0.0).matrix, expected) < 1e-12);
    CHECK(rel(quadrature_cross_gram(b, 0.0, 0.0), expected) < 1e-12);
  }
}

TEST_CASE("adjoint of the interval Green map")
{
  // Adjoint-consistent second component int (x - a) u dx reproduces the Gram.
  const auto b = build_block(BlockSpec::interval(0, 2));
  const ScalarFn u = [](double x) { return Complex(1.0 - x / 2.0); };  // g_1
  const CVector adj = b.green_adjoint_apply(0.0, u);
  const double d = 2.0;
  const double first = adaptive_integrate([&](double x) { return (d - x) * u(x).real() / d; }, 0, d, 1e-14);
  const double second = adaptive_integrate([&](double x) { return x * u(x).real() / d; }, 0, d, 1e-14);
  const double printed = adaptive_integrate([&](double x) { return (x - d) * u(x).real() / d; }, 0, d, 1e-14);
  CHECK(adj(0).real() == doctest::Approx(first).epsilon(1e-12));
  CHECK(adj(1).real() == doctest::Approx(second).epsilon(1e-12));
  CHECK(adj(1).real() == doctest::Approx(d / 6).epsilon(1e-12));
  // The sign-flipped form yields -d/3 instead of the off-diagonal d/6.
  CHECK(printed == doctest::Approx(-d / 3).epsilon(1e-12));
}

TEST_CASE("flat and half-line Grams")
{
  CHECK(gram(build_block(BlockSpec::flat_mode(2)), 0.0).matrix(0, 0).real() == doctest::Approx(0.25).epsilon(1e-15));
  for (int k = -64; k <= 64; k++)
  {
    if (k == 0)
      continue;
    const auto b = build_block(BlockSpec::flat_mode(k));
    const double expected = 1.0 / (2.0 * std::abs(k));
    CHECK(std::abs(b.gram(0.0)(0, 0).real() - expected) < 1e-12 * expected);
  }
  const auto h = build_block(BlockSpec::right_half_line(0));
  CHECK(h.gram(1.0)(0, 0).real() == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_WITH_AS(h.gram(0.0), doctest::Contains("BasePointInSpectrum"), Error);
}

TEST_CASE("closed forms agree with quadrature on a sweep")
{
  std::vector<BlockSpec> specs{BlockSpec::left_half_line(0.5), BlockSpec::right_half_line(-1.0)};
  for (double d : {0.1, 1.0, 10.0})
    specs.push_back(BlockSpec::interval(1.0, 1.0 + d));
  for (int k : {1, 2, 7, 64})
    specs.push_back(BlockSpec::flat_mode(k));
  for (const auto &s : specs)
  {
    const auto b = build_block(s);
    for (double lambda : {0.25, 1.0, 3.0})
    {
      const CMatrix g = b.gram(lambda);
      CHECK(rel(g, quadrature_cross_gram(b, lambda, lambda)) < 1e-10);
      CHECK(hermitian_defect(g) < 1e-14);
      Eigen::SelfAdjointEigenSolver<CMatrix> eig(g);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      const Complex z(2.0, 0.5);
      CHECK(rel(b.cross_gram(lambda, z), quadrature_cross_gram(b, lambda, z)) < 1e-9);
      // Weyl block against (z - lambda) G(lambda)^* G(z) Gram^{-1} by quadrature.
      const CMatrix w = (z - lambda) * quadrature_cross_gram(b, lambda, z) * g.inverse();
      CHECK(rel(b.weyl_block(z, lambda), w) < 1e-9);
    }
  }
}

TEST_CASE("Grushin Gram")
{
  for (double alpha : {0.25, 0.5, 0.75})
  {
    const double p = alpha + 1.0;
    // c(alpha) by adaptive quadrature after x = t^(1/(1-alpha)) on [0,1].
    const double q = 1.0 / (1.0 - alpha);
    const double head = adaptive_integrate(
      [&](double t) { return q * std::exp(-2.0 * std::pow(t, q * p) / p); }, 0.0, 1.0, 1e-14);
    const double tail = adaptive_integrate(
      [&](double x) { return std::exp(-2.0 * std::pow(x, p) / p) * std::pow(x, -alpha); }, 1.0, 40.0, 1e-14);
    for (int k : {1, 3, 17})
    {
      const auto b = build_block(BlockSpec::grushin_mode(k, alpha));
      const double expected = std::pow(k, (alpha - 1) / (alpha + 1)) * (head + tail);
      CHECK(b.gram(0.0)(0, 0).real() == doctest::Approx(expected).epsilon(1e-10));
      CHECK(rel(b.gram(0.0), quadrature_cross_gram(b, 0.0, 0.0)) < 1e-9);
    }
  }
  for (int k : {1, 5, 64})
  {
    const auto b = build_block(BlockSpec::grushin_mode(k, 1e-9));
    CHECK(std::abs(b.gram(0.0)(0, 0).real() - 0.5 / k) < 1e-6);
  }
  CHECK_THROWS_WITH_AS(build_block(BlockSpec::grushin_mode(1, 0.5)).gram(1.0), doctest::Contains("UnsupportedKernel"),
                       Error);
}

TEST_CASE("Weyl blocks")
{
  const auto f = build_block(BlockSpec::flat_mode(1));
  CHECK(std::abs(weyl_block(f, 3.0, 0.0)(0, 0) - 2.0) < 1e-14);
  for (int k : {1, 4, 9})
  {
    const auto b = build_block(BlockSpec::flat_mode(k));
    const double z = 2.5;
    const double closed = 2.0 * k * (std::sqrt(k * k + z) - k);
    CHECK(std::abs(b.weyl_block(z, 0.0)(0, 0) - closed) < 1e-12 * closed);
  }
  // W vanishes at the base point.
  for (const auto &s : {BlockSpec::interval(0, 1), BlockSpec::right_half_line(0), BlockSpec::flat_mode(2)})
  {
    CHECK(build_block(s).weyl_block(1.0, 1.0).norm() < 1e-14);
  }
  const auto iv = build_block(BlockSpec::interval(0, 1));
  const CMatrix w = 1.0 * quadrature_cross_gram(iv, 0.0, 1.0) * iv.gram(0.0).inverse();
  CHECK(rel(iv.weyl_block(1.0, 0.0), w) < 1e-10);
  CHECK_THROWS_AS(build_block(BlockSpec::grushin_mode(1, 0.5)).weyl_block(1.0, 0.0), Error);
}

TEST_CASE("resolvent kernels")
{
  const auto iv = build_block(BlockSpec::interval(0, 1));
  CHECK(std::abs(iv.resolvent_kernel(0.0, 0.25, 0.5) - 0.125) < 1e-15);
  const auto f = build_block(BlockSpec::flat_mode(1));
  // (e^{-w|x-y|} - e^{-w(x+y)})/(2w) with w = sqrt(k^2 + z) = sqrt(2).
  const double w = std::sqrt(2.0);
  CHECK(std::abs(f.resolvent_kernel(1.0, 1.0, 1.0) - (1 - std::exp(-2 * w)) / (2 * w)) < 1e-15);
  const auto half = build_block(BlockSpec::right_half_line(0));
  CHECK(std::abs(half.resolvent_kernel(1.0, 1.0, 1.0) - (1 - std::exp(-2.0)) / 2.0) < 1e-15);

  const ScalarFn s = [](double y) { return Complex(std::sin(M_PI * y)); };
  for (double x : {0.1, 0.5, 0.77})
  {
    CHECK(std::abs(resolvent_kernel_apply(iv, 0.0, s, x) - s(x) / (M_PI * M_PI)) < 1e-12);
  }
  CHECK_THROWS_WITH_AS(build_block(BlockSpec::grushin_mode(1, 0.5)).resolvent_kernel(0.0, 1.0, 1.0),
                       doctest::Contains("UnsupportedKernel"), Error);
}

TEST_CASE("resolvent inverts the block operator")
{
  // (-A + z) R(z) f = f on each kind, with A = d^2 - k^2.
  const ScalarFn bump = [](double y) { return Complex(std::exp(-(y - 0.6) * (y - 0.6) * 4.0), 0.3); };
  for (const auto &s : {BlockSpec::interval(0, 1.5), BlockSpec::right_half_line(0), BlockSpec::flat_mode(2)})
  {
    const auto b = build_block(s);
    const Complex z(1.5, 0.7);
    const double k = s.kind == BlockKind::FlatMode ? 2.0 : 0.0;
    const ScalarFn f = s.kind == BlockKind::Interval ? bump : ScalarFn([&](double y) { return bump(y) * std::exp(-y); });
    auto u = [&](double x) { return b.resolvent_apply(z, f, x); };
    const double x = 0.8, h = 2e-3;
    const Complex d2 = (-u(x - 2 * h) + 16.0 * u(x - h) - 30.0 * u(x) + 16.0 * u(x + h) - u(x + 2 * h)) / (12 * h * h);
    CHECK(std::abs(-d2 + (k * k + z) * u(x) - f(x)) < 1e-6);
    CHECK(std::abs(u(0.0)) < 1e-13);
  }
}

TEST_CASE("base-point bound for half-lines")
{
  // |G(-i)^* G(-i)| <= (1 + sqrt(1 + lambda^2))^2 |G(lambda)^* G(lambda)| at lambda = 1.
  const double lambda = 1.0;
  const double bound = std::pow(1.0 + std::sqrt(1.0 + lambda * lambda), 2);
  for (const auto &s : {BlockSpec::left_half_line(0), BlockSpec::right_half_line(2)})
  {
    const auto b = build_block(s);
    const double at_i = std::abs(b.cross_gram(Complex(0, -1), Complex(0, -1))(0, 0));
    const double at_l = std::abs(b.gram(lambda)(0, 0));
    CHECK(at_i <= bound * at_l);
    CHECK(std::abs(at_i - std::abs(quadrature_cross_gram(b, Complex(0, -1), Complex(0, -1))(0, 0))) < 1e-10);
  }
}

TEST_CASE("Grams at two base points give equivalent metrics")
{
  std::vector<ComponentMetric> a, c;
  for (int k = 1; k <= 64; k++)
  {
    const auto b = build_block(BlockSpec::flat_mode(k));
    a.push_back({k, b.gram(0.0).inverse()});
    c.push_back({k, b.gram(3.0).inverse()});
  }
  const auto r = metric_equivalence(build_weighted_space(a), build_weighted_space(c));
  CHECK(std::isfinite(r.spread()));
  CHECK(r.lower > 0.0);
  // Gram(3)/Gram(0) = |k|/sqrt(k^2 + 3) lies in [1/2, 1).
  CHECK(r.spread() < 2.0);
}

TEST_CASE("Green-type identity on flat modes")
{
  const auto b = build_block(BlockSpec::flat_mode(1));
  const DomainFunction xe{[](double x) { return Complex(x * std::exp(-x)); },
                          [](double x) { return Complex((1 - x) * std::exp(-x)); },
                          [](double x) { return Complex((x - 2) * std::exp(-x)); }};
  const DomainFunction zero{[](double) { return Complex(0.0); }, [](double) { return Complex(0.0); },
                            [](double) { return Complex(0.0); }};
  CHECK(green_identity_residual(b, {xe, 0.0}, {xe, 0.0}) < 1e-8);
  const double r = green_identity_residual(b, {zero, 1.0}, {xe, 0.0});
  CHECK(r < 1e-7);
  CHECK(std::abs(green_identity_residual(b, {xe, 0.0}, {zero, 1.0}) - r) < 1e-12);
  CHECK_THROWS_WITH_AS(green_identity_residual(build_block(BlockSpec::interval(0, 1)), {xe, 0.0}, {xe, 0.0}),
                       doctest::Contains("UnsupportedBlock"), Error);
}
