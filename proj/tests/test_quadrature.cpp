#include <doctest.h>

#include <cmath>

#include "tracesum/quadrature.hpp"

using namespace tracesum;

TEST_CASE("gauss-legendre is exact for degree 2n-1")
{
  const auto &nodes = gauss_legendre(20);
  CHECK(nodes.size() == 20);
  double w = 0.0, m38 = 0.0, m39 = 0.0;
  for (const auto &n : nodes)
  {
    w += n.w;
    m38 += n.w * std::pow(n.x, 38);
    m39 += n.w * std::pow(n.x, 39);
  }
  CHECK(w == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(m38 == doctest::Approx(2.0 / 39.0).epsilon(1e-13));
  CHECK(std::abs(m39) < 1e-15);
}

TEST_CASE("composite interval rule with breaks")
{
  QuadratureRule rule;
  const double br[] = {0.7, 1.3};
  const auto nodes = interval_nodes(0.0, 3.0, br, rule);
  const double v = integrate(nodes, [](double x) { return std::exp(x); });
  CHECK(v == doctest::Approx(std::exp(3.0) - 1.0).epsilon(1e-14));
  // A kink at the break is integrated exactly.
  const double kink = integrate(nodes, [](double x) { return std::abs(x - 0.7); });
  CHECK(kink == doctest::Approx(0.5 * 0.49 + 0.5 * 2.3 * 2.3).epsilon(1e-14));
}

TEST_CASE("half-line rules")
{
  QuadratureRule rule;
  const auto right = half_line_nodes(0.0, Side::Right, {}, rule);
  CHECK(integrate(right, [](double x) { return std::exp(-x); }) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(integrate(right, [](double x) { return x * x * std::exp(-x); }) == doctest::Approx(2.0).epsilon(1e-13));
  // Slow decay needs the tail map matched to the rate.
  QuadratureRule slow;
  slow.tail_rate = 0.05;
  const auto slow_nodes = half_line_nodes(0.0, Side::Right, {}, slow);
  CHECK(integrate(slow_nodes, [](double x) { return std::exp(-0.05 * x); }) == doctest::Approx(20.0).epsilon(1e-11));
  const auto left = half_line_nodes(2.0, Side::Left, {}, rule);
  CHECK(integrate(left, [](double x) { return std::exp(x - 2.0); }) == doctest::Approx(1.0).epsilon(1e-14));
  for (const auto &n : left)
  {
    CHECK(n.x <= 2.0);
  }
}

TEST_CASE("adaptive rule handles an endpoint singularity")
{
  const double v = adaptive_integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0, 1e-13);
  CHECK(v == doctest::Approx(2.0 / 3.0).epsilon(1e-11));
}
