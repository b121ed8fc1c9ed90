#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "tracesum/types.hpp"

namespace tracesum
{

// Composite Gauss-Legendre settings. Intervals are cut into panels no wider
// than panel_width; half-lines use geometrically growing panels up to
// `cutoff` and an exponential map t = exp(-tail_rate (y - y_c)) beyond it.
struct QuadratureRule
{
  std::string name = "gauss-legendre";
  int order = 20;
  double tolerance = 1e-12;
  double panel_width = 1.0;
  double growth = 1.25;
  double cutoff = 60.0;
  int tail_order = 24;
  double tail_rate = 1.0;
};

struct QuadNode
{
  double x;
  double w;
};

using QuadNodes = std::vector<QuadNode>;

enum class Side
{
  Left,   // (-inf, end]
  Right,  // [end, +inf)
};

// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
const QuadNodes &gauss_legendre(int n);

QuadNodes interval_nodes(double a, double b, std::span<const double> breaks,
                         const QuadratureRule &rule);

QuadNodes half_line_nodes(double end, Side side, std::span<const double> breaks,
                          const QuadratureRule &rule);

template <typename F>
auto integrate(const QuadNodes &nodes, F &&f) -> decltype(f(0.0))
{
  decltype(f(0.0)) sum{};
  for (const auto &n : nodes)
  {
    sum += n.w * f(n.x);
  }
  return sum;
}

// Globally adaptive Gauss-Legendre on a finite interval: a panel is accepted
// when the 10-point estimate and the sum over its two 10-point halves agree
// to tol (absolute) scaled by the panel's share of the interval.
double adaptive_integrate(const std::function<double(double)> &f, double a, double b,
                          double tol, int max_depth = 40);

}  // namespace tracesum
