#include "tracesum/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>

#include "tracesum/errors.hpp"

namespace tracesum
{

namespace
{

QuadNodes compute_gauss_legendre(int n)
{
  QuadNodes out(n);
  for (int i = 0; i < (n + 1) / 2; i++)
  {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; it++)
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; k++)
      {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1)
      {
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16)
      {
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    out[i] = {-x, w};
    out[n - 1 - i] = {x, w};
  }
  if (n % 2 == 1)
  {
    out[n / 2].x = 0.0;
  }
  return out;
}

void append_panel(QuadNodes &out, double a, double b, int order)
{
  const auto &gl = gauss_legendre(order);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (const auto &n : gl)
  {
    out.push_back({mid + half * n.x, half * n.w});
  }
}

// Splits [a, b] at the interior breaks and then into panels of width <= h.
void append_composite(QuadNodes &out, double a, double b, std::span<const double> breaks,
                      double h, int order)
{
  std::vector<double> cuts{a};
  for (double c : breaks)
  {
    if (c > a && c < b)
    {
      cuts.push_back(c);
    }
  }
  cuts.push_back(b);
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); i++)
  {
    const double len = cuts[i + 1] - cuts[i];
    if (len <= 0.0)
    {
      continue;
    }
    const int panels = std::max(1, static_cast<int>(std::ceil(len / h - 1e-12)));
    for (int p = 0; p < panels; p++)
    {
      append_panel(out, cuts[i] + len * p / panels, cuts[i] + len * (p + 1) / panels, order);
    }
  }
}

double gl10(const std::function<double(double)> &f, double a, double b)
{
  const auto &gl = gauss_legendre(10);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double s = 0.0;
  for (const auto &n : gl)
  {
    s += n.w * f(mid + half * n.x);
  }
  return half * s;
}

double adaptive_step(const std::function<double(double)> &f, double a, double b, double whole,
                     double tol, int depth)
{
  const double m = 0.5 * (a + b);
  const double left = gl10(f, a, m), right = gl10(f, m, b);
  if (std::abs(left + right - whole) <= tol || depth <= 0)
  {
    return left + right;
  }
  return adaptive_step(f, a, m, left, 0.5 * tol, depth - 1) +
         adaptive_step(f, m, b, right, 0.5 * tol, depth - 1);
}

}  // namespace

const QuadNodes &gauss_legendre(int n)
{
  if (n < 1)
  {
    throw Error(ErrorCode::InvalidSpec, "Gauss-Legendre order must be positive");
  }
  static std::mutex mutex;
  static std::map<int, QuadNodes> cache;
  std::lock_guard lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end())
  {
    it = cache.emplace(n, compute_gauss_legendre(n)).first;
  }
  return it->second;
}

QuadNodes interval_nodes(double a, double b, std::span<const double> breaks,
                         const QuadratureRule &rule)
{
  QuadNodes out;
  append_composite(out, a, b, breaks, rule.panel_width, rule.order);
  return out;
}

QuadNodes half_line_nodes(double end, Side side, std::span<const double> breaks,
                          const QuadratureRule &rule)
{
  // Work on [0, inf) in the distance s = |y - end| and map back.
  std::vector<double> dist;
  double far = rule.cutoff;
  for (double c : breaks)
  {
    const double s = side == Side::Right ? c - end : end - c;
    if (s > 0.0)
    {
      dist.push_back(s);
      far = std::max(far, s + 1.0);
    }
  }
  std::vector<double> edges{0.0};
  double w = 0.5 * rule.panel_width;
  while (edges.back() < far)
  {
    edges.push_back(std::min(far, edges.back() + w));
    w *= rule.growth;
  }
  QuadNodes near;
  for (std::size_t i = 0; i + 1 < edges.size(); i++)
  {
    append_composite(near, edges[i], edges[i + 1], dist, edges[i + 1] - edges[i], rule.order);
  }
  // Tail: s = far - log(t)/rate, ds = dt / (rate t).
  const auto &gl = gauss_legendre(rule.tail_order);
  for (const auto &n : gl)
  {
    const double t = 0.5 * (n.x + 1.0);
    near.push_back({far - std::log(t) / rule.tail_rate, 0.5 * n.w / (rule.tail_rate * t)});
  }
  QuadNodes out;
  out.reserve(near.size());
  for (const auto &n : near)
  {
    out.push_back({side == Side::Right ? end + n.x : end - n.x, n.w});
  }
  return out;
}

double adaptive_integrate(const std::function<double(double)> &f, double a, double b,
                          double tol, int max_depth)
{
  return adaptive_step(f, a, b, gl10(f, a, b), tol, max_depth);
}

}  // namespace tracesum
