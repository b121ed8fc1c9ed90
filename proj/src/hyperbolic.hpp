#pragma once

// Entire-function helpers for sinh/cosh ratios that appear in interval Green
// functions. Series branches cover |t| < 1 where closed forms cancel.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>

namespace tracesum::detail
{

using Complex = std::complex<double>;

inline constexpr int kSeriesTerms = 24;

// exp(w) - 1 without cancellation for small |w|.
inline Complex cexpm1(Complex w)
{
  if (std::abs(w) > 1e-2)
  {
    return std::exp(w) - 1.0;
  }
  Complex term = w, sum = w;
  for (int n = 2; n < 12; n++)
  {
    term *= w / static_cast<double>(n);
    sum += term;
  }
  return sum;
}

// h(t) = sinh(sqrt t)/sqrt t = sum t^n/(2n+1)!
inline Complex sinhc_series(Complex t)
{
  Complex term = 1.0, sum = 1.0;
  for (int n = 1; n < kSeriesTerms; n++)
  {
    term *= t / static_cast<double>((2 * n) * (2 * n + 1));
    sum += term;
  }
  return sum;
}

// h'(t) = sum n t^(n-1)/(2n+1)!
inline Complex sinhc_series_derivative(Complex t)
{
  Complex term = 1.0, sum = 0.0;
  for (int n = 1; n < kSeriesTerms; n++)
  {
    term *= 1.0 / static_cast<double>((2 * n) * (2 * n + 1));
    sum += static_cast<double>(n) * term;
    term *= t;
  }
  return sum;
}

struct CothSeries
{
  // u coth u = sum a[n] u^(2n), u csch u = sum b[n] u^(2n).
  std::array<double, kSeriesTerms> a{};
  std::array<double, kSeriesTerms> b{};
};

inline const CothSeries &coth_series()
{
  static const CothSeries series = [] {
    CothSeries s;
    s.a[0] = 1.0;
    s.b[0] = 1.0;
    const double pi2 = std::numbers::pi * std::numbers::pi;
    for (int n = 1; n < kSeriesTerms; n++)
    {
      double zeta = 0.0;
      for (int k = 2000; k >= 1; k--)
      {
        zeta += std::pow(static_cast<double>(k), -2.0 * n);
      }
      if (n == 1)
      {
        zeta = pi2 / 6.0;
      }
      // B_2n/(2n)! = (-1)^(n+1) 2 zeta(2n) / (2 pi)^(2n)
      const double sign = (n % 2 == 1) ? 1.0 : -1.0;
      const double bern = sign * 2.0 * zeta / std::pow(2.0 * std::numbers::pi, 2.0 * n);
      s.a[n] = std::pow(4.0, n) * bern;
      s.b[n] = (2.0 - std::pow(4.0, n)) * bern;
    }
    return s;
  }();
  return series;
}

template <std::size_t N>
inline Complex poly(const std::array<double, N> &c, Complex w)
{
  Complex sum = 0.0;
  for (std::size_t n = N; n-- > 0;)
  {
    sum = sum * w + c[n];
  }
  return sum;
}

template <std::size_t N>
inline Complex poly_derivative(const std::array<double, N> &c, Complex w)
{
  Complex sum = 0.0;
  for (std::size_t n = N; n-- > 1;)
  {
    sum = sum * w + static_cast<double>(n) * c[n];
  }
  return sum;
}

}  // namespace tracesum::detail
