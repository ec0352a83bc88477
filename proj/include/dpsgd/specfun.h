// Copyright 2026 The DP-SGD Accounting Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Scalar special functions used by the bound evaluators: the standard normal
// upper tail Q, its logarithm, the normal quantile and the chi-squared
// distribution function.
//
// All functions are pure and reentrant.

#ifndef DPSGD_SPECFUN_H_
#define DPSGD_SPECFUN_H_

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dpsgd/errors.h"

namespace dpsgd {

inline constexpr double kInvSqrt2 = 0.70710678118654752440;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;
inline constexpr double kInvSqrt2Pi = 0.39894228040143267794;

// Below this point log(Q) is taken from erfc directly; above it from the
// asymptotic tail series.
inline constexpr double kLogTailSeriesThreshold = 8.0;

namespace internal {

inline void RequireFinite(double x, const char* who) {
  if (!std::isfinite(x)) {
    throw DomainError(std::string(who) + ": argument must be finite");
  }
}

// log Gamma(a) for a > 0 without touching the global signgam.
inline double LogGamma(double a) {
#if defined(__GLIBC__)
  int sign = 0;
  return ::lgamma_r(a, &sign);
#else
  return std::lgamma(a);
#endif
}

// Regularized lower incomplete gamma by its power series; valid for
// z < a + 1.
inline double LowerGammaSeries(double a, double z) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < 10000; ++n) {
    term *= z / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * 1e-17) break;
  }
  return sum * std::exp(a * std::log(z) - z - LogGamma(a));
}

// Regularized upper incomplete gamma by the Legendre continued fraction
// (modified Lentz); valid for z >= a + 1.
inline double UpperGammaContinuedFraction(double a, double z) {
  constexpr double kTiny = 1e-300;
  double b = z + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 10000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(a * std::log(z) - z - LogGamma(a)) * h;
}

inline void RequireChi2Args(int dof, double x, const char* who) {
  if (dof < 1) {
    throw DomainError(std::string(who) + ": degrees of freedom must be >= 1");
  }
  if (std::isnan(x) || x < 0) {
    throw DomainError(std::string(who) + ": x must be >= 0");
  }
}

}  // namespace internal

// Standard normal density.
inline double NormalPdf(double t) {
  return kInvSqrt2Pi * std::exp(-0.5 * t * t);
}

// Q(t) = P(Z > t) for a standard normal Z.
inline double QTail(double t) {
  internal::RequireFinite(t, "QTail");
  return 0.5 * std::erfc(t * kInvSqrt2);
}

// ln Q(t). For t >= 8 the value comes from
//   Q(t) = phi(t)/t * (1 - 1/t^2 + 3/t^4 - 15/t^6 + ...),
// so exp(eps + LogQTail(t)) stays representable for very large eps.
inline double LogQTail(double t) {
  internal::RequireFinite(t, "LogQTail");
  if (t < 0) return std::log1p(-QTail(-t));
  if (t < kLogTailSeriesThreshold) return std::log(QTail(t));
  const double inv_t2 = 1.0 / (t * t);
  double term = 1.0;
  double series = 1.0;
  for (int k = 1; k < 200; ++k) {
    const double next = -term * (2 * k - 1) * inv_t2;
    // Asymptotic series: stop at the smallest term.
    if (std::abs(next) >= std::abs(term)) break;
    term = next;
    series += term;
    if (std::abs(term) < 1e-16 * std::abs(series)) break;
  }
  return -0.5 * t * t - std::log(t) - kLogSqrt2Pi + std::log(series);
}

// Phi^{-1}(p), the standard normal quantile, for p in (0, 1).
//
// Bisection on Q over [0, 40] followed by a single Newton step. The tail
// probability is always the smaller of p and 1 - p, and 1 - p is exact for
// p >= 1/2, so both tails keep full relative precision.
inline double StdNormalQuantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("StdNormalQuantile: p must lie in (0, 1)");
  }
  if (p == 0.5) return 0.0;
  const bool lower = p < 0.5;
  const double tail = lower ? p : 1.0 - p;
  double lo = 0.0;
  double hi = 40.0;
  for (int i = 0; i < 200 && hi - lo > 1e-13 * std::max(1.0, hi); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (QTail(mid) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  double x = 0.5 * (lo + hi);
  const double density = NormalPdf(x);
  if (density > 1e-290) {
    const double refined = x + (QTail(x) - tail) / density;
    if (refined >= lo && refined <= hi) x = refined;
  }
  return lower ? -x : x;
}

// P(chi^2_d <= x).
inline double Chi2Cdf(int dof, double x) {
  internal::RequireChi2Args(dof, x, "Chi2Cdf");
  if (x == 0) return 0.0;
  if (std::isinf(x)) return 1.0;
  const double a = 0.5 * dof;
  const double z = 0.5 * x;
  if (z < a + 1.0) return std::min(1.0, internal::LowerGammaSeries(a, z));
  return 1.0 - internal::UpperGammaContinuedFraction(a, z);
}

// P(chi^2_d > x), accurate in relative terms deep into the upper tail.
inline double Chi2Survival(int dof, double x) {
  internal::RequireChi2Args(dof, x, "Chi2Survival");
  if (x == 0) return 1.0;
  if (std::isinf(x)) return 0.0;
  const double a = 0.5 * dof;
  const double z = 0.5 * x;
  if (z < a + 1.0) return 1.0 - std::min(1.0, internal::LowerGammaSeries(a, z));
  return internal::UpperGammaContinuedFraction(a, z);
}

// Smallest x with P(chi^2_d > x) <= tail, for tail in (0, 1). Bisection to
// relative width 1e-14.
inline double Chi2InverseSurvival(int dof, double tail) {
  if (dof < 1) {
    throw DomainError("Chi2InverseSurvival: degrees of freedom must be >= 1");
  }
  if (!(tail > 0.0 && tail < 1.0)) {
    throw DomainError("Chi2InverseSurvival: tail must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = std::max(1.0, 2.0 * dof);
  while (Chi2Survival(dof, hi) > tail) {
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < 400 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (Chi2Survival(dof, mid) > tail) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// x with P(chi^2_d <= x) = p.
inline double Chi2Quantile(int dof, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("Chi2Quantile: p must lie in (0, 1)");
  }
  return Chi2InverseSurvival(dof, 1.0 - p);
}

}  // namespace dpsgd

#endif  // DPSGD_SPECFUN_H_
