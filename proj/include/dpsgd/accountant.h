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

// Privacy bounds for DP-SGD when only the last iterate is released.
//
// Projected DP-SGD on a domain of diameter D, with clipping norm C, learning
// rate eta, noise scale sigma and sampling rate p, is (eps, delta)-DP after T
// steps with
//
//   delta <= (1 - [(1-p) theta]^T) / (1 - (1-p) theta) * p theta,
//   theta  = theta_eps((D + 2 eta C) / sigma),
//
// which converges to p theta / (1 - (1-p) theta) as T grows. Regularized
// (unprojected) DP-SGD with weight decay lambda is bounded through a coupled
// projected process on balls of radius r_t plus a chi-squared coupling term.

#ifndef DPSGD_ACCOUNTANT_H_
#define DPSGD_ACCOUNTANT_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dpsgd/errors.h"
#include "dpsgd/hockey_stick.h"
#include "dpsgd/specfun.h"

namespace dpsgd {

// How a batch is drawn at every step.
class SamplingScheme {
 public:
  enum class Kind { kPoisson, kWithoutReplacement };

  // Unset scheme; Validate() rejects it.
  SamplingScheme() = default;

  // Every example joins the batch independently with probability `rate`.
  static SamplingScheme Poisson(double rate) {
    SamplingScheme s;
    s.kind_ = Kind::kPoisson;
    s.rate_ = rate;
    s.Validate();
    return s;
  }

  // A uniformly random subset of `batch_size` out of `population` examples.
  static SamplingScheme WithoutReplacement(int64_t batch_size,
                                           int64_t population) {
    SamplingScheme s;
    s.kind_ = Kind::kWithoutReplacement;
    s.batch_size_ = batch_size;
    s.population_ = population;
    s.rate_ = population > 0 ? static_cast<double>(batch_size) /
                                   static_cast<double>(population)
                             : 0.0;
    s.Validate();
    return s;
  }

  void Validate() const {
    if (kind_ == Kind::kPoisson) {
      if (!(rate_ > 0.0 && rate_ < 1.0)) {
        throw DomainError("Poisson sampling rate must lie in (0, 1)");
      }
    } else if (batch_size_ < 1 || batch_size_ > population_) {
      throw DomainError("sampling without replacement needs 1 <= b <= n");
    }
  }

  Kind kind() const { return kind_; }
  // Probability that a fixed example is in the batch: p, or b/n.
  double rate() const { return rate_; }
  int64_t batch_size() const { return batch_size_; }
  int64_t population() const { return population_; }

 private:
  Kind kind_ = Kind::kPoisson;
  double rate_ = 0.0;
  int64_t batch_size_ = 0;
  int64_t population_ = 0;
};

// Scalars of projected DP-SGD.
struct SgdBoundConfig {
  double diameter = 0.0;       // D, diameter of the parameter domain
  double clip_norm = 0.0;      // C
  double learning_rate = 0.0;  // eta
  double sigma = 0.0;          // noise standard deviation
  SamplingScheme sampling;
  int64_t iterations = 0;  // T

  // sigma = 0 and C = 0 are accepted as the degenerate cases of the bound.
  void Validate() const {
    auto nonneg = [](double v, const char* name) {
      if (!std::isfinite(v) || v < 0) {
        throw DomainError(std::string(name) + " must be finite and >= 0");
      }
    };
    nonneg(diameter, "diameter");
    nonneg(clip_norm, "clip_norm");
    nonneg(learning_rate, "learning_rate");
    nonneg(sigma, "sigma");
    if (iterations < 0) throw DomainError("iterations must be >= 0");
    sampling.Validate();
  }

  // (D + 2 eta C) / sigma. Zero when the numerator vanishes, +inf when only
  // sigma does.
  double DistanceRatio() const {
    const double spread = diameter + 2.0 * learning_rate * clip_norm;
    if (spread == 0.0) return 0.0;
    if (sigma == 0.0) return std::numeric_limits<double>::infinity();
    return spread / sigma;
  }
};

// One coupled contraction step E(K mu || K' nu) <= alpha E(mu || nu) + beta.
struct BoundStep {
  double alpha = 1.0;
  double beta = 0.0;
};

struct PrivacyPoint {
  double epsilon = 0.0;
  double delta = 0.0;

  void Validate() const {
    if (std::isnan(epsilon) || epsilon < 0) {
      throw DomainError("epsilon must be >= 0");
    }
    if (!(delta >= 0.0 && delta <= 1.0)) {
      throw DomainError("delta must lie in [0, 1]");
    }
  }
};

// Number of steps, or the T -> infinity limit.
class Horizon {
 public:
  static Horizon Infinite() { return Horizon(std::nullopt); }
  static Horizon Steps(int64_t steps) {
    if (steps < 0) throw DomainError("horizon must be >= 0");
    return Horizon(steps);
  }
  bool infinite() const { return !steps_.has_value(); }
  int64_t steps() const { return steps_.value_or(-1); }

 private:
  explicit Horizon(std::optional<int64_t> steps) : steps_(steps) {}
  std::optional<int64_t> steps_;
};

// [prod_t alpha_t] * initial + sum_t beta_t prod_{s>t} alpha_s, folded left
// to right as x <- alpha_t x + beta_t. Clamped to [0, 1].
inline double ComposeLinearBounds(std::span<const BoundStep> steps,
                                  double initial) {
  if (!(initial >= 0.0 && initial <= 1.0)) {
    throw DomainError("ComposeLinearBounds: initial must lie in [0, 1]");
  }
  double value = initial;
  for (const BoundStep& step : steps) {
    if (!(step.alpha >= 0.0 && step.alpha <= 1.0) ||
        !(step.beta >= 0.0 && step.beta <= 1.0)) {
      throw DomainError("ComposeLinearBounds: alpha, beta must lie in [0, 1]");
    }
    value = step.alpha * value + step.beta;
  }
  return std::clamp(value, 0.0, 1.0);
}

// The geometric bound for a given contraction value theta.
inline double GeometricDelta(double rate, double theta, int64_t steps) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw DomainError("GeometricDelta: rate must lie in (0, 1]");
  }
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("GeometricDelta: theta must lie in [0, 1]");
  }
  if (steps < 0) throw DomainError("GeometricDelta: steps must be >= 0");
  if (steps == 0 || theta == 0.0) return 0.0;
  const double gap = 1.0 - (1.0 - rate) * theta;  // 1 - a, a = (1-p) theta
  // 1 - a^T = -expm1(T log a), accurate when a is close to 1.
  const double partial = -std::expm1(static_cast<double>(steps) *
                                     std::log1p(-gap));
  return std::clamp(partial / gap * rate * theta, 0.0, 1.0);
}

inline double GeometricDeltaLimit(double rate, double theta) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw DomainError("GeometricDeltaLimit: rate must lie in (0, 1]");
  }
  if (!(theta >= 0.0 && theta <= 1.0)) {
    throw DomainError("GeometricDeltaLimit: theta must lie in [0, 1]");
  }
  if (theta == 1.0) return 1.0;
  return std::clamp(rate * theta / (1.0 - (1.0 - rate) * theta), 0.0, 1.0);
}

// theta_eps((D + 2 eta C) / sigma).
inline double ProjectedTheta(const SgdBoundConfig& config, double epsilon) {
  config.Validate();
  return Theta(epsilon, config.DistanceRatio());
}

// Delta bound after config.iterations steps of projected DP-SGD. Poisson
// sampling and sampling without replacement share it with p = b/n.
inline double DeltaProjected(const SgdBoundConfig& config, double epsilon) {
  return GeometricDelta(config.sampling.rate(), ProjectedTheta(config, epsilon),
                        config.iterations);
}

// Limit of DeltaProjected as the number of steps grows.
inline double DeltaLimit(const SgdBoundConfig& config, double epsilon) {
  return GeometricDeltaLimit(config.sampling.rate(),
                             ProjectedTheta(config, epsilon));
}

inline PrivacyPoint ProjectedGuarantee(const SgdBoundConfig& config,
                                       double epsilon) {
  PrivacyPoint point{epsilon, DeltaProjected(config, epsilon)};
  point.Validate();
  return point;
}

// eps <= r [r/2 + Phi^{-1}(p (1 - delta) / (p + (1 - p) delta))], from
// theta_eps(r) < Q(eps/r - r/2). Valid for every horizon.
inline double EpsilonClosedFormBound(const SgdBoundConfig& config,
                                     double delta) {
  config.Validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("EpsilonClosedFormBound: delta must lie in (0, 1)");
  }
  const double p = config.sampling.rate();
  const double denom = p + (1.0 - p) * delta;
  const double arg = p * (1.0 - delta) / denom;
  const double complement = delta / denom;  // 1 - arg
  const double r = config.DistanceRatio();
  if (r == 0.0) return 0.0;
  if (std::isinf(r)) return std::numeric_limits<double>::infinity();
  const double z = complement < 0.5 ? -StdNormalQuantile(complement)
                                    : StdNormalQuantile(arg);
  return std::max(0.0, r * (0.5 * r + z));
}

inline constexpr double kEpsilonTolerance = 1e-9;
inline constexpr int kMaxBisectionSteps = 200;

// Smallest eps whose delta bound is at most `delta`, over a finite horizon
// (bound of DeltaProjected) or in the limit (root of
// theta_eps(r) = delta / (p + (1 - p) delta)). Returns 0 when eps = 0 already
// satisfies the bound and +inf when sigma = 0 makes every bound trivial.
inline double EpsilonFromDelta(const SgdBoundConfig& config, double delta,
                               Horizon horizon) {
  config.Validate();
  if (!(delta > 0.0 && delta < 1.0)) {
    throw DomainError("EpsilonFromDelta: delta must lie in (0, 1)");
  }
  const double r = config.DistanceRatio();
  if (r == 0.0) return 0.0;
  if (std::isinf(r)) return std::numeric_limits<double>::infinity();
  const double p = config.sampling.rate();

  // excess(eps) > 0 while the bound is violated; strictly decreasing in eps.
  auto excess = [&](double epsilon) {
    if (horizon.infinite()) {
      return Theta(epsilon, r) - delta / (p + (1.0 - p) * delta);
    }
    return GeometricDelta(p, Theta(epsilon, r), horizon.steps()) - delta;
  };
  if (excess(0.0) <= 0.0) return 0.0;

  double lo = 0.0;
  double hi = std::max(EpsilonClosedFormBound(config, delta), 1.0);
  for (int i = 0; excess(hi) > 0.0; ++i) {
    if (i > 64) throw DomainError("EpsilonFromDelta: no bracketing epsilon");
    lo = hi;
    hi *= 2.0;
  }
  for (int i = 0; i < kMaxBisectionSteps && hi - lo > kEpsilonTolerance; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// ---------------------------------------------------------------------------
// Regularized DP-SGD.
// ---------------------------------------------------------------------------

// Which distance enters theta at step s of the coupled projected process.
// The support of psi_B(mu) lies in a ball of radius x_s = r_s - sigma kappa;
// the published bound feeds x_s / sigma to theta, while the contraction of a
// Gaussian kernel on that ball is governed by its diameter 2 x_s / sigma.
enum class BallContraction { kPublishedRadius, kDiameter };

struct RegularizedConfig {
  SgdBoundConfig base;  // diameter is ignored
  double lambda = 0.0;  // weight decay, w <- (1 - lambda) w - ...
  int dimension = 1;
  std::optional<double> kappa;  // nullopt: optimize
  BallContraction contraction = BallContraction::kPublishedRadius;

  // The bound needs sampling without replacement with b < n, sigma > 0 and
  // at least one step.
  void Validate() const {
    base.Validate();
    if (!(lambda > 0.0 && lambda < 1.0)) {
      throw DomainError("lambda must lie in (0, 1)");
    }
    if (dimension < 1) throw DomainError("dimension must be >= 1");
    if (kappa.has_value() && !(*kappa > 0.0 && std::isfinite(*kappa))) {
      throw DomainError("kappa must be > 0");
    }
    if (base.sampling.kind() != SamplingScheme::Kind::kWithoutReplacement) {
      throw DomainError("the regularized bound needs sampling without "
                        "replacement");
    }
    if (base.sampling.batch_size() >= base.sampling.population()) {
      throw DomainError("the regularized bound needs b < n");
    }
    if (!(base.sigma > 0.0)) throw DomainError("sigma must be > 0");
    if (base.iterations < 1) throw DomainError("iterations must be >= 1");
  }
};

// r_t = (eta C + kappa sigma) (1 - (1 - lambda)^t) / lambda.
inline double RadiusSchedule(const RegularizedConfig& config, double kappa,
                             int64_t t) {
  if (t < 1) throw DomainError("RadiusSchedule: t must be >= 1");
  if (!(kappa > 0.0)) throw DomainError("RadiusSchedule: kappa must be > 0");
  const double step =
      config.base.learning_rate * config.base.clip_norm + kappa * config.base.sigma;
  const double growth =
      -std::expm1(static_cast<double>(t) * std::log1p(-config.lambda));
  return step * growth / config.lambda;
}

inline double RadiusSchedule(const RegularizedConfig& config, int64_t t) {
  if (!config.kappa.has_value()) {
    throw DomainError("RadiusSchedule: kappa is not fixed");
  }
  return RadiusSchedule(config, *config.kappa, t);
}

// theta_s for s = 1..steps. The ball radius r_s - sigma kappa is formed as
// (1 - lambda) r_{s-1} + eta C, which is never negative.
inline std::vector<double> RegularizedThetas(const RegularizedConfig& config,
                                             double epsilon, double kappa,
                                             int64_t steps) {
  const double drift = config.base.learning_rate * config.base.clip_norm;
  const double factor =
      config.contraction == BallContraction::kDiameter ? 2.0 : 1.0;
  std::vector<double> thetas;
  thetas.reserve(static_cast<std::size_t>(steps));
  double previous_radius = 0.0;  // r_0
  for (int64_t s = 1; s <= steps; ++s) {
    const double ball = (1.0 - config.lambda) * previous_radius + drift;
    thetas.push_back(Theta(epsilon, factor * ball / config.base.sigma));
    previous_radius = RadiusSchedule(config, kappa, s);
  }
  return thetas;
}

// (1 + e^eps) [1 - P(chi^2_d <= kappa^2)^T].
inline double CouplingTerm(const RegularizedConfig& config, double epsilon,
                           double kappa, int64_t steps) {
  const double outside = Chi2Survival(config.dimension, kappa * kappa);
  if (outside == 0.0) return 0.0;
  const double escape =
      -std::expm1(static_cast<double>(steps) * std::log1p(-outside));
  return (1.0 + std::exp(epsilon)) * escape;
}

struct RegularizedTerms {
  double coupling = 0.0;
  // b/(n-b) sum_t (1-b/n)^{T-t} prod_{s=t}^T theta_s.
  double contraction = 0.0;
  // The same recursion composed with alpha_t = (1-b/n) theta_t and
  // beta_t = (b/n) theta_t from a zero initial divergence; smaller than
  // `contraction` by the factor 1 - b/n.
  double recursive_composition = 0.0;

  double delta() const { return coupling + contraction; }
  double recursive_delta() const { return coupling + recursive_composition; }
};

namespace internal {

// S_T = sum_{t<=T} (1-q)^{T-t} prod_{s=t}^T theta_s for T = 1..thetas.size(),
// via S_T = theta_T (1 + (1-q) S_{T-1}). No explicit product is formed, so
// underflowing thetas simply drive the sum to zero.
inline std::vector<double> ContractionSums(std::span<const double> thetas,
                                           double rate) {
  std::vector<double> sums;
  sums.reserve(thetas.size());
  double sum = 0.0;
  for (double theta : thetas) {
    sum = theta * (1.0 + (1.0 - rate) * sum);
    sums.push_back(sum);
  }
  return sums;
}

inline double ContractionPrefactor(const RegularizedConfig& config) {
  const auto& s = config.base.sampling;
  return static_cast<double>(s.batch_size()) /
         static_cast<double>(s.population() - s.batch_size());
}

}  // namespace internal

inline RegularizedTerms EvaluateRegularized(const RegularizedConfig& config,
                                            double epsilon, double kappa) {
  config.Validate();
  internal::RequireEpsilon(epsilon, "EvaluateRegularized");
  if (!(kappa > 0.0 && std::isfinite(kappa))) {
    throw DomainError("EvaluateRegularized: kappa must be > 0");
  }
  const int64_t steps = config.base.iterations;
  const double rate = config.base.sampling.rate();
  const std::vector<double> thetas =
      RegularizedThetas(config, epsilon, kappa, steps);

  RegularizedTerms terms;
  terms.coupling = CouplingTerm(config, epsilon, kappa, steps);
  terms.contraction = internal::ContractionPrefactor(config) *
                      internal::ContractionSums(thetas, rate).back();
  std::vector<BoundStep> bound_steps;
  bound_steps.reserve(thetas.size());
  for (double theta : thetas) {
    bound_steps.push_back({(1.0 - rate) * theta, rate * theta});
  }
  terms.recursive_composition = ComposeLinearBounds(bound_steps, 0.0);
  return terms;
}

// The regularized delta bound for a fixed kappa.
inline double DeltaRegularized(const RegularizedConfig& config, double epsilon,
                               double kappa) {
  return EvaluateRegularized(config, epsilon, kappa).delta();
}

inline constexpr int kKappaGridPoints = 256;
inline constexpr double kKappaGridLowCdf = 0.5;
inline constexpr double kKappaGridHighTail = 1e-15;
inline constexpr double kKappaRelativeWidth = 1e-6;

// Log-spaced kappa values whose squares run from the chi-squared median to
// the 1 - 1e-15 quantile.
inline std::vector<double> KappaSearchGrid(int dimension) {
  const double lo = std::sqrt(Chi2Quantile(dimension, kKappaGridLowCdf));
  const double hi =
      std::sqrt(Chi2InverseSurvival(dimension, kKappaGridHighTail));
  std::vector<double> grid(kKappaGridPoints);
  const double log_lo = std::log(lo);
  const double step = (std::log(hi) - log_lo) / (kKappaGridPoints - 1);
  for (int i = 0; i < kKappaGridPoints; ++i) grid[i] = std::exp(log_lo + step * i);
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

struct OptimizedRegularized {
  int64_t iterations = 0;
  double delta = 0.0;
  double kappa = 0.0;
};

// Minimizes the regularized bound over kappa for each requested horizon:
// a coarse scan of KappaSearchGrid, then golden-section search between the
// neighbours of the best grid point. The returned delta never exceeds the
// value at any grid point.
inline std::vector<OptimizedRegularized> OptimizeRegularizedCurve(
    const RegularizedConfig& config, double epsilon,
    std::span<const int64_t> horizons) {
  config.Validate();
  internal::RequireEpsilon(epsilon, "OptimizeRegularizedCurve");
  int64_t max_steps = 0;
  for (int64_t t : horizons) {
    if (t < 1) throw DomainError("OptimizeRegularizedCurve: horizons >= 1");
    max_steps = std::max(max_steps, t);
  }
  const double rate = config.base.sampling.rate();
  const double prefactor = internal::ContractionPrefactor(config);
  const std::vector<double> grid = KappaSearchGrid(config.dimension);

  // grid_values[j][h]: bound at grid[j] for horizons[h].
  std::vector<std::vector<double>> grid_values(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const std::vector<double> sums = internal::ContractionSums(
        RegularizedThetas(config, epsilon, grid[j], max_steps), rate);
    grid_values[j].reserve(horizons.size());
    for (int64_t t : horizons) {
      grid_values[j].push_back(CouplingTerm(config, epsilon, grid[j], t) +
                               prefactor * sums[static_cast<std::size_t>(t - 1)]);
    }
  }

  std::vector<OptimizedRegularized> out;
  out.reserve(horizons.size());
  for (std::size_t h = 0; h < horizons.size(); ++h) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < grid.size(); ++j) {
      if (grid_values[j][h] < grid_values[best][h]) best = j;
    }
    RegularizedConfig fixed = config;
    fixed.base.iterations = horizons[h];
    auto objective = [&](double kappa) {
      return EvaluateRegularized(fixed, epsilon, kappa).delta();
    };
    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min(best + 1, grid.size() - 1)];
    constexpr double kInvPhi = 0.61803398874989484820;
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = objective(c);
    double fd = objective(d);
    while (b - a > kKappaRelativeWidth * 0.5 * (a + b)) {
      if (fc < fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - kInvPhi * (b - a);
        fc = objective(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + kInvPhi * (b - a);
        fd = objective(d);
      }
    }
    OptimizedRegularized result{horizons[h], grid_values[best][h], grid[best]};
    const double refined_kappa = fc < fd ? c : d;
    const double refined = std::min(fc, fd);
    if (refined < result.delta) {
      result.delta = refined;
      result.kappa = refined_kappa;
    }
    out.push_back(result);
  }
  return out;
}

inline OptimizedRegularized DeltaRegularizedOptimized(
    const RegularizedConfig& config, double epsilon) {
  config.Validate();
  const int64_t horizon[] = {config.base.iterations};
  return OptimizeRegularizedCurve(config, epsilon, horizon).front();
}

}  // namespace dpsgd

#endif  // DPSGD_ACCOUNTANT_H_
