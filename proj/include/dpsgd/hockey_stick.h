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

// Hockey-stick divergence on finite supports and the contraction function
// theta_eps(r) of input-constrained Gaussian kernels.
//
// For probability measures mu, nu and eps >= 0,
//
//   E_eps(mu || nu) = sup_A [mu(A) - e^eps nu(A)] = sum_i (mu_i - e^eps nu_i)^+
//
// on a finite support. E_0 is the total variation distance. The supremum of
// E_eps(N(x1, s^2) || N(x2, s^2)) over |x1 - x2| <= D equals theta_eps(D / s).

#ifndef DPSGD_HOCKEY_STICK_H_
#define DPSGD_HOCKEY_STICK_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpsgd/errors.h"
#include "dpsgd/specfun.h"

namespace dpsgd {

inline constexpr double kMassTolerance = 1e-12;

// A probability measure on finitely many points of the real line.
class DiscreteDist {
 public:
  // Validates that atoms are strictly increasing, masses are non-negative
  // and sum to one within `mass_tolerance`.
  static DiscreteDist Create(std::vector<double> atoms,
                             std::vector<double> masses,
                             double mass_tolerance = kMassTolerance) {
    if (atoms.size() != masses.size()) {
      throw StructuralError("DiscreteDist: atoms and masses differ in length");
    }
    if (atoms.empty()) {
      throw StructuralError("DiscreteDist: empty support");
    }
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      if (!std::isfinite(atoms[i])) {
        throw DomainError("DiscreteDist: atoms must be finite");
      }
      if (i > 0 && !(atoms[i] > atoms[i - 1])) {
        throw StructuralError("DiscreteDist: atoms must be strictly increasing");
      }
      if (!(masses[i] >= 0.0) || !std::isfinite(masses[i])) {
        throw DomainError("DiscreteDist: masses must be finite and >= 0");
      }
    }
    double total = 0.0;
    for (double m : masses) total += m;
    if (std::abs(total - 1.0) > mass_tolerance) {
      throw DomainError("DiscreteDist: masses sum to " + std::to_string(total) +
                        ", expected 1");
    }
    return DiscreteDist(std::move(atoms), std::move(masses));
  }

  static DiscreteDist Dirac(double atom) { return Create({atom}, {1.0}); }

  std::span<const double> atoms() const { return atoms_; }
  std::span<const double> masses() const { return masses_; }
  std::size_t size() const { return atoms_.size(); }

  double TotalMass() const {
    double total = 0.0;
    for (double m : masses_) total += m;
    return total;
  }

 private:
  DiscreteDist(std::vector<double> atoms, std::vector<double> masses)
      : atoms_(std::move(atoms)), masses_(std::move(masses)) {}

  std::vector<double> atoms_;
  std::vector<double> masses_;
};

// Two measures written over the sorted union of their supports.
struct AlignedMasses {
  std::vector<double> atoms;
  std::vector<double> first;
  std::vector<double> second;
};

// Atoms are matched by exact coordinate equality; grids are built once and
// shared, so no tolerance is involved.
inline AlignedMasses Align(const DiscreteDist& mu, const DiscreteDist& nu) {
  AlignedMasses out;
  const auto a = mu.atoms();
  const auto b = nu.atoms();
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < a.size() || j < b.size()) {
    if (j == b.size() || (i < a.size() && a[i] < b[j])) {
      out.atoms.push_back(a[i]);
      out.first.push_back(mu.masses()[i++]);
      out.second.push_back(0.0);
    } else if (i == a.size() || b[j] < a[i]) {
      out.atoms.push_back(b[j]);
      out.first.push_back(0.0);
      out.second.push_back(nu.masses()[j++]);
    } else {
      out.atoms.push_back(a[i]);
      out.first.push_back(mu.masses()[i++]);
      out.second.push_back(nu.masses()[j++]);
    }
  }
  return out;
}

namespace internal {

inline void RequireEpsilon(double epsilon, const char* who) {
  if (std::isnan(epsilon) || epsilon < 0) {
    throw DomainError(std::string(who) + ": epsilon must be >= 0");
  }
}

}  // namespace internal

// E_eps over mass vectors that already share one support.
inline double HockeyStickDivergence(std::span<const double> mu,
                                    std::span<const double> nu,
                                    double epsilon) {
  internal::RequireEpsilon(epsilon, "HockeyStickDivergence");
  if (mu.size() != nu.size()) {
    throw StructuralError("HockeyStickDivergence: supports differ in size");
  }
  const double scale = std::exp(epsilon);
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    if (nu[i] == 0.0) {
      total += mu[i];
    } else {
      total += std::max(mu[i] - scale * nu[i], 0.0);
    }
  }
  return std::clamp(total, 0.0, 1.0);
}

inline double HockeyStickDivergence(const DiscreteDist& mu,
                                    const DiscreteDist& nu, double epsilon) {
  const AlignedMasses aligned = Align(mu, nu);
  return HockeyStickDivergence(aligned.first, aligned.second, epsilon);
}

// 1/2 sum |mu_i - nu_i|.
inline double TotalVariation(std::span<const double> mu,
                             std::span<const double> nu) {
  if (mu.size() != nu.size()) {
    throw StructuralError("TotalVariation: supports differ in size");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) total += std::abs(mu[i] - nu[i]);
  return 0.5 * total;
}

inline double TotalVariation(const DiscreteDist& mu, const DiscreteDist& nu) {
  const AlignedMasses aligned = Align(mu, nu);
  return TotalVariation(aligned.first, aligned.second);
}

// theta_eps(r) = Q(eps/r - r/2) - e^eps Q(eps/r + r/2), with r the distance
// between the two Gaussian means in units of the noise scale.
//
// theta_eps(0) = 0 and theta_eps(+inf) = 1 (the sigma = 0 convention).
// The second term is evaluated as exp(eps + ln Q(.)) so it never overflows.
inline double Theta(double epsilon, double r) {
  internal::RequireEpsilon(epsilon, "Theta");
  if (std::isnan(r) || r < 0) throw DomainError("Theta: r must be >= 0");
  if (r == 0.0) return 0.0;
  if (std::isinf(r)) return 1.0;
  if (std::isinf(epsilon)) return 0.0;
  const double ratio = epsilon / r;
  const double value = QTail(ratio - 0.5 * r) -
                       std::exp(epsilon + LogQTail(ratio + 0.5 * r));
  return std::clamp(value, 0.0, 1.0);
}

// eta_eps of the Gaussian kernel N(x, sigma^2) restricted to inputs of the
// given diameter.
inline double GaussianContraction(double diameter, double sigma,
                                  double epsilon) {
  if (!(sigma > 0.0)) {
    throw DomainError("GaussianContraction: sigma must be > 0");
  }
  if (std::isnan(diameter) || diameter < 0) {
    throw DomainError("GaussianContraction: diameter must be >= 0");
  }
  return Theta(epsilon, diameter / sigma);
}

}  // namespace dpsgd

#endif  // DPSGD_HOCKEY_STICK_H_
