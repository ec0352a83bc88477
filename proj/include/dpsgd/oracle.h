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

// Exact one-dimensional grid model of DP-SGD.
//
// Measures live on the centers of a uniform grid and every step of the
// iteration is a row-stochastic matrix: the sampled update map (snapped to
// the grid by linear two-cell splitting), the Gaussian noise (exact cell
// masses, tails folded into the boundary cells) and the projection. The
// verifiers push measures through these matrices and compare the exact
// hockey-stick divergence with the analytic bounds.
//
// Snapping moves each point by less than one cell width h, so the distance
// between kernel inputs grows by at most 2h. Every comparison is therefore
// allowed the slack obtained by evaluating the bound at r + 2h/sigma instead
// of r.

#ifndef DPSGD_ORACLE_H_
#define DPSGD_ORACLE_H_

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpsgd/accountant.h"
#include "dpsgd/errors.h"
#include "dpsgd/hockey_stick.h"
#include "dpsgd/report.h"
#include "dpsgd/specfun.h"
#include "json.hpp"

namespace dpsgd {

inline constexpr int kMaxDatasetSize = 12;
inline constexpr double kRowSumTolerance = 1e-10;
inline constexpr double kPushForwardMassTolerance = 1e-9;
inline constexpr double kExactSlack = 1e-12;

// Uniform grid of n cells on [lo, hi]; cell centers are the atoms.
class Grid1D {
 public:
  Grid1D(double lo, double hi, int cells) : lo_(lo), hi_(hi), cells_(cells) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
      throw DomainError("Grid1D: need finite lo < hi");
    }
    if (cells < 3) throw DomainError("Grid1D: need at least 3 cells");
    spacing_ = (hi - lo) / cells;
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  int cells() const { return cells_; }
  double spacing() const { return spacing_; }

  double Center(int i) const { return lo_ + (i + 0.5) * spacing_; }
  double Edge(int i) const { return i == cells_ ? hi_ : lo_ + i * spacing_; }

  std::vector<double> Centers() const {
    std::vector<double> out(cells_);
    for (int i = 0; i < cells_; ++i) out[i] = Center(i);
    return out;
  }

  // Index k with Edge(k) == x up to 1e-9 cells, if any.
  std::optional<int> EdgeIndex(double x) const {
    const double u = (x - lo_) / spacing_;
    const double k = std::round(u);
    if (std::abs(u - k) > 1e-9 || k < 0 || k > cells_) return std::nullopt;
    return static_cast<int>(k);
  }

  // Cell containing x, clamped to the grid.
  int CellOf(double x) const {
    const double u = std::floor((x - lo_) / spacing_);
    return static_cast<int>(std::clamp(u, 0.0, static_cast<double>(cells_ - 1)));
  }

  // Index of the atom equal to x, if x is a center.
  std::optional<int> AtomIndex(double x) const {
    const int i = CellOf(x);
    if (std::abs(Center(i) - x) > 1e-9 * spacing_) return std::nullopt;
    return i;
  }

  // Linear two-cell split of a unit mass at x; clamped at the end centers.
  struct Split {
    int lower = 0;
    int upper = 0;
    double upper_weight = 0.0;
  };

  Split Snap(double x) const {
    const double u = (x - lo_) / spacing_ - 0.5;
    if (!(u > 0.0)) return {0, 0, 0.0};
    if (u >= cells_ - 1) return {cells_ - 1, cells_ - 1, 0.0};
    const int i = static_cast<int>(std::floor(u));
    const double frac = u - i;
    return {i, std::min(i + 1, cells_ - 1), frac};
  }

  // Centers lying in [a, b].
  std::vector<int> AtomsIn(double a, double b) const {
    std::vector<int> out;
    for (int i = 0; i < cells_; ++i) {
      const double c = Center(i);
      if (c >= a && c <= b) out.push_back(i);
    }
    return out;
  }

  nlohmann::json ToJson() const {
    return {{"lo", lo_}, {"hi", hi_}, {"cells", cells_}, {"h", spacing_}};
  }

 private:
  double lo_;
  double hi_;
  int cells_;
  double spacing_;
};

// Dense row-stochastic matrix acting on row vectors: (mu K)_j.
class KernelMatrix {
 public:
  static KernelMatrix FromRows(int size, std::vector<double> entries,
                               double tolerance = kRowSumTolerance) {
    if (size < 1 || entries.size() != static_cast<std::size_t>(size) * size) {
      throw StructuralError("KernelMatrix: entries do not form a square matrix");
    }
    KernelMatrix k(size, std::move(entries));
    k.ValidateStochastic(tolerance);
    return k;
  }

  static KernelMatrix Identity(int size) {
    KernelMatrix k(size, std::vector<double>(static_cast<std::size_t>(size) * size));
    for (int i = 0; i < size; ++i) k.At(i, i) = 1.0;
    return k;
  }

  int size() const { return size_; }
  double operator()(int i, int j) const {
    return entries_[static_cast<std::size_t>(i) * size_ + j];
  }
  std::span<const double> Row(int i) const {
    return {entries_.data() + static_cast<std::size_t>(i) * size_,
            static_cast<std::size_t>(size_)};
  }

  void ValidateStochastic(double tolerance = kRowSumTolerance) const {
    for (int i = 0; i < size_; ++i) {
      double sum = 0.0;
      for (double v : Row(i)) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
          throw DomainError("KernelMatrix: negative or non-finite entry");
        }
        sum += v;
      }
      if (std::abs(sum - 1.0) > tolerance) {
        throw DomainError("KernelMatrix: row " + std::to_string(i) +
                          " sums to " + std::to_string(sum));
      }
    }
  }

  std::vector<double> Apply(std::span<const double> mu) const {
    if (mu.size() != static_cast<std::size_t>(size_)) {
      throw StructuralError("KernelMatrix::Apply: dimension mismatch");
    }
    std::vector<double> out(size_, 0.0);
    for (int i = 0; i < size_; ++i) {
      const double m = mu[i];
      if (m == 0.0) continue;
      const auto row = Row(i);
      for (int j = 0; j < size_; ++j) out[j] += m * row[j];
    }
    return out;
  }

  // This kernel followed by `next`.
  KernelMatrix Then(const KernelMatrix& next) const {
    if (next.size_ != size_) {
      throw StructuralError("KernelMatrix::Then: dimension mismatch");
    }
    KernelMatrix out(size_, std::vector<double>(entries_.size(), 0.0));
    for (int i = 0; i < size_; ++i) {
      const auto row = Row(i);
      for (int k = 0; k < size_; ++k) {
        if (row[k] == 0.0) continue;
        const auto next_row = next.Row(k);
        for (int j = 0; j < size_; ++j) out.At(i, j) += row[k] * next_row[j];
      }
    }
    return out;
  }

 private:
  KernelMatrix(int size, std::vector<double> entries)
      : size_(size), entries_(std::move(entries)) {}
  double& At(int i, int j) {
    return entries_[static_cast<std::size_t>(i) * size_ + j];
  }

  int size_;
  std::vector<double> entries_;
};

// ---------------------------------------------------------------------------
// Toy problems.
// ---------------------------------------------------------------------------

enum class LossKind { kQuadratic, kNonConvex, kStep };

inline constexpr LossKind kAllLosses[] = {LossKind::kQuadratic,
                                          LossKind::kNonConvex, LossKind::kStep};

inline std::string LossName(LossKind kind) {
  switch (kind) {
    case LossKind::kQuadratic:
      return "quadratic";
    case LossKind::kNonConvex:
      return "nonconvex";
    case LossKind::kStep:
      return "step";
  }
  return "unknown";
}

// d/dw of the per-example loss.
inline double LossGradient(LossKind kind, double w, double x) {
  switch (kind) {
    case LossKind::kQuadratic:
      return w - x;
    case LossKind::kNonConvex:
      return std::sin(w) + 0.1 * (w - x);
    case LossKind::kStep:
      return w > x ? 1.0 : (w < x ? -1.0 : 0.0);
  }
  return 0.0;
}

struct ToyProblem {
  std::vector<double> data;
  LossKind loss = LossKind::kQuadratic;
  double learning_rate = 0.0;
  double clip_norm = 1.0;
  double lambda = 0.0;  // 0: projected variant

  void Validate() const {
    if (data.empty()) throw DomainError("ToyProblem: empty dataset");
    for (double x : data) {
      if (!std::isfinite(x)) throw DomainError("ToyProblem: data must be finite");
    }
    if (!std::isfinite(learning_rate) || learning_rate < 0) {
      throw DomainError("ToyProblem: learning rate must be >= 0");
    }
    if (!(clip_norm > 0.0) || !std::isfinite(clip_norm)) {
      throw DomainError("ToyProblem: clip norm must be > 0");
    }
    if (!(lambda >= 0.0 && lambda < 1.0)) {
      throw DomainError("ToyProblem: lambda must lie in [0, 1)");
    }
  }

  nlohmann::json ToJson() const {
    return {{"data", data},
            {"loss", LossName(loss)},
            {"eta", learning_rate},
            {"C", clip_norm},
            {"lambda", lambda}};
  }
};

// min{1, C/|v|} v.
inline double Clip(double v, double clip_norm) {
  if (!(clip_norm > 0.0)) throw DomainError("Clip: C must be > 0");
  if (std::abs(v) <= clip_norm) return v;
  return v > 0 ? clip_norm : -clip_norm;
}

// psi_B(w) = (1 - lambda) w - eta/|B| sum_{i in B} Clip(grad(w, x_i));
// the empty batch gives (1 - lambda) w. Batches are bitmasks over examples.
class UpdateMap {
 public:
  UpdateMap(const ToyProblem& problem, uint32_t batch)
      : problem_(&problem), batch_(batch) {
    if (problem.data.size() > static_cast<std::size_t>(kMaxDatasetSize)) {
      throw CapacityError("UpdateMap: at most 12 examples");
    }
    if (batch >> problem.data.size()) {
      throw StructuralError("UpdateMap: batch refers to a missing example");
    }
  }

  double operator()(double w) const {
    const ToyProblem& p = *problem_;
    const double decayed = (1.0 - p.lambda) * w;
    if (batch_ == 0) return decayed;
    double sum = 0.0;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
      if (batch_ & (1u << i)) sum += Clip(LossGradient(p.loss, w, p.data[i]), p.clip_norm);
    }
    return decayed - p.learning_rate * sum / std::popcount(batch_);
  }

 private:
  const ToyProblem* problem_;
  uint32_t batch_;
};

struct WeightedBatch {
  uint32_t members = 0;
  double weight = 0.0;
};

// All batches of the scheme with their probabilities.
inline std::vector<WeightedBatch> EnumerateBatches(const SamplingScheme& scheme,
                                                   int n) {
  scheme.Validate();
  if (n < 1) throw DomainError("EnumerateBatches: n must be >= 1");
  if (n > kMaxDatasetSize) {
    throw CapacityError("EnumerateBatches: exact enumeration supports n <= 12");
  }
  std::vector<WeightedBatch> out;
  const uint32_t count = 1u << n;
  if (scheme.kind() == SamplingScheme::Kind::kPoisson) {
    const double p = scheme.rate();
    for (uint32_t mask = 0; mask < count; ++mask) {
      const int k = std::popcount(mask);
      out.push_back({mask, std::pow(p, k) * std::pow(1.0 - p, n - k)});
    }
    return out;
  }
  if (scheme.population() != n) {
    throw StructuralError("EnumerateBatches: scheme population differs from n");
  }
  const int b = static_cast<int>(scheme.batch_size());
  for (uint32_t mask = 0; mask < count; ++mask) {
    if (std::popcount(mask) == b) out.push_back({mask, 0.0});
  }
  const double weight = 1.0 / static_cast<double>(out.size());
  for (auto& batch : out) batch.weight = weight;
  return out;
}

// Psi on the grid: every atom moves to the batch mixture of snapped psi_B.
inline KernelMatrix MixtureKernel(const ToyProblem& problem,
                                  const SamplingScheme& scheme,
                                  const Grid1D& grid) {
  problem.Validate();
  const int n = static_cast<int>(problem.data.size());
  const auto batches = EnumerateBatches(scheme, n);
  const int size = grid.cells();
  std::vector<double> entries(static_cast<std::size_t>(size) * size, 0.0);
  for (const WeightedBatch& batch : batches) {
    const UpdateMap psi(problem, batch.members);
    for (int i = 0; i < size; ++i) {
      const auto split = grid.Snap(psi(grid.Center(i)));
      double* row = entries.data() + static_cast<std::size_t>(i) * size;
      row[split.lower] += batch.weight * (1.0 - split.upper_weight);
      row[split.upper] += batch.weight * split.upper_weight;
    }
  }
  return KernelMatrix::FromRows(size, std::move(entries));
}

// P(N(0, 1) <= z) with full relative accuracy in both tails.
inline double NormalCdf(double z) { return z < 0 ? QTail(-z) : 1.0 - QTail(z); }

// N(w, sigma^2) integrated over each cell; the two outer cells also collect
// the mass beyond lo and hi. Rows telescope to exactly one.
inline KernelMatrix GaussianKernel(const Grid1D& grid, double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DomainError("GaussianKernel: sigma must be > 0");
  }
  const int size = grid.cells();
  std::vector<double> entries(static_cast<std::size_t>(size) * size, 0.0);
  std::vector<double> cdf(size + 1);
  for (int i = 0; i < size; ++i) {
    const double w = grid.Center(i);
    cdf[0] = 0.0;
    cdf[size] = 1.0;
    for (int k = 1; k < size; ++k) cdf[k] = NormalCdf((grid.Edge(k) - w) / sigma);
    double* row = entries.data() + static_cast<std::size_t>(i) * size;
    for (int j = 0; j < size; ++j) row[j] = std::max(0.0, cdf[j + 1] - cdf[j]);
  }
  return KernelMatrix::FromRows(size, std::move(entries));
}

// Nearest-point projection onto [a, b]; both ends must be cell edges.
inline KernelMatrix ProjectionKernel(const Grid1D& grid, double a, double b) {
  const auto ia = grid.EdgeIndex(a);
  const auto ib = grid.EdgeIndex(b);
  if (!ia || !ib) {
    throw StructuralError("ProjectionKernel: interval ends must be cell edges");
  }
  if (!(*ia < *ib)) throw StructuralError("ProjectionKernel: need a < b");
  std::vector<double> entries(static_cast<std::size_t>(grid.cells()) * grid.cells(), 0.0);
  for (int j = 0; j < grid.cells(); ++j) {
    const int target = std::clamp(j, *ia, *ib - 1);
    entries[static_cast<std::size_t>(j) * grid.cells() + target] = 1.0;
  }
  return KernelMatrix::FromRows(grid.cells(), std::move(entries));
}

// Projection onto the ball [-radius, radius] for arbitrary radius: atoms
// outside are sent to the snapped image of the nearest ball point.
inline KernelMatrix BallProjectionKernel(const Grid1D& grid, double radius) {
  if (!(radius >= 0.0)) throw DomainError("BallProjectionKernel: radius >= 0");
  const int size = grid.cells();
  std::vector<double> entries(static_cast<std::size_t>(size) * size, 0.0);
  for (int j = 0; j < size; ++j) {
    double* row = entries.data() + static_cast<std::size_t>(j) * size;
    const double c = grid.Center(j);
    if (std::abs(c) <= radius) {
      row[j] = 1.0;
      continue;
    }
    const auto split = grid.Snap(c > 0 ? radius : -radius);
    row[split.lower] += 1.0 - split.upper_weight;
    row[split.upper] += split.upper_weight;
  }
  return KernelMatrix::FromRows(size, std::move(entries));
}

// mu0 K_1 ... K_T on plain mass vectors.
inline std::vector<double> PushForward(std::span<const KernelMatrix> kernels,
                                       std::span<const double> mu0) {
  std::vector<double> mu(mu0.begin(), mu0.end());
  for (const KernelMatrix& k : kernels) mu = k.Apply(mu);
  double total = 0.0;
  for (double m : mu) total += m;
  if (std::abs(total - 1.0) > kPushForwardMassTolerance) {
    throw DomainError("PushForward: mass drifted to " + std::to_string(total));
  }
  return mu;
}

// Dense mass vector of `mu` over the grid atoms. Every atom of mu must be a
// grid center.
inline std::vector<double> OnGrid(const Grid1D& grid, const DiscreteDist& mu) {
  std::vector<double> out(grid.cells(), 0.0);
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const auto idx = grid.AtomIndex(mu.atoms()[i]);
    if (!idx) throw StructuralError("OnGrid: atom is not a grid center");
    out[*idx] += mu.masses()[i];
  }
  return out;
}

inline DiscreteDist PushForward(const Grid1D& grid,
                                std::span<const KernelMatrix> kernels,
                                const DiscreteDist& mu0) {
  for (const KernelMatrix& k : kernels) {
    if (k.size() != grid.cells()) {
      throw StructuralError("PushForward: kernel size differs from the grid");
    }
  }
  std::vector<double> masses = PushForward(kernels, OnGrid(grid, mu0));
  return DiscreteDist::Create(grid.Centers(), std::move(masses),
                              kPushForwardMassTolerance);
}

// ---------------------------------------------------------------------------
// Verifiers.
// ---------------------------------------------------------------------------

namespace internal {

inline nlohmann::json SparseMasses(const Grid1D& grid,
                                   std::span<const double> masses) {
  nlohmann::json atoms = nlohmann::json::array();
  nlohmann::json values = nlohmann::json::array();
  for (int i = 0; i < grid.cells(); ++i) {
    if (masses[i] != 0.0) {
      atoms.push_back(grid.Center(i));
      values.push_back(masses[i]);
    }
  }
  return {{"atoms", atoms}, {"masses", values}};
}

// Index of the single example on which two datasets differ, or -1.
inline int DifferingIndex(const ToyProblem& first, const ToyProblem& second) {
  first.Validate();
  second.Validate();
  if (first.data.size() != second.data.size() || first.loss != second.loss ||
      first.learning_rate != second.learning_rate ||
      first.clip_norm != second.clip_norm || first.lambda != second.lambda) {
    throw StructuralError("neighbouring problems must share everything but one "
                          "data point");
  }
  int index = -1;
  for (std::size_t i = 0; i < first.data.size(); ++i) {
    if (first.data[i] != second.data[i]) {
      if (index >= 0) {
        throw StructuralError("neighbouring datasets differ in more than one "
                              "entry");
      }
      index = static_cast<int>(i);
    }
  }
  return index;
}

// Random probability vector supported on `support`: a Dirac, a few atoms or
// all atoms, cycling with the trial number.
inline std::vector<double> RandomMeasure(std::span<const int> support, int size,
                                         int trial, std::mt19937_64& rng) {
  std::vector<double> mu(size, 0.0);
  std::uniform_int_distribution<std::size_t> pick(0, support.size() - 1);
  std::exponential_distribution<double> weight(1.0);
  switch (trial % 3) {
    case 0:
      mu[support[pick(rng)]] = 1.0;
      return mu;
    case 1: {
      const int k = 2 + static_cast<int>(rng() % 4);
      for (int i = 0; i < k; ++i) mu[support[pick(rng)]] += weight(rng);
      break;
    }
    default:
      for (int idx : support) mu[idx] = weight(rng);
      break;
  }
  double total = 0.0;
  for (double m : mu) total += m;
  for (double& m : mu) m /= total;
  return mu;
}

}  // namespace internal

// One coupled step E(K mu || K' nu) <= (1 - q) theta E(mu || nu) + q theta,
// with K, K' built from neighbouring datasets.
struct CoupledStep {
  std::string check;
  Grid1D grid;
  KernelMatrix first;
  KernelMatrix second;
  std::vector<int> inputs;  // atoms the input measures may charge
  double theta = 0.0;
  double rate = 0.0;
  double tolerance = 0.0;
  nlohmann::json params;
};

// Step of projected DP-SGD on W = [a, b] (cell edges):
// K = Psi then Gaussian then projection onto W, and
// theta = theta_eps((b - a + 2 eta C) / sigma).
inline CoupledStep ProjectedStep(const ToyProblem& first,
                                 const ToyProblem& second,
                                 const SamplingScheme& scheme,
                                 const Grid1D& grid, double sigma, double a,
                                 double b, double epsilon) {
  internal::DifferingIndex(first, second);
  const KernelMatrix noise = GaussianKernel(grid, sigma);
  const KernelMatrix project = ProjectionKernel(grid, a, b);
  const KernelMatrix tail = noise.Then(project);
  SgdBoundConfig cfg;
  cfg.diameter = b - a;
  cfg.clip_norm = first.clip_norm;
  cfg.learning_rate = first.learning_rate;
  cfg.sigma = sigma;
  cfg.sampling = scheme;
  cfg.iterations = 1;
  const double r = cfg.DistanceRatio();
  const double theta = Theta(epsilon, r);
  const double widened = Theta(epsilon, r + 2.0 * grid.spacing() / sigma);
  nlohmann::json params = {{"first", first.ToJson()},
                           {"second", second.ToJson()},
                           {"rate", scheme.rate()},
                           {"grid", grid.ToJson()},
                           {"sigma", sigma},
                           {"interval", {a, b}},
                           {"epsilon", epsilon}};
  return CoupledStep{"coupled_dpi",
                     grid,
                     MixtureKernel(first, scheme, grid).Then(tail),
                     MixtureKernel(second, scheme, grid).Then(tail),
                     grid.AtomsIn(a, b),
                     theta,
                     scheme.rate(),
                     widened - theta,
                     std::move(params)};
}

// Step t of the coupled projected process of regularized DP-SGD: inputs in
// the ball of radius r_{t-1}, output projected onto the ball of radius r_t,
// theta_t taken from the accountant under the chosen ball convention.
inline CoupledStep RegularizedStep(const ToyProblem& first,
                                   const ToyProblem& second,
                                   const SamplingScheme& scheme,
                                   const Grid1D& grid, double sigma,
                                   double kappa, int64_t step, double epsilon,
                                   BallContraction contraction) {
  internal::DifferingIndex(first, second);
  RegularizedConfig reg;
  reg.base.clip_norm = first.clip_norm;
  reg.base.learning_rate = first.learning_rate;
  reg.base.sigma = sigma;
  reg.base.sampling = scheme;
  reg.base.iterations = step;
  reg.lambda = first.lambda;
  reg.kappa = kappa;
  reg.contraction = contraction;
  reg.Validate();
  const double previous = step > 1 ? RadiusSchedule(reg, kappa, step - 1) : 0.0;
  const double radius = RadiusSchedule(reg, kappa, step);
  if (grid.lo() > -radius || grid.hi() < radius) {
    throw StructuralError("RegularizedStep: grid does not cover the ball");
  }
  std::vector<int> inputs = grid.AtomsIn(-previous, previous);
  if (inputs.empty()) inputs.push_back(grid.CellOf(0.0));

  const double theta = RegularizedThetas(reg, epsilon, kappa, step).back();
  const double ball = (1.0 - reg.lambda) * previous +
                      reg.base.learning_rate * reg.base.clip_norm;
  const double factor = contraction == BallContraction::kDiameter ? 2.0 : 1.0;
  const double widened =
      Theta(epsilon, (factor * ball + 2.0 * grid.spacing()) / sigma);

  const KernelMatrix tail =
      GaussianKernel(grid, sigma).Then(BallProjectionKernel(grid, radius));
  nlohmann::json params = {
      {"first", first.ToJson()},   {"second", second.ToJson()},
      {"rate", scheme.rate()},     {"grid", grid.ToJson()},
      {"sigma", sigma},            {"kappa", kappa},
      {"step", step},              {"epsilon", epsilon},
      {"ball_radius", ball},
      {"convention", contraction == BallContraction::kDiameter
                         ? "diameter"
                         : "published_radius"}};
  return CoupledStep{"regularized_step",
                     grid,
                     MixtureKernel(first, scheme, grid).Then(tail),
                     MixtureKernel(second, scheme, grid).Then(tail),
                     std::move(inputs),
                     theta,
                     scheme.rate(),
                     widened - theta,
                     std::move(params)};
}

// Random (mu, nu) pairs on the step's input atoms; the first trial uses the
// two extreme atoms. Returns the largest lhs - rhs with the worst pair as
// witness when the tolerance is exceeded.
inline VerificationReport VerifyCoupledDpi(const CoupledStep& step,
                                           double epsilon, int trials,
                                           uint64_t seed) {
  if (trials < 1) throw DomainError("VerifyCoupledDpi: trials must be >= 1");
  std::mt19937_64 rng(seed);
  const int size = step.grid.cells();
  VerificationReport report;
  report.check = step.check;
  report.params = step.params;
  report.params["trials"] = trials;
  report.params["seed"] = seed;
  report.tolerance = step.tolerance;
  report.max_slack = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_mu;
  std::vector<double> worst_nu;
  double worst_lhs = 0.0;
  double worst_rhs = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<double> mu;
    std::vector<double> nu;
    if (trial == 0) {
      mu.assign(size, 0.0);
      nu.assign(size, 0.0);
      mu[step.inputs.front()] = 1.0;
      nu[step.inputs.back()] = 1.0;
    } else {
      mu = internal::RandomMeasure(step.inputs, size, trial, rng);
      nu = internal::RandomMeasure(step.inputs, size, trial + trial / 3, rng);
    }
    const double lhs = HockeyStickDivergence(step.first.Apply(mu),
                                             step.second.Apply(nu), epsilon);
    const double rhs = (1.0 - step.rate) * step.theta *
                           HockeyStickDivergence(mu, nu, epsilon) +
                       step.rate * step.theta;
    if (lhs - rhs > report.max_slack) {
      report.max_slack = lhs - rhs;
      worst_mu = std::move(mu);
      worst_nu = std::move(nu);
      worst_lhs = lhs;
      worst_rhs = rhs;
    }
  }
  report.pass = report.max_slack <= report.tolerance + kExactSlack;
  report.details = {{"theta", step.theta},
                    {"worst_lhs", worst_lhs},
                    {"worst_rhs", worst_rhs}};
  if (!report.pass) {
    report.witness = {{"mu", internal::SparseMasses(step.grid, worst_mu)},
                      {"nu", internal::SparseMasses(step.grid, worst_nu)}};
  }
  return report;
}

// Sup over Dirac pairs in [a, b] of E_eps between discretized Gaussian rows,
// against theta_eps(atom diameter / sigma). Passes when the supremum does not
// exceed theta, is at least 95% of it and is attained at the two end atoms.
inline VerificationReport VerifyContraction(const Grid1D& grid, double sigma,
                                            double a, double b,
                                            double epsilon) {
  internal::RequireEpsilon(epsilon, "VerifyContraction");
  if (!(a <= b) || a < grid.lo() || b > grid.hi()) {
    throw DomainError("VerifyContraction: interval must lie in the grid");
  }
  std::vector<int> atoms = grid.AtomsIn(a, b);
  if (atoms.empty()) atoms.push_back(grid.CellOf(0.5 * (a + b)));
  const KernelMatrix noise = GaussianKernel(grid, sigma);

  double best = 0.0;
  int best_i = atoms.front();
  int best_j = atoms.front();
  for (int i : atoms) {
    for (int j : atoms) {
      if (i == j) continue;
      const double e = HockeyStickDivergence(noise.Row(i), noise.Row(j), epsilon);
      if (e > best) {
        best = e;
        best_i = i;
        best_j = j;
      }
    }
  }
  const int first = atoms.front();
  const int last = atoms.back();
  const double diameter = grid.Center(last) - grid.Center(first);
  const double analytic = GaussianContraction(diameter, sigma, epsilon);
  const double at_ends =
      first == last ? 0.0
                    : std::max(HockeyStickDivergence(noise.Row(first),
                                                     noise.Row(last), epsilon),
                               HockeyStickDivergence(noise.Row(last),
                                                     noise.Row(first), epsilon));
  const bool endpoints = at_ends >= best - kExactSlack;
  const bool close = best >= 0.95 * analytic;

  VerificationReport report;
  report.check = "contraction";
  report.params = {{"grid", grid.ToJson()},
                   {"sigma", sigma},
                   {"interval", {a, b}},
                   {"epsilon", epsilon}};
  report.max_slack = best - analytic;
  report.tolerance = kExactSlack;
  report.pass = report.max_slack <= report.tolerance && close && endpoints;
  report.details = {{"empirical_sup", best},
                    {"analytic_theta", analytic},
                    {"atom_diameter", diameter},
                    {"maximizer", {grid.Center(best_i), grid.Center(best_j)}},
                    {"maximizer_at_endpoints", endpoints},
                    {"within_five_percent", close}};
  if (!report.pass) {
    report.witness = {{"x1", grid.Center(best_i)}, {"x2", grid.Center(best_j)}};
  }
  return report;
}

// Settings shared by the multi-step projected checks.
struct ProjectedRun {
  ToyProblem first;
  ToyProblem second;
  SamplingScheme sampling;
  Grid1D grid;
  double sigma = 1.0;
  double a = -1.0;  // W = [a, b], cell edges
  double b = 1.0;
  int64_t steps = 5;
  std::optional<DiscreteDist> initial;  // default: Dirac at the midpoint of W

  nlohmann::json ToJson() const {
    return {{"first", first.ToJson()}, {"second", second.ToJson()},
            {"rate", sampling.rate()}, {"grid", grid.ToJson()},
            {"sigma", sigma},          {"interval", {a, b}},
            {"T", steps}};
  }
};

namespace internal {

inline std::vector<double> InitialMasses(const ProjectedRun& run) {
  if (run.initial.has_value()) return OnGrid(run.grid, *run.initial);
  std::vector<double> mu(run.grid.cells(), 0.0);
  mu[run.grid.CellOf(0.5 * (run.a + run.b))] = 1.0;
  return mu;
}

inline std::vector<int> Support(std::span<const double> masses) {
  std::vector<int> out;
  for (std::size_t i = 0; i < masses.size(); ++i) {
    if (masses[i] > 0.0) out.push_back(static_cast<int>(i));
  }
  return out;
}

// Exact contraction coefficient of `kernel` restricted to `atoms`.
inline double MeasuredContraction(const KernelMatrix& kernel,
                                  std::span<const int> atoms, double epsilon) {
  double best = 0.0;
  for (int i : atoms) {
    for (int j : atoms) {
      if (i != j) {
        best = std::max(best, HockeyStickDivergence(kernel.Row(i), kernel.Row(j),
                                                    epsilon));
      }
    }
  }
  return best;
}

}  // namespace internal

// The T-step divergence between the two processes against the closed-form
// projected bound, checked after every step t <= T with the allowance
// delta_t(theta(r + 2h/sigma)) - delta_t(theta(r)).
inline VerificationReport VerifyProjectedBound(const ProjectedRun& run,
                                                 double epsilon) {
  internal::DifferingIndex(run.first, run.second);
  const KernelMatrix tail = GaussianKernel(run.grid, run.sigma)
                                .Then(ProjectionKernel(run.grid, run.a, run.b));
  const KernelMatrix k1 = MixtureKernel(run.first, run.sampling, run.grid).Then(tail);
  const KernelMatrix k2 = MixtureKernel(run.second, run.sampling, run.grid).Then(tail);
  SgdBoundConfig cfg;
  cfg.diameter = run.b - run.a;
  cfg.clip_norm = run.first.clip_norm;
  cfg.learning_rate = run.first.learning_rate;
  cfg.sigma = run.sigma;
  cfg.sampling = run.sampling;
  const double p = run.sampling.rate();
  const double widened =
      Theta(epsilon, cfg.DistanceRatio() + 2.0 * run.grid.spacing() / run.sigma);

  std::vector<double> mu = internal::InitialMasses(run);
  std::vector<double> nu = mu;
  VerificationReport report;
  report.check = "projected_bound";
  report.params = run.ToJson();
  report.params["epsilon"] = epsilon;
  report.max_slack = -std::numeric_limits<double>::infinity();
  report.pass = true;
  nlohmann::json trace = nlohmann::json::array();
  for (int64_t t = 1; t <= run.steps; ++t) {
    mu = k1.Apply(mu);
    nu = k2.Apply(nu);
    cfg.iterations = t;
    const double lhs = HockeyStickDivergence(mu, nu, epsilon);
    const double bound = DeltaProjected(cfg, epsilon);
    const double allowance = GeometricDelta(p, widened, t) - bound;
    report.max_slack = std::max(report.max_slack, lhs - bound);
    report.tolerance = allowance;
    if (lhs - bound > allowance + kExactSlack) report.pass = false;
    trace.push_back({{"t", t}, {"divergence", lhs}, {"bound", bound}});
  }
  report.details = {{"trace", trace}};
  if (!report.pass) {
    report.witness = {
        {"initial", internal::SparseMasses(run.grid, internal::InitialMasses(run))}};
  }
  return report;
}

// Per-step witnesses alpha_t = (1 - p) eta_t, beta_t = p eta_t, where eta_t is
// the exact contraction coefficient of noise-then-projection over the atoms
// reached by the update maps at step t. Their composition must dominate the
// measured divergence after every step; no discretization allowance applies.
inline VerificationReport VerifyRecursion(const ProjectedRun& run,
                                          double epsilon) {
  internal::DifferingIndex(run.first, run.second);
  const KernelMatrix tail = GaussianKernel(run.grid, run.sigma)
                                .Then(ProjectionKernel(run.grid, run.a, run.b));
  const KernelMatrix psi1 = MixtureKernel(run.first, run.sampling, run.grid);
  const KernelMatrix psi2 = MixtureKernel(run.second, run.sampling, run.grid);
  const double p = run.sampling.rate();

  std::vector<double> mu = internal::InitialMasses(run);
  std::vector<double> nu = mu;
  std::vector<BoundStep> steps;
  VerificationReport report;
  report.check = "recursion";
  report.params = run.ToJson();
  report.params["epsilon"] = epsilon;
  report.tolerance = kExactSlack;
  report.max_slack = -std::numeric_limits<double>::infinity();
  nlohmann::json trace = nlohmann::json::array();
  for (int64_t t = 1; t <= run.steps; ++t) {
    const std::vector<double> moved1 = psi1.Apply(mu);
    const std::vector<double> moved2 = psi2.Apply(nu);
    std::vector<double> reach(moved1.size());
    for (std::size_t i = 0; i < reach.size(); ++i) reach[i] = moved1[i] + moved2[i];
    const double eta = internal::MeasuredContraction(tail, internal::Support(reach),
                                                     epsilon);
    steps.push_back({(1.0 - p) * eta, p * eta});
    mu = tail.Apply(moved1);
    nu = tail.Apply(moved2);
    const double lhs = HockeyStickDivergence(mu, nu, epsilon);
    const double composed = ComposeLinearBounds(steps, 0.0);
    report.max_slack = std::max(report.max_slack, lhs - composed);
    trace.push_back({{"t", t}, {"eta", eta}, {"divergence", lhs}, {"composed", composed}});
  }
  report.pass = report.max_slack <= report.tolerance;
  report.details = {{"trace", trace}};
  return report;
}

// |psi_B2(w2) - psi_B1(w1)| <= D + 2 eta C over all atoms of W = [a, b] and
// all batches of both datasets.
inline VerificationReport VerifyDiameterBound(const ToyProblem& first,
                                              const ToyProblem& second,
                                              const Grid1D& grid, double a,
                                              double b) {
  internal::DifferingIndex(first, second);
  const int n = static_cast<int>(first.data.size());
  if (n > kMaxDatasetSize) throw CapacityError("VerifyDiameterBound: n <= 12");
  const std::vector<int> atoms = grid.AtomsIn(a, b);
  const uint32_t count = 1u << n;
  auto table = [&](const ToyProblem& problem) {
    std::vector<std::vector<double>> values(count);
    for (uint32_t mask = 0; mask < count; ++mask) {
      const UpdateMap psi(problem, mask);
      for (int i : atoms) values[mask].push_back(psi(grid.Center(i)));
    }
    return values;
  };
  const auto v1 = table(first);
  const auto v2 = table(second);
  double worst = 0.0;
  for (uint32_t m1 = 0; m1 < count; ++m1) {
    for (uint32_t m2 = 0; m2 < count; ++m2) {
      for (double x : v1[m1]) {
        for (double y : v2[m2]) worst = std::max(worst, std::abs(y - x));
      }
    }
  }
  const double bound = (b - a) + 2.0 * first.learning_rate * first.clip_norm;
  VerificationReport report;
  report.check = "diameter_bound";
  report.params = {{"first", first.ToJson()},
                   {"second", second.ToJson()},
                   {"grid", grid.ToJson()},
                   {"interval", {a, b}},
                   {"atoms", atoms.size()}};
  report.max_slack = worst - bound;
  report.tolerance = kExactSlack;
  report.pass = report.max_slack <= report.tolerance;
  report.details = {{"max_distance", worst}, {"bound", bound}};
  return report;
}

// Settings of the unprojected regularized process and its projected
// companion, both started from a Dirac at 0.
struct CouplingRun {
  ToyProblem problem;  // lambda in (0, 1)
  SamplingScheme sampling;
  Grid1D grid;  // symmetric, with 0 as an atom
  double sigma = 1.0;
  double kappa = 1.0;
  int64_t steps = 3;
};

// ||mu~_t - mu_t||_TV <= 1 - P(chi^2_1 <= kappa^2)^t for t = 0..T, with the
// allowance obtained by lowering kappa by 2h/sigma. The unprojected process
// must leave at most 1e-10 mass in the two boundary cells.
inline VerificationReport VerifyCoupling(const CouplingRun& run) {
  run.problem.Validate();
  if (!(run.problem.lambda > 0.0)) {
    throw DomainError("VerifyCoupling: lambda must lie in (0, 1)");
  }
  if (!(run.kappa > 0.0)) throw DomainError("VerifyCoupling: kappa must be > 0");
  const auto origin = run.grid.AtomIndex(0.0);
  if (!origin) throw StructuralError("VerifyCoupling: 0 must be a grid atom");
  RegularizedConfig reg;
  reg.base.learning_rate = run.problem.learning_rate;
  reg.base.clip_norm = run.problem.clip_norm;
  reg.base.sigma = run.sigma;
  reg.lambda = run.problem.lambda;

  const KernelMatrix psi = MixtureKernel(run.problem, run.sampling, run.grid);
  const KernelMatrix noisy = psi.Then(GaussianKernel(run.grid, run.sigma));
  std::vector<double> free(run.grid.cells(), 0.0);
  free[*origin] = 1.0;
  std::vector<double> projected = free;

  const double inside = Chi2Cdf(1, run.kappa * run.kappa);
  const double shrunk = std::max(0.0, run.kappa - 2.0 * run.grid.spacing() / run.sigma);
  const double inside_shrunk = Chi2Cdf(1, shrunk * shrunk);

  VerificationReport report;
  report.check = "coupling";
  report.params = {{"problem", run.problem.ToJson()},
                   {"rate", run.sampling.rate()},
                   {"grid", run.grid.ToJson()},
                   {"sigma", run.sigma},
                   {"kappa", run.kappa},
                   {"T", run.steps}};
  report.pass = true;
  report.max_slack = 0.0;  // t = 0: both start at the same Dirac
  nlohmann::json trace = nlohmann::json::array();
  trace.push_back({{"t", 0}, {"tv", 0.0}, {"bound", 0.0}});
  for (int64_t t = 1; t <= run.steps; ++t) {
    const double radius = RadiusSchedule(reg, run.kappa, t);
    free = noisy.Apply(free);
    projected = BallProjectionKernel(run.grid, radius).Apply(noisy.Apply(projected));
    const double tv = TotalVariation(free, projected);
    const double bound = 1.0 - std::pow(inside, static_cast<double>(t));
    const double allowance =
        (1.0 - std::pow(inside_shrunk, static_cast<double>(t))) - bound;
    report.max_slack = std::max(report.max_slack, tv - bound);
    report.tolerance = allowance;
    if (tv - bound > allowance + kExactSlack) report.pass = false;
    trace.push_back({{"t", t}, {"radius", radius}, {"tv", tv}, {"bound", bound}});
  }
  const double boundary = free.front() + free.back();
  if (boundary > 1e-10) report.pass = false;
  report.details = {{"trace", trace}, {"boundary_mass", boundary}};
  return report;
}

}  // namespace dpsgd

#endif  // DPSGD_ORACLE_H_
