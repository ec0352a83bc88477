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

// Fixed oracle suites: the parameter sweeps behind `dpsgd_accountant verify`.

#ifndef DPSGD_SUITES_H_
#define DPSGD_SUITES_H_

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dpsgd/accountant.h"
#include "dpsgd/errors.h"
#include "dpsgd/oracle.h"
#include "dpsgd/report.h"

namespace dpsgd {

inline constexpr uint64_t kDefaultSeed = 20260101;
inline constexpr int kDefaultTrials = 100;

inline constexpr std::array<std::string_view, 5> kSuiteNames = {
    "contraction", "dpi", "recursion", "coupling", "end-to-end"};

// A dataset of n points and its neighbour: the last point is moved to the
// far side of W so that its clipped gradient flips sign.
inline std::pair<ToyProblem, ToyProblem> NeighbouringProblems(
    int n, LossKind loss, double learning_rate, double clip_norm,
    double lambda = 0.0, double far = 1.9) {
  static constexpr double kData[] = {-0.4, 0.7, 0.1, -0.9, 0.5,  -0.2,
                                     0.3,  -0.6, 0.8, -0.1, 0.2, -0.7};
  if (n < 1 || n > kMaxDatasetSize) {
    throw CapacityError("NeighbouringProblems: 1 <= n <= 12");
  }
  ToyProblem first;
  first.data.assign(kData, kData + n);
  first.loss = loss;
  first.learning_rate = learning_rate;
  first.clip_norm = clip_norm;
  first.lambda = lambda;
  ToyProblem second = first;
  second.data.back() = first.data.back() < 0 ? far : -far;
  return {std::move(first), std::move(second)};
}

// Poisson and without-replacement schemes used for n examples.
inline std::vector<SamplingScheme> SuiteSchemes(int n) {
  return {SamplingScheme::Poisson(0.3),
          SamplingScheme::WithoutReplacement(n / 2, n)};
}

// 201 cells of width 0.02 on [-2, 2.02], so that W = [-1, 1] is cell aligned.
inline Grid1D ProjectedSuiteGrid() { return Grid1D(-2.0, 2.02, 201); }

inline constexpr double kSuiteEta = 0.5;
inline constexpr double kSuiteClip = 1.0;
inline constexpr double kSuiteSigma = 1.0;

// Exhaustive Dirac-pair contraction on 801 cells of [-8, 8.02], W = [-1, 1].
inline SuiteReport RunContractionSuite() {
  SuiteReport suite{"contraction", {}};
  const Grid1D grid(-8.0, 8.02, 801);
  for (double eps : {0.0, 1.0, 3.0}) {
    suite.checks.push_back(VerifyContraction(grid, 1.0, -1.0, 1.0, eps));
  }
  return suite;
}

// Coupled one-step inequalities: projected steps for n in {2, 4}, both
// schemes, every loss, eps in {0, 1}, plus steps 1..3 of the regularized
// companion process under the diameter convention.
inline SuiteReport RunDpiSuite(uint64_t seed = kDefaultSeed,
                               int trials = kDefaultTrials) {
  SuiteReport suite{"dpi", {}};
  const Grid1D grid = ProjectedSuiteGrid();
  const Grid1D ball_grid(-3.01, 3.01, 301);
  uint64_t stream = seed;
  for (int n : {2, 4}) {
    for (const SamplingScheme& scheme : SuiteSchemes(n)) {
      for (LossKind loss : kAllLosses) {
        const auto [x, y] = NeighbouringProblems(n, loss, kSuiteEta, kSuiteClip);
        for (double eps : {0.0, 1.0}) {
          suite.checks.push_back(VerifyCoupledDpi(
              ProjectedStep(x, y, scheme, grid, kSuiteSigma, -1.0, 1.0, eps),
              eps, trials, stream++));
        }
      }
    }
    const SamplingScheme without = SamplingScheme::WithoutReplacement(n / 2, n);
    for (LossKind loss : kAllLosses) {
      const auto [x, y] =
          NeighbouringProblems(n, loss, kSuiteEta, kSuiteClip, 0.5);
      for (int64_t step = 1; step <= 3; ++step) {
        for (double eps : {0.0, 1.0}) {
          suite.checks.push_back(VerifyCoupledDpi(
              RegularizedStep(x, y, without, ball_grid, kSuiteSigma, 1.0, step,
                              eps, BallContraction::kDiameter),
              eps, trials, stream++));
        }
      }
    }
  }
  return suite;
}

inline std::vector<ProjectedRun> SuiteRuns(int64_t steps) {
  std::vector<ProjectedRun> runs;
  for (int n : {2, 4}) {
    for (const SamplingScheme& scheme : SuiteSchemes(n)) {
      for (LossKind loss : kAllLosses) {
        auto [x, y] = NeighbouringProblems(n, loss, kSuiteEta, kSuiteClip);
        runs.push_back(ProjectedRun{std::move(x), std::move(y), scheme,
                                    ProjectedSuiteGrid(), kSuiteSigma, -1.0,
                                    1.0, steps, std::nullopt});
      }
    }
  }
  return runs;
}

// Measured per-step witnesses composed by the linear recursion, and the
// exhaustive diameter bound on 401 atoms.
inline SuiteReport RunRecursionSuite() {
  SuiteReport suite{"recursion", {}};
  for (const ProjectedRun& run : SuiteRuns(5)) {
    for (double eps : {0.0, 1.0}) suite.checks.push_back(VerifyRecursion(run, eps));
  }
  const Grid1D fine(-2.0, 2.005, 801);
  for (int n : {2, 4}) {
    for (LossKind loss : kAllLosses) {
      const auto [x, y] = NeighbouringProblems(n, loss, kSuiteEta, kSuiteClip);
      suite.checks.push_back(VerifyDiameterBound(x, y, fine, -1.0, 1.005));
    }
  }
  return suite;
}

// Projected versus unprojected regularized process on 601 cells of
// [-10, 10]; lambda = 0.5, eta = 0.1, C = 1, sigma = 1, T = 3.
inline SuiteReport RunCouplingSuite() {
  SuiteReport suite{"coupling", {}};
  const Grid1D grid(-10.0, 10.0, 601);
  for (LossKind loss : kAllLosses) {
    const ToyProblem problem =
        NeighbouringProblems(2, loss, 0.1, 1.0, 0.5).first;
    for (double kappa : {1.0, 2.0, 4.0, 7.5}) {
      suite.checks.push_back(VerifyCoupling(
          CouplingRun{problem, SamplingScheme::WithoutReplacement(1, 2), grid,
                      1.0, kappa, 3}));
    }
  }
  return suite;
}

// Five-step divergence against the closed-form projected bound.
inline SuiteReport RunEndToEndSuite() {
  SuiteReport suite{"end-to-end", {}};
  for (const ProjectedRun& run : SuiteRuns(5)) {
    for (double eps : {0.0, 1.0}) {
      suite.checks.push_back(VerifyProjectedBound(run, eps));
    }
  }
  return suite;
}

inline SuiteReport RunSuite(std::string_view name, uint64_t seed = kDefaultSeed,
                            int trials = kDefaultTrials) {
  if (name == "contraction") return RunContractionSuite();
  if (name == "dpi") return RunDpiSuite(seed, trials);
  if (name == "recursion") return RunRecursionSuite();
  if (name == "coupling") return RunCouplingSuite();
  if (name == "end-to-end") return RunEndToEndSuite();
  throw DomainError("unknown suite: " + std::string(name));
}

}  // namespace dpsgd

#endif  // DPSGD_SUITES_H_
