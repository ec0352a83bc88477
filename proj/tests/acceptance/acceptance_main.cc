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

// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dpsgd/dpsgd.h"
#include "property_util.h"
#include "reference.h"

namespace {

using dpsgd::HockeyStickDivergence;
using dpsgd::SamplingScheme;
using dpsgd::SgdBoundConfig;

// 50-digit values computed once before the build.
constexpr double kDefaultLimit = 0.0013830218687259033;
constexpr double kThetaDefault = 0.5807017594422202;

struct Outcome {
  bool pass = false;
  std::string detail;
};

SgdBoundConfig ProjectedDefaults() {
  SgdBoundConfig cfg;
  cfg.diameter = 3.0;
  cfg.clip_norm = 2.0;
  cfg.learning_rate = 0.01;
  cfg.sigma = 1.0;
  cfg.sampling = SamplingScheme::Poisson(0.001);
  cfg.iterations = 1;
  return cfg;
}

std::string Format(const char* fmt, double a, double b = 0.0, double c = 0.0) {
  char buffer[256];
  std::snprintf(buffer, sizeof(buffer), fmt, a, b, c);
  return buffer;
}

Outcome DeltaCurveAndLimit() {
  SgdBoundConfig cfg = ProjectedDefaults();
  const double limit = dpsgd::DeltaLimit(cfg, 3.0);
  bool monotone = true;
  double previous = 0.0;
  double last = 0.0;
  for (int64_t t = 1; t <= 10000; ++t) {
    cfg.iterations = t;
    last = dpsgd::DeltaProjected(cfg, 3.0);
    monotone = monotone && last >= previous;
    previous = last;
  }
  const double gap = std::abs(last - limit);
  const double rel = std::abs(limit - kDefaultLimit) / kDefaultLimit;
  return {monotone && gap <= 1e-9 && rel <= 1e-6,
          Format("limit=%.10g |d(1e4)-limit|=%.2e rel.err=%.2e", limit, gap, rel) +
              (monotone ? " monotone" : " NOT monotone")};
}

Outcome EpsilonRootAndClosedForm() {
  const SgdBoundConfig cfg = ProjectedDefaults();
  const double delta = 1e-3;
  const double eps = dpsgd::EpsilonFromDelta(cfg, delta, dpsgd::Horizon::Infinite());
  const double target = delta / (0.001 + 0.999 * delta);
  const double miss = std::abs(dpsgd::Theta(eps, 3.04) - target);
  const double closed = dpsgd::EpsilonClosedFormBound(cfg, delta);
  const bool ok = eps >= 3.60 && eps <= 3.70 && miss <= 1e-8 &&
                  std::abs(closed - 4.619) <= 0.01 && closed > eps;
  return {ok, Format("eps=%.10g |theta-target|=%.2e closed_form=%.10g", eps, miss, closed)};
}

Outcome ThetaGolden() {
  const double a = dpsgd::Theta(0.0, 2.0);
  const double b = dpsgd::Theta(3.0, 3.04);
  const bool ok = std::abs(a - 0.682689492137) <= 1e-10 &&
                  std::abs(b - kThetaDefault) <= 1e-8;
  return {ok, Format("theta(0,2)=%.15g theta(3,3.04)=%.15g", a, b)};
}

Outcome ChiSquared() {
  double worst_two = 0.0;
  for (double x : {0.1, 1.0, 2.0, 10.0}) {
    worst_two = std::max(worst_two, std::abs(dpsgd::Chi2Cdf(2, x) + std::expm1(-0.5 * x)));
  }
  double worst_one = 0.0;
  for (double t : {0.5, 1.0, 2.0, 4.0}) {
    worst_one = std::max(worst_one, std::abs(dpsgd::Chi2Cdf(1, t * t) -
                                             (1.0 - 2.0 * dpsgd::QTail(t))));
  }
  return {worst_two <= 1e-12 && worst_one <= 1e-11,
          Format("max err d=2: %.2e, d=1: %.2e", worst_two, worst_one)};
}

Outcome FromSuite(const dpsgd::SuiteReport& report) {
  int failed = 0;
  double slack = -1e300;
  double tolerance = 0.0;
  for (const auto& c : report.checks) {
    failed += c.pass ? 0 : 1;
    if (c.max_slack > slack) {
      slack = c.max_slack;
      tolerance = c.tolerance;
    }
  }
  return {report.pass(),
          Format("%.0f checks, %.0f failed, worst slack %.3e",
                 static_cast<double>(report.checks.size()), failed, slack) +
              Format(" (its grid tolerance %.3e)", tolerance)};
}

Outcome RegularizedTable() {
  struct Row {
    double lambda;
    int64_t steps;
    double kappa;
  };
  std::vector<Row> rows;
  for (double lambda : {0.65, 0.01}) {
    for (int64_t t : {1, 10}) {
      for (double kappa : {2.0, 3.0, 4.0, 5.0}) rows.push_back({lambda, t, kappa});
    }
  }
  double worst = 0.0;
  for (const Row& row : rows) {
    dpsgd::RegularizedConfig reg;
    reg.base.clip_norm = 1.0;
    reg.base.learning_rate = 0.1;
    reg.base.sigma = 5.0;
    reg.base.sampling = SamplingScheme::WithoutReplacement(1, 1000);
    reg.base.iterations = row.steps;
    reg.lambda = row.lambda;
    reg.dimension = 1;
    dpsgd::reference::RegularizedInputs in;
    in.lambda = row.lambda;
    in.steps = row.steps;
    in.kappa = row.kappa;
    const double want = dpsgd::reference::DeltaRegularized(in);
    const double got = dpsgd::DeltaRegularized(reg, 5.0, row.kappa);
    worst = std::max(worst, std::abs(got - want) / want);
  }
  bool optimal = true;
  for (double lambda : {0.65, 0.01}) {
    for (int64_t t : {1, 10}) {
      dpsgd::RegularizedConfig reg;
      reg.base.clip_norm = 1.0;
      reg.base.learning_rate = 0.1;
      reg.base.sigma = 5.0;
      reg.base.sampling = SamplingScheme::WithoutReplacement(1, 1000);
      reg.base.iterations = t;
      reg.lambda = lambda;
      reg.dimension = 1;
      const auto best = dpsgd::DeltaRegularizedOptimized(reg, 5.0);
      for (double kappa : dpsgd::KappaSearchGrid(1)) {
        optimal = optimal && best.delta <= dpsgd::DeltaRegularized(reg, 5.0, kappa);
      }
    }
  }
  return {worst <= 1e-10 && optimal,
          Format("max rel.err vs term-by-term evaluation %.2e", worst) +
              (optimal ? ", optimizer <= every grid kappa" : ", optimizer beaten by grid")};
}

Outcome DivergenceProperties() {
  constexpr int kInstances = 1000;
  constexpr double kSlack = 1e-12;
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  int dpi = 0;
  int convexity = 0;
  int triangle = 0;
  int monotone = 0;
  for (int i = 0; i < kInstances; ++i) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const auto mu = dpsgd::testing::RandomMasses(n, rng);
    const auto nu = dpsgd::testing::RandomMasses(n, rng);
    const double eps = dpsgd::testing::RandomEpsilon(rng);
    const dpsgd::KernelMatrix k = dpsgd::testing::RandomKernel(n, rng);
    if (HockeyStickDivergence(k.Apply(mu), k.Apply(nu), eps) >
        HockeyStickDivergence(mu, nu, eps) + kSlack) {
      ++dpi;
    }
  }
  for (int i = 0; i < kInstances; ++i) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const auto m1 = dpsgd::testing::RandomMasses(n, rng);
    const auto m2 = dpsgd::testing::RandomMasses(n, rng);
    const auto v1 = dpsgd::testing::RandomMasses(n, rng);
    const auto v2 = dpsgd::testing::RandomMasses(n, rng);
    const double t = unit(rng);
    const double eps = dpsgd::testing::RandomEpsilon(rng);
    std::vector<double> m(n);
    std::vector<double> v(n);
    for (int j = 0; j < n; ++j) {
      m[j] = t * m1[j] + (1 - t) * m2[j];
      v[j] = t * v1[j] + (1 - t) * v2[j];
    }
    if (HockeyStickDivergence(m, v, eps) >
        t * HockeyStickDivergence(m1, v1, eps) +
            (1 - t) * HockeyStickDivergence(m2, v2, eps) + kSlack) {
      ++convexity;
    }
  }
  for (int i = 0; i < kInstances; ++i) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const auto p = dpsgd::testing::RandomMasses(n, rng);
    const auto s = dpsgd::testing::RandomMasses(n, rng);
    const auto q = dpsgd::testing::RandomMasses(n, rng);
    const double e1 = dpsgd::testing::RandomEpsilon(rng);
    const double e2 = dpsgd::testing::RandomEpsilon(rng);
    if (HockeyStickDivergence(p, q, e1 + e2) >
        HockeyStickDivergence(p, s, e1) +
            std::exp(e1) * HockeyStickDivergence(s, q, e2) + kSlack) {
      ++triangle;
    }
  }
  for (int i = 0; i < kInstances; ++i) {
    const int n = 2 + static_cast<int>(rng() % 12);
    const auto mu = dpsgd::testing::RandomMasses(n, rng);
    const auto nu = dpsgd::testing::RandomMasses(n, rng);
    const double e1 = dpsgd::testing::RandomEpsilon(rng);
    const double e2 = e1 + 2.0 * unit(rng);
    if (HockeyStickDivergence(mu, nu, e2) > HockeyStickDivergence(mu, nu, e1) + kSlack) {
      ++monotone;
    }
  }
  const int total = dpi + convexity + triangle + monotone;
  return {total == 0,
          Format("violations over 1000 instances each: dpi=%.0f convexity=%.0f triangle=%.0f",
                 dpi, convexity, triangle) +
              Format(" eps-monotonicity=%.0f", monotone)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_seconds;  // 0: no runtime limit
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "projected delta curve and limit", 1.0, DeltaCurveAndLimit},
      {2, "epsilon root and closed-form bound", 1.0, EpsilonRootAndClosedForm},
      {3, "theta golden values", 0.0, ThetaGolden},
      {4, "chi-squared closed forms", 0.0, ChiSquared},
      {5, "Gaussian contraction certificate", 30.0,
       [] { return FromSuite(dpsgd::RunContractionSuite()); }},
      {6, "coupled DPI certificate", 120.0,
       [] { return FromSuite(dpsgd::RunDpiSuite()); }},
      {7, "end-to-end projected certificate", 120.0,
       [] { return FromSuite(dpsgd::RunEndToEndSuite()); }},
      {8, "projection coupling certificate", 0.0,
       [] { return FromSuite(dpsgd::RunCouplingSuite()); }},
      {9, "regularized bound evaluation", 0.0, RegularizedTable},
      {10, "hockey-stick property suites", 0.0, DivergenceProperties},
  };
  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_seconds == 0.0 || seconds < c.budget_seconds;
    const bool pass = outcome.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("%s criterion %d: %s | %s | %.3f s%s\n", pass ? "PASS" : "FAIL", c.id,
                c.name, outcome.detail.c_str(), seconds,
                in_time ? "" : " (over runtime budget)");
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
