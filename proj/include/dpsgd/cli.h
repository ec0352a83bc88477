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

// Command-line front end.
//
//   dpsgd_accountant delta-curve [--D --C --eta --sigma --p|--b --n --epsilon]
//   dpsgd_accountant eps-curve   [... --delta]
//   dpsgd_accountant regularized [--C --eta --sigma --b --n --lambda --dim
//                                 --kappa N|auto --epsilon --ball-diameter]
//   dpsgd_accountant verify --suite NAME [--seed N]
//
// Curves go to stdout as CSV (header `T,value[,kappa_star]`, limit rows
// labelled `inf`) or JSON ({meta, rows}). Exit codes: 0 success, 1 usage or
// invalid parameters, 2 failed verification.

#ifndef DPSGD_CLI_H_
#define DPSGD_CLI_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpsgd/accountant.h"
#include "dpsgd/errors.h"
#include "dpsgd/suites.h"
#include "json.hpp"

namespace dpsgd::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitVerificationFailed = 2;

// One output row; `label` replaces the horizon for limit rows.
struct CurveRow {
  int64_t t = 0;
  std::string label;
  double value = 0.0;
  std::optional<double> kappa_star;
};

struct CurveRequest {
  std::string mode;
  std::optional<double> diameter;
  std::optional<double> clip_norm;
  std::optional<double> learning_rate;
  std::optional<double> sigma;
  std::optional<double> rate;
  std::optional<int64_t> batch_size;
  std::optional<int64_t> population;
  std::optional<double> lambda;
  std::optional<int> dimension;
  std::string kappa = "auto";
  std::optional<double> epsilon;
  std::optional<double> delta;
  int64_t t_max = 0;
  bool log_t = false;
  bool ball_diameter = false;
  std::string format = "csv";
  std::string suite;
  uint64_t seed = kDefaultSeed;
};

// %.17g, which reparses to the identical double.
inline std::string FormatDouble(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

// 1..t_max, or about 20 log-spaced points per decade with t_max included.
inline std::vector<int64_t> Horizons(int64_t t_max, bool log_spaced) {
  std::vector<int64_t> out;
  if (!log_spaced) {
    for (int64_t t = 1; t <= t_max; ++t) out.push_back(t);
    return out;
  }
  constexpr double kPerDecade = 20.0;
  for (int k = 0;; ++k) {
    const auto t = static_cast<int64_t>(std::llround(std::pow(10.0, k / kPerDecade)));
    if (t >= t_max) break;
    if (out.empty() || out.back() != t) out.push_back(t);
  }
  out.push_back(t_max);
  return out;
}

namespace internal {

inline SgdBoundConfig ProjectedConfig(const CurveRequest& req) {
  SgdBoundConfig cfg;
  cfg.diameter = req.diameter.value_or(3.0);
  cfg.clip_norm = req.clip_norm.value_or(2.0);
  cfg.learning_rate = req.learning_rate.value_or(0.01);
  cfg.sigma = req.sigma.value_or(1.0);
  if (req.batch_size || req.population) {
    if (req.rate) throw DomainError("give either --p or --b/--n, not both");
    if (!req.batch_size || !req.population) {
      throw DomainError("--b and --n must be given together");
    }
    cfg.sampling = SamplingScheme::WithoutReplacement(*req.batch_size, *req.population);
  } else {
    cfg.sampling = SamplingScheme::Poisson(req.rate.value_or(0.001));
  }
  cfg.iterations = req.t_max;
  cfg.Validate();
  return cfg;
}

inline RegularizedConfig RegularizedFromRequest(const CurveRequest& req) {
  if (req.rate) {
    throw DomainError("the regularized bound uses --b and --n, not --p");
  }
  RegularizedConfig reg;
  reg.base.clip_norm = req.clip_norm.value_or(1.0);
  reg.base.learning_rate = req.learning_rate.value_or(0.1);
  reg.base.sigma = req.sigma.value_or(5.0);
  reg.base.sampling = SamplingScheme::WithoutReplacement(
      req.batch_size.value_or(1), req.population.value_or(1000));
  reg.base.iterations = req.t_max;
  reg.lambda = req.lambda.value_or(0.65);
  reg.dimension = req.dimension.value_or(1);
  if (req.kappa != "auto") {
    std::size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(req.kappa, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != req.kappa.size()) {
      throw DomainError("--kappa must be a number or 'auto'");
    }
    reg.kappa = value;
  }
  reg.contraction = req.ball_diameter ? BallContraction::kDiameter
                                      : BallContraction::kPublishedRadius;
  reg.Validate();
  return reg;
}

inline nlohmann::json SamplingJson(const SamplingScheme& s) {
  if (s.kind() == SamplingScheme::Kind::kPoisson) {
    return {{"kind", "poisson"}, {"p", s.rate()}};
  }
  return {{"kind", "without_replacement"},
          {"b", s.batch_size()},
          {"n", s.population()},
          {"rate", s.rate()}};
}

inline nlohmann::json ProjectedMeta(const SgdBoundConfig& cfg) {
  return {{"D", cfg.diameter},   {"C", cfg.clip_norm},
          {"eta", cfg.learning_rate}, {"sigma", cfg.sigma},
          {"sampling", SamplingJson(cfg.sampling)},
          {"r", cfg.DistanceRatio()}};
}

inline void WriteCurve(const std::vector<CurveRow>& rows, bool with_kappa,
                       const std::string& format, const nlohmann::json& meta,
                       std::ostream& out) {
  if (format == "json") {
    nlohmann::json list = nlohmann::json::array();
    for (const CurveRow& row : rows) {
      nlohmann::json item;
      if (row.label.empty()) {
        item["t"] = row.t;
      } else {
        item["t"] = row.label;
      }
      item["value"] = row.value;
      if (row.kappa_star) item["kappa_star"] = *row.kappa_star;
      list.push_back(std::move(item));
    }
    out << nlohmann::json{{"meta", meta}, {"rows", list}}.dump(2) << '\n';
    return;
  }
  out << (with_kappa ? "T,value,kappa_star\n" : "T,value\n");
  for (const CurveRow& row : rows) {
    out << (row.label.empty() ? std::to_string(row.t) : row.label) << ','
        << FormatDouble(row.value);
    if (with_kappa) out << ',' << (row.kappa_star ? FormatDouble(*row.kappa_star) : "");
    out << '\n';
  }
}

// Flags that make sense for each mode besides --out, --t-max, --log-t.
inline const std::set<std::string>& AllowedFlags(const std::string& mode) {
  static const std::set<std::string> kDelta = {"--D", "--C", "--eta", "--sigma",
                                               "--p", "--b", "--n", "--epsilon"};
  static const std::set<std::string> kEps = {"--D", "--C", "--eta", "--sigma",
                                             "--p", "--b", "--n", "--delta"};
  static const std::set<std::string> kReg = {
      "--C",   "--eta", "--sigma", "--b",       "--n",
      "--lambda", "--dim", "--kappa", "--epsilon", "--ball-diameter"};
  static const std::set<std::string> kVerify = {"--suite", "--seed"};
  if (mode == "delta-curve") return kDelta;
  if (mode == "eps-curve") return kEps;
  if (mode == "regularized") return kReg;
  return kVerify;
}

}  // namespace internal

inline int RunDeltaCurve(const CurveRequest& req, std::ostream& out) {
  const SgdBoundConfig cfg = internal::ProjectedConfig(req);
  const double eps = req.epsilon.value_or(3.0);
  dpsgd::internal::RequireEpsilon(eps, "--epsilon");
  const double theta = ProjectedTheta(cfg, eps);
  const double p = cfg.sampling.rate();
  std::vector<CurveRow> rows;
  for (int64_t t : Horizons(req.t_max, req.log_t)) {
    rows.push_back({t, "", GeometricDelta(p, theta, t), std::nullopt});
  }
  rows.push_back({0, "inf", DeltaLimit(cfg, eps), std::nullopt});
  nlohmann::json meta = internal::ProjectedMeta(cfg);
  meta["mode"] = req.mode;
  meta["epsilon"] = eps;
  meta["theta"] = theta;
  meta["t_max"] = req.t_max;
  meta["log_t"] = req.log_t;
  internal::WriteCurve(rows, false, req.format, meta, out);
  return kExitOk;
}

// Rows are non-decreasing in T: a longer horizon has a larger delta bound,
// so the same delta needs a larger eps.
inline int RunEpsCurve(const CurveRequest& req, std::ostream& out) {
  const SgdBoundConfig cfg = internal::ProjectedConfig(req);
  const double delta = req.delta.value_or(1e-3);
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("--delta must lie in (0, 1)");
  std::vector<CurveRow> rows;
  for (int64_t t : Horizons(req.t_max, req.log_t)) {
    rows.push_back({t, "", EpsilonFromDelta(cfg, delta, Horizon::Steps(t)),
                    std::nullopt});
  }
  rows.push_back({0, "inf", EpsilonFromDelta(cfg, delta, Horizon::Infinite()),
                  std::nullopt});
  rows.push_back({0, "inf-closed-form", EpsilonClosedFormBound(cfg, delta),
                  std::nullopt});
  nlohmann::json meta = internal::ProjectedMeta(cfg);
  meta["mode"] = req.mode;
  meta["delta"] = delta;
  meta["t_max"] = req.t_max;
  meta["log_t"] = req.log_t;
  internal::WriteCurve(rows, false, req.format, meta, out);
  return kExitOk;
}

inline int RunRegularized(const CurveRequest& req, std::ostream& out) {
  const RegularizedConfig reg = internal::RegularizedFromRequest(req);
  const double eps = req.epsilon.value_or(5.0);
  dpsgd::internal::RequireEpsilon(eps, "--epsilon");
  const std::vector<int64_t> horizons = Horizons(req.t_max, req.log_t);
  std::vector<CurveRow> rows;
  if (reg.kappa) {
    // One pass over t gives every prefix of the contraction sum.
    const std::vector<double> sums = dpsgd::internal::ContractionSums(
        RegularizedThetas(reg, eps, *reg.kappa, req.t_max),
        reg.base.sampling.rate());
    const double prefactor = dpsgd::internal::ContractionPrefactor(reg);
    for (int64_t t : horizons) {
      const double value = CouplingTerm(reg, eps, *reg.kappa, t) +
                           prefactor * sums[static_cast<std::size_t>(t - 1)];
      rows.push_back({t, "", value, *reg.kappa});
    }
  } else {
    for (const auto& best : OptimizeRegularizedCurve(reg, eps, horizons)) {
      rows.push_back({best.iterations, "", best.delta, best.kappa});
    }
  }
  nlohmann::json meta = {
      {"mode", req.mode},
      {"C", reg.base.clip_norm},
      {"eta", reg.base.learning_rate},
      {"sigma", reg.base.sigma},
      {"sampling", internal::SamplingJson(reg.base.sampling)},
      {"lambda", reg.lambda},
      {"dim", reg.dimension},
      {"kappa", req.kappa},
      {"epsilon", eps},
      {"ball_convention", req.ball_diameter ? "diameter" : "published_radius"},
      {"t_max", req.t_max},
      {"log_t", req.log_t}};
  internal::WriteCurve(rows, true, req.format, meta, out);
  return kExitOk;
}

inline int RunVerify(const CurveRequest& req, std::ostream& out,
                     std::ostream& err) {
  if (req.suite.empty()) throw DomainError("verify needs --suite");
  const SuiteReport report = RunSuite(req.suite, req.seed);
  nlohmann::json doc = report.ToJson();
  doc["meta"] = {{"mode", req.mode}, {"suite", req.suite}, {"seed", req.seed}};
  out << doc.dump(2) << '\n';
  if (!report.pass()) {
    int failed = 0;
    for (const auto& c : report.checks) failed += c.pass ? 0 : 1;
    err << "verification failed: " << failed << " of " << report.checks.size()
        << " checks\n";
    return kExitVerificationFailed;
  }
  return kExitOk;
}

// Parses `args` (without the program name) and runs the request.
inline int Run(const std::vector<std::string>& args, std::ostream& out,
               std::ostream& err) {
  CLI::App app{"Last-iterate privacy accounting for DP-SGD",
               "dpsgd_accountant"};
  CurveRequest req;
  app.add_option("mode", req.mode, "delta-curve | eps-curve | regularized | verify")
      ->required()
      ->check(CLI::IsMember({"delta-curve", "eps-curve", "regularized", "verify"}));
  app.add_option("--D", req.diameter, "domain diameter (default 3)");
  app.add_option("--C", req.clip_norm, "clipping norm");
  app.add_option("--eta", req.learning_rate, "learning rate");
  app.add_option("--sigma", req.sigma, "noise standard deviation");
  app.add_option("--p", req.rate, "Poisson sampling rate");
  app.add_option("--b", req.batch_size, "batch size (without replacement)");
  app.add_option("--n", req.population, "dataset size (without replacement)");
  app.add_option("--lambda", req.lambda, "weight decay");
  app.add_option("--dim", req.dimension, "parameter dimension");
  app.add_option("--kappa", req.kappa, "coupling radius or 'auto'");
  app.add_option("--epsilon", req.epsilon, "privacy parameter epsilon");
  app.add_option("--delta", req.delta, "target delta");
  auto* t_max = app.add_option("--t-max", req.t_max, "largest horizon");
  app.add_flag("--log-t", req.log_t, "log-spaced horizons");
  app.add_flag("--ball-diameter", req.ball_diameter,
               "feed the ball diameter, not its radius, to theta");
  app.add_option("--out", req.format, "csv | json")
      ->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--suite", req.suite, "oracle suite")
      ->check(CLI::IsMember({"contraction", "dpi", "recursion", "coupling", "end-to-end"}));
  app.add_option("--seed", req.seed, "seed of the randomized trials");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << '\n' << app.help();
    return kExitUsage;
  }

  try {
    const auto& allowed = internal::AllowedFlags(req.mode);
    for (const CLI::Option* opt : app.get_options()) {
      const std::string name = opt->get_name();
      if (opt->count() == 0 || name.rfind("--", 0) != 0) continue;
      if (name == "--help" || name == "--out" || name == "--t-max" ||
          name == "--log-t") {
        continue;
      }
      if (!allowed.count(name)) {
        throw DomainError(name + " does not apply to " + req.mode);
      }
    }
    if (req.mode != "verify") {
      if (t_max->count() == 0) req.t_max = req.mode == "regularized" ? 100 : 10000;
      if (req.t_max < 1) throw DomainError("--t-max must be >= 1");
    }
    if (req.mode == "delta-curve") return RunDeltaCurve(req, out);
    if (req.mode == "eps-curve") return RunEpsCurve(req, out);
    if (req.mode == "regularized") return RunRegularized(req, out);
    return RunVerify(req, out, err);
  } catch (const std::logic_error& e) {
    err << "invalid parameters: " << e.what() << '\n';
    return kExitUsage;
  }
}

inline int Run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return Run(args, std::cout, std::cerr);
}

}  // namespace dpsgd::cli

#endif  // DPSGD_CLI_H_
