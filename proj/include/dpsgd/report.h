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

#ifndef DPSGD_REPORT_H_
#define DPSGD_REPORT_H_

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace dpsgd {

// Outcome of one oracle check. Serialized as
// {check, params, max_slack, tolerance, pass[, details][, witness]}.
struct VerificationReport {
  std::string check;
  nlohmann::json params = nlohmann::json::object();
  double max_slack = 0.0;  // largest observed lhs - rhs
  double tolerance = 0.0;  // discretization allowance
  bool pass = false;
  nlohmann::json details;  // optional measured values
  nlohmann::json witness;  // inputs of the worst case on failure

  nlohmann::json ToJson() const {
    nlohmann::json out = {{"check", check},
                          {"params", params},
                          {"max_slack", max_slack},
                          {"tolerance", tolerance},
                          {"pass", pass}};
    if (!details.is_null()) out["details"] = details;
    if (!witness.is_null()) out["witness"] = witness;
    return out;
  }
};

struct SuiteReport {
  std::string suite;
  std::vector<VerificationReport> checks;

  bool pass() const {
    for (const auto& c : checks) {
      if (!c.pass) return false;
    }
    return !checks.empty();
  }

  void Append(SuiteReport other) {
    for (auto& c : other.checks) checks.push_back(std::move(c));
  }

  nlohmann::json ToJson() const {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& c : checks) list.push_back(c.ToJson());
    return {{"suite", suite}, {"pass", pass()}, {"checks", list}};
  }
};

}  // namespace dpsgd

#endif  // DPSGD_REPORT_H_
