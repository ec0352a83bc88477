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

#ifndef DPSGD_ERRORS_H_
#define DPSGD_ERRORS_H_

#include <stdexcept>
#include <string>

namespace dpsgd {

// An argument lies outside the mathematical domain of the operation.
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Shapes do not line up: mismatched supports, kernel sizes, unaligned
// intervals.
class StructuralError : public std::logic_error {
 public:
  explicit StructuralError(const std::string& what) : std::logic_error(what) {}
};

// The request exceeds what exact enumeration supports.
class CapacityError : public std::length_error {
 public:
  explicit CapacityError(const std::string& what) : std::length_error(what) {}
};

}  // namespace dpsgd

#endif  // DPSGD_ERRORS_H_
