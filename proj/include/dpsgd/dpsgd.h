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

// Umbrella header.

#ifndef DPSGD_DPSGD_H_
#define DPSGD_DPSGD_H_

#include "dpsgd/accountant.h"
#include "dpsgd/errors.h"
#include "dpsgd/hockey_stick.h"
#include "dpsgd/oracle.h"
#include "dpsgd/report.h"
#include "dpsgd/specfun.h"
#include "dpsgd/suites.h"

#endif  // DPSGD_DPSGD_H_
