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

#include "dpsgd/specfun.h"

#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "reference.h"

namespace dpsgd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// 50-digit values computed once before the build.
constexpr double kQOne = 0.15865525393145705;
constexpr double kLogQTen = -53.23128515051247;
constexpr double kOneMinusQOne = 0.841344746068543;
constexpr double kChi2TwoTwo = 0.6321205588285577;
constexpr double kChi2OneOne = 0.6826894921370859;

TEST(QTailTest, Examples) {
  EXPECT_EQ(QTail(0.0), 0.5);
  EXPECT_NEAR(QTail(1.0), kQOne, 1e-12 * kQOne);
  EXPECT_NEAR(QTail(1.0), 0.158655253931, 1e-12);
  for (double t : {-7.5, -3.0, -0.2, 0.0, 0.4, 1.3, 5.0, 8.0}) {
    EXPECT_NEAR(QTail(-t) + QTail(t), 1.0, 1e-15) << t;
  }
}

TEST(QTailTest, RejectsNonFinite) {
  EXPECT_THROW(QTail(kInf), DomainError);
  EXPECT_THROW(QTail(-kInf), DomainError);
  EXPECT_THROW(QTail(kNaN), DomainError);
}

TEST(QTailTest, MatchesReferenceWithinRelativeBudget) {
  for (double t = -8.0; t <= 8.0; t += 0.0625) {
    const double ref = reference::QTail(t);
    EXPECT_NEAR(QTail(t), ref, 1e-12 * ref) << t;
  }
}

TEST(QTailTest, FarTailError) {
  for (double t : {9.0, 12.0, 20.0, 30.0, 37.5, 38.5, 40.0}) {
    const double ref = reference::QTail(t);
    EXPECT_NEAR(QTail(t), ref, std::max(1e-12 * ref, 1e-300)) << t;
  }
}

TEST(QTailTest, DecreasingAndOpenUnitRange) {
  double previous = QTail(-8.0);
  for (double t = -7.99; t <= 8.0; t += 0.01) {
    const double q = QTail(t);
    // Below -5 consecutive values differ by less than one ulp of 1.
    if (t > -5.0) {
      EXPECT_LT(q, previous) << t;
    } else {
      EXPECT_LE(q, previous) << t;
    }
    EXPECT_GT(q, 0.0);
    EXPECT_LT(q, 1.0);
    previous = q;
  }
}

TEST(LogQTailTest, Examples) {
  EXPECT_NEAR(LogQTail(0.0), std::log(0.5), 1e-15);
  EXPECT_NEAR(LogQTail(0.0), -0.693147180560, 1e-12);
  EXPECT_NEAR(LogQTail(10.0), kLogQTen, 1e-10 * std::abs(kLogQTen));
  EXPECT_NEAR(std::exp(LogQTail(10.0)), 7.61985302416e-24, 1e-34);
  EXPECT_NEAR(std::exp(LogQTail(1.0)), QTail(1.0), 1e-10 * QTail(1.0));
}

TEST(LogQTailTest, ConsistentWithQTail) {
  for (double t = -8.0; t <= 8.0; t += 0.05) {
    EXPECT_NEAR(std::exp(LogQTail(t)), QTail(t), 1e-10 * QTail(t)) << t;
  }
}

TEST(LogQTailTest, MatchesReferenceAcrossTheSeriesSwitch) {
  for (double t = -6.0; t <= 60.0; t += 0.37) {
    const double ref = reference::LogQTail(t);
    EXPECT_NEAR(LogQTail(t), ref, 1e-10 * std::max(1.0, std::abs(ref))) << t;
  }
  for (double t : {7.999999, 8.0, 8.000001, 100.0, 1e3, 1e5}) {
    const double ref = reference::LogQTail(t);
    EXPECT_NEAR(LogQTail(t), ref, 1e-10 * std::abs(ref)) << t;
  }
}

TEST(LogQTailTest, ScaledTailStaysRepresentable) {
  // e^eps Q(t) for eps = 1e4 and t of order sqrt(2 eps).
  for (double t : {140.0, 141.0, 145.0, 200.0}) {
    const double v = std::exp(1e4 + LogQTail(t));
    EXPECT_TRUE(std::isfinite(v)) << t;
  }
  EXPECT_THROW(LogQTail(kNaN), DomainError);
  EXPECT_THROW(LogQTail(kInf), DomainError);
}

TEST(StdNormalQuantileTest, Examples) {
  EXPECT_EQ(StdNormalQuantile(0.5), 0.0);
  EXPECT_NEAR(StdNormalQuantile(0.841344746069), 1.0, 1e-10);
  EXPECT_NEAR(StdNormalQuantile(kOneMinusQOne), 1.0, 1e-10);
  for (double p : {0x1p-40, 0x1p-20, 0x1p-10, 0.0625, 0.25, 0.375}) {  // 1 - p exact
    EXPECT_NEAR(StdNormalQuantile(p) + StdNormalQuantile(1.0 - p), 0.0, 1e-9) << p;
  }
}

TEST(StdNormalQuantileTest, RoundTrips) {
  for (double t = -6.0; t <= 6.0; t += 0.01) {
    EXPECT_NEAR(StdNormalQuantile(1.0 - QTail(t)), t, 1e-8) << t;
  }
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double p = std::max(unit(rng), 1e-300);
    EXPECT_NEAR(QTail(-StdNormalQuantile(p)), p, 1e-9) << p;
  }
}

TEST(StdNormalQuantileTest, AbsoluteErrorAgainstReference) {
  for (double t = -37.0; t <= 8.0; t += 0.173) {
    const double p = reference::QTail(-t);
    if (p <= 0.0 || p >= 1.0) continue;
    // Exact quantile of the rounded double p.
    EXPECT_NEAR(StdNormalQuantile(p), reference::Quantile(p), 1e-10) << p;
  }
  EXPECT_NEAR(StdNormalQuantile(1e-300), reference::Quantile(1e-300), 1e-10);
}

TEST(StdNormalQuantileTest, RejectsOutsideOpenInterval) {
  for (double p : {0.0, 1.0, -0.1, 1.5, kNaN}) {
    EXPECT_THROW(StdNormalQuantile(p), DomainError) << p;
  }
}

TEST(Chi2CdfTest, Examples) {
  for (int d : {1, 2, 5, 40}) EXPECT_EQ(Chi2Cdf(d, 0.0), 0.0);
  EXPECT_NEAR(Chi2Cdf(2, 2.0), kChi2TwoTwo, 1e-12);
  EXPECT_NEAR(Chi2Cdf(2, 2.0), 0.632120558829, 1e-12);
  EXPECT_NEAR(Chi2Cdf(1, 1.0), kChi2OneOne, 1e-12);
  EXPECT_NEAR(Chi2Cdf(1, 1.0), 0.682689492137, 1e-12);
}

TEST(Chi2CdfTest, ClosedForms) {
  for (double x : {0.1, 1.0, 2.0, 10.0, 37.0}) {
    EXPECT_NEAR(Chi2Cdf(2, x), -std::expm1(-0.5 * x), 1e-12) << x;
  }
  for (double t : {0.5, 1.0, 2.0, 4.0, 6.0}) {
    EXPECT_NEAR(Chi2Cdf(1, t * t), 1.0 - 2.0 * QTail(t), 1e-11) << t;
  }
}

TEST(Chi2CdfTest, MatchesReference) {
  for (int d : {1, 2, 3, 4, 7, 10, 25, 50, 100}) {
    for (double x = 0.05; x < 4.0 * d + 40.0; x *= 1.3) {
      EXPECT_NEAR(Chi2Cdf(d, x), reference::Chi2Cdf(d, x), 1e-12)
          << "d=" << d << " x=" << x;
    }
  }
}

TEST(Chi2CdfTest, Monotonicity) {
  for (int d = 1; d <= 30; ++d) {
    double previous = 0.0;
    for (double x = 0.0; x <= 80.0; x += 0.25) {
      const double c = Chi2Cdf(d, x);
      EXPECT_GE(c, previous) << d << " " << x;
      EXPECT_LE(Chi2Cdf(d + 1, x), c + 1e-15) << d << " " << x;
      previous = c;
    }
  }
}

TEST(Chi2CdfTest, SurvivalKeepsRelativePrecision) {
  // Upper tails far below the double epsilon of 1 - cdf.
  for (int d : {1, 3, 10}) {
    for (double x : {60.0, 120.0, 300.0}) {
      const auto exact = boost::math::gamma_q(reference::Real(d) / 2,
                                              reference::Real(x) / 2);
      const double want = static_cast<double>(exact);
      EXPECT_NEAR(Chi2Survival(d, x), want, 1e-12 * want) << d << " " << x;
    }
  }
  EXPECT_NEAR(Chi2Survival(1, 16.0), 2.0 * QTail(4.0), 1e-12 * QTail(4.0));
}

TEST(Chi2CdfTest, InverseSurvivalRoundTrip) {
  for (int d : {1, 2, 5, 20}) {
    for (double tail : {0.5, 0.1, 1e-3, 1e-8, 1e-15}) {
      const double x = Chi2InverseSurvival(d, tail);
      EXPECT_NEAR(Chi2Survival(d, x), tail, 1e-9 * tail) << d << " " << tail;
    }
    EXPECT_NEAR(Chi2Cdf(d, Chi2Quantile(d, 0.5)), 0.5, 1e-12);
  }
}

TEST(Chi2CdfTest, RejectsBadArguments) {
  EXPECT_THROW(Chi2Cdf(0, 1.0), DomainError);
  EXPECT_THROW(Chi2Cdf(-3, 1.0), DomainError);
  EXPECT_THROW(Chi2Cdf(2, -0.1), DomainError);
  EXPECT_THROW(Chi2Cdf(2, kNaN), DomainError);
  EXPECT_THROW(Chi2Survival(0, 1.0), DomainError);
  EXPECT_THROW(Chi2InverseSurvival(1, 0.0), DomainError);
  EXPECT_THROW(Chi2Quantile(1, 1.0), DomainError);
  EXPECT_EQ(Chi2Cdf(3, kInf), 1.0);
}

}  // namespace
}  // namespace dpsgd
