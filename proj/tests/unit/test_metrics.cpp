// Copyright 2026 The gckit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "gckit/metrics.hpp"
#include "oracles.hpp"

namespace gckit {
namespace {

using testing::Labels;
using testing::brute_force_assignment;
using testing::random_labels;
using testing::oracle_accuracy;
using testing::oracle_nmi;
using testing::oracle_ari;

// --- linear_assignment -----------------------------------------------------

TEST(LinearAssignment, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  for (int trial = 0; trial < 400; ++trial) {
    const std::size_t r = 1 + rng() % 6, c = 1 + rng() % 6;
    Matrix cost(r, c);
    for (double& v : cost.data()) v = u(rng);
    const Matching m = linear_assignment(cost);
    EXPECT_NEAR(m.objective, brute_force_assignment(cost), 1e-9);
    std::vector<bool> used(c, false);
    std::size_t matched = 0;
    for (auto col : m.row_to_col) {
      if (col < 0) continue;
      ASSERT_FALSE(used[col]);
      used[col] = true;
      ++matched;
    }
    EXPECT_EQ(matched, std::min(r, c));
  }
}

TEST(LinearAssignment, SmallExamples) {
  Matrix eye(4, 4, 1.0);
  for (std::size_t i = 0; i < 4; ++i) eye(i, i) = 0.0;
  Matching m = linear_assignment(eye);
  EXPECT_EQ(m.objective, 0.0);
  EXPECT_EQ(m.row_to_col, (std::vector<std::ptrdiff_t>{0, 1, 2, 3}));
  m = linear_assignment(Matrix(2, 2, {1.0, 2.0, 2.0, 1.0}));
  EXPECT_EQ(m.objective, 2.0);
  EXPECT_EQ(m.row_to_col, (std::vector<std::ptrdiff_t>{0, 1}));
}

TEST(LinearAssignment, SixBySixIntegerCosts) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    Matrix cost(6, 6);
    for (double& v : cost.data()) v = static_cast<double>(rng() % 100);
    EXPECT_EQ(linear_assignment(cost).objective, brute_force_assignment(cost));
  }
}

TEST(LinearAssignment, MaximizeAndIntegerCosts) {
  const BasicMatrix<std::int64_t> gain(2, 3, {1, 5, 2, 4, 6, 0});
  const Matching m = linear_assignment(gain, AssignMode::kMax);
  EXPECT_EQ(m.objective, 9.0);
  EXPECT_EQ(m.row_to_col, (std::vector<std::ptrdiff_t>{1, 0}));
}

TEST(LinearAssignment, RejectsBadInput) {
  EXPECT_THROW(linear_assignment(Matrix(0, 0)), Error);
  Matrix bad(2, 2, 1.0);
  bad(1, 1) = std::nan("");
  EXPECT_THROW(linear_assignment(bad), Error);
}

// --- metrics ---------------------------------------------------------------

TEST(Metrics, IdenticalLabelings) {
  const Labels l{0, 0, 1, 1, 2};
  const Scores s = evaluate(l, l);
  EXPECT_EQ(s.acc, 1.0);
  EXPECT_NEAR(s.nmi, 1.0, 1e-15);
  EXPECT_EQ(s.ari, 1.0);
}

TEST(Metrics, PermutedLabelsScorePerfectly) {
  const Labels t{0, 0, 1, 1, 2, 2};
  const Labels p{2, 2, 0, 0, 1, 1};
  const Scores s = evaluate(t, p);
  EXPECT_EQ(s.acc, 1.0);
  EXPECT_NEAR(s.nmi, 1.0, 1e-15);
  EXPECT_NEAR(s.ari, 1.0, 1e-15);
}

TEST(Metrics, OrthogonalSplit) {
  const Labels t{0, 0, 1, 1};
  const Labels p{0, 1, 0, 1};
  EXPECT_DOUBLE_EQ(accuracy(t, p), 0.5);
  EXPECT_NEAR(nmi(t, p), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(ari(t, p), -0.5);
}

TEST(Metrics, OneDocumentMislabeled) {
  const Labels t{0, 0, 1, 1};
  const Labels p{0, 0, 1, 0};
  EXPECT_DOUBLE_EQ(accuracy(t, p), 0.75);
  EXPECT_NEAR(nmi(t, p), 0.3455920299442113, 1e-14);
}

TEST(Metrics, SingleClusterConventions) {
  const Labels one{0, 0, 0, 0};
  const Labels split{0, 0, 1, 1};
  EXPECT_EQ(nmi(one, one), 1.0);
  EXPECT_EQ(nmi(one, split), 0.0);
  EXPECT_EQ(nmi(split, one), 0.0);
  EXPECT_EQ(ari(one, one), 1.0);
  EXPECT_EQ(ari(split, one), 0.0);
  EXPECT_EQ(ari(Labels{0, 0, 1, 1, 2, 2}, Labels{0, 0, 0, 0, 0, 0}), 0.0);
  EXPECT_DOUBLE_EQ(accuracy(split, one), 0.5);
}

TEST(Metrics, InputErrors) {
  const Labels a{0, 1, 0}, b{0, 1};
  try {
    accuracy(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  EXPECT_THROW(nmi(Labels{}, Labels{}), Error);
  EXPECT_THROW(ari(Labels{1}, Labels{1}), Error);
}

TEST(Metrics, AgreeWithOracles) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng() % 30;
    const Labels t = random_labels(n, 1 + static_cast<int>(rng() % 5), rng);
    const Labels p = random_labels(n, 1 + static_cast<int>(rng() % 5), rng);
    EXPECT_NEAR(accuracy(t, p), oracle_accuracy(t, p), 1e-12);
    EXPECT_NEAR(nmi(t, p), oracle_nmi(t, p), 1e-12);
    EXPECT_NEAR(ari(t, p), oracle_ari(t, p), 1e-12);
  }
}

TEST(Metrics, AccuracyFloorNeedsAsManyPredictedClusters) {
  // One predicted cluster over three balanced classes.
  EXPECT_NEAR(accuracy(Labels{0, 1, 2}, Labels{0, 0, 0}), 1.0 / 3.0, 1e-15);
}

TEST(Metrics, InvariantUnderRelabeling) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng() % 40;
    const Labels t = random_labels(n, 4, rng);
    const Labels p = random_labels(n, 5, rng);
    std::vector<int> perm{10, 11, 12, 13, 14};
    std::shuffle(perm.begin(), perm.end(), rng);
    Labels q(n);
    for (std::size_t i = 0; i < n; ++i) q[i] = perm[p[i]];
    const Scores a = evaluate(t, p), b = evaluate(t, q);
    EXPECT_EQ(a.acc, b.acc);
    EXPECT_NEAR(a.nmi, b.nmi, 1e-12);
    EXPECT_NEAR(a.ari, b.ari, 1e-12);
  }
}

TEST(Metrics, RangesAndAccuracyFloor) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 50;
    const int kp = 1 + static_cast<int>(rng() % 6);
    const Labels t = random_labels(n, 1 + static_cast<int>(rng() % 6), rng);
    const Labels p = random_labels(n, kp, rng);
    const Scores s = evaluate(t, p);
    const std::set<int> used_t(t.begin(), t.end()), used_p(p.begin(), p.end());
    const auto k = std::max(used_t.size(), used_p.size());
    EXPECT_GE(s.acc, 1.0 / static_cast<double>(k) - 1e-12);
    if (used_t.size() <= used_p.size()) {
      EXPECT_GE(s.acc, 1.0 / static_cast<double>(used_p.size()) - 1e-12);
    }
    EXPECT_LE(s.acc, 1.0);
    EXPECT_GE(s.nmi, 0.0);
    EXPECT_LE(s.nmi, 1.0);
    EXPECT_GE(s.ari, -1.0);
    EXPECT_LE(s.ari, 1.0);
    EXPECT_NEAR(nmi(t, p), nmi(p, t), 1e-12);
    EXPECT_NEAR(ari(t, p), ari(p, t), 1e-12);
  }
}

}  // namespace
}  // namespace gckit
