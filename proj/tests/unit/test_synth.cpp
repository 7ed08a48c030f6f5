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

#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "gckit/synth.hpp"

namespace gckit {
namespace {

SyntheticInstance small_instance(std::uint64_t seed, std::size_t j = 256,
                                 double private_mass = 0.0) {
  SynthOptions o;
  o.k_true = 3;
  o.n_docs = 12;
  o.m = 20;
  o.noise = 0.2;
  o.private_mass = private_mass;
  o.j = j;
  Rng rng(seed);
  return generate_instance(o, rng);
}

// Perturbs a distribution multiplicatively and renormalizes.
Proposal perturb(const Proposal& phi, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, scale);
  Proposal out = phi;
  for (double& v : out.log_phi) v += g(rng);
  const double z = logsumexp(out.log_phi);
  for (double& v : out.log_phi) v -= z;
  return out;
}

TEST(GenerateInstance, ShapesAndNormalization) {
  const auto inst = small_instance(1, 100, 0.1);
  EXPECT_EQ(inst.n_docs(), 12u);
  EXPECT_EQ(inst.text_space(), 32u);
  EXPECT_EQ(inst.p.log_p.rows(), 12u);
  EXPECT_EQ(inst.p.log_p.cols(), 100u);
  EXPECT_EQ(inst.p.doc_ids.front(), "d0");
  for (std::size_t i = 0; i < 12; ++i) {
    const auto row = inst.doc_dists.row(i);
    EXPECT_NEAR(std::accumulate(row.begin(), row.end(), 0.0), 1.0, 1e-12);
    for (double v : row) EXPECT_GT(v, 0.0);
    EXPECT_EQ(inst.true_labels[i], i / 4);
    // The private symbol carries at least its planted share.
    EXPECT_GE(row[20 + i], 0.1 - 1e-9);
  }
  for (std::size_t c = 0; c < 100; ++c) {
    const std::size_t y = inst.sampled_text_ids[c];
    EXPECT_EQ(inst.p.text_ids[c], "y" + std::to_string(y));
    EXPECT_DOUBLE_EQ(inst.p.log_p(3, c), std::log(inst.doc_dists(3, y)));
  }
}

TEST(GenerateInstance, DeterministicAndValidated) {
  const auto a = small_instance(2), b = small_instance(2);
  EXPECT_EQ(a.p.log_p, b.p.log_p);
  SynthOptions o;
  o.noise = 0.7;
  o.private_mass = 0.5;
  Rng rng(0);
  EXPECT_THROW(generate_instance(o, rng), Error);
}

TEST(GenerateInstance, NoiselessClustersHaveIdenticalRows) {
  SynthOptions o;
  o.k_true = 2;
  o.n_docs = 6;
  o.noise = 0.0;
  Rng rng(20);
  const auto inst = generate_instance(o, rng);
  for (std::size_t i = 1; i < 3; ++i) {
    for (std::size_t y = 0; y < inst.text_space(); ++y) EXPECT_EQ(inst.doc_dists(i, y), inst.doc_dists(0, y));
  }
  EXPECT_EQ(exact_kl(inst.doc_dists.row(0), inst.doc_dists.row(2)), 0.0);
}

TEST(GenerateInstance, SingleClusterKlIsTheSameForEveryIndex) {
  SynthOptions o;
  o.k_true = 1;
  o.n_docs = 5;
  Rng rng(21);
  const auto inst = generate_instance(o, rng);
  const OracleReport r = oracle_report(inst, 1.0);
  ASSERT_EQ(r.exact_kl.cols(), 1u);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(r.exact_kl(i, 0), exact_kl(inst.doc_dists.row(i), inst.cluster_dists.row(0)));
    EXPECT_GE(r.exact_kl(i, 0), 0.0);
  }
}

TEST(GenerateInstance, CrossClusterDivergenceExceedsWithin) {
  SynthOptions o;
  o.k_true = 3;
  o.n_docs = 90;
  o.m = 50;
  o.concentration = 1.0;
  o.noise = 0.1;
  Rng rng(22);
  const auto inst = generate_instance(o, rng);
  double within = 0.0, cross = 0.0;
  std::size_t nw = 0, nc = 0;
  for (std::size_t a = 0; a < 90; ++a) {
    for (std::size_t b = 0; b < 90; ++b) {
      if (a == b) continue;
      const double kl = exact_kl(inst.doc_dists.row(a), inst.doc_dists.row(b));
      if (inst.true_labels[a] == inst.true_labels[b]) {
        within += kl;
        ++nw;
      } else {
        cross += kl;
        ++nc;
      }
    }
  }
  EXPECT_GT(cross / nc, 3.0 * within / nw);
}

TEST(GenerateHierarchical, LabelsNest) {
  HierarchicalSynthOptions o;
  o.k_top = 3;
  o.k_sub = 2;
  o.docs_per_leaf = 4;
  Rng rng(3);
  const auto inst = generate_hierarchical(o, rng);
  ASSERT_EQ(inst.n_docs(), 24u);
  for (std::size_t i = 0; i < 24; ++i) {
    EXPECT_EQ(inst.true_labels[i], i / 4);
    EXPECT_EQ(inst.parent_labels[i], i / 8);
  }
}

TEST(SampleTexts, FrequenciesMatchTheExactPrior) {
  const auto inst = small_instance(4);
  const auto prior = exact_prior(inst);
  EXPECT_NEAR(std::accumulate(prior.begin(), prior.end(), 0.0), 1.0, 1e-12);
  Rng rng(5);
  const std::size_t draws = 200000;
  const auto ids = sample_texts(inst.doc_dists, draws, rng);
  std::vector<double> counts(prior.size(), 0.0);
  for (auto y : ids) counts[y] += 1.0;
  double chi2 = 0.0;
  std::size_t dof = 0;
  for (std::size_t y = 0; y < prior.size(); ++y) {
    const double e = prior[y] * draws;
    if (e < 5.0) continue;
    chi2 += (counts[y] - e) * (counts[y] - e) / e;
    ++dof;
  }
  // Generous bound: mean dof - 1, sd sqrt(2 dof).
  EXPECT_LT(chi2, dof + 5.0 * std::sqrt(2.0 * dof));
}

// --- exact KL --------------------------------------------------------------

TEST(ExactKl, HandEvaluated) {
  const std::vector<double> point{1.0, 0.0}, half{0.5, 0.5};
  EXPECT_NEAR(exact_kl(point, half), std::log(2.0), 1e-15);
  EXPECT_EQ(exact_kl(half, half), 0.0);
  try {
    exact_kl(half, point);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kAbsoluteContinuity);
  }
  EXPECT_THROW(exact_kl(half, std::vector<double>{0.3, 0.3}), Error);
}

TEST(ExactKl, AgreesWithExtendedPrecision) {
  std::mt19937_64 rng(6);
  std::gamma_distribution<double> gamma(0.5, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng() % 50;
    std::vector<double> p(m), q(m);
    long double zp = 0, zq = 0;
    for (std::size_t y = 0; y < m; ++y) {
      p[y] = gamma(rng) + 1e-300;
      q[y] = gamma(rng) + 1e-300;
      zp += p[y];
      zq += q[y];
    }
    for (std::size_t y = 0; y < m; ++y) {
      p[y] = static_cast<double>(p[y] / zp);
      q[y] = static_cast<double>(q[y] / zq);
    }
    long double ref = 0;
    for (std::size_t y = 0; y < m; ++y) {
      if (p[y] > 0) ref += static_cast<long double>(p[y]) * std::log(static_cast<long double>(p[y]) / q[y]);
    }
    EXPECT_NEAR(exact_kl(p, q), static_cast<double>(ref), 1e-12 * std::max(1.0, static_cast<double>(ref)));
  }
}

// --- RIS estimate against exact values --------------------------------------

TEST(RisEstimate, UnitWeightsReduceToAverageLogRatio) {
  const auto inst = small_instance(7);
  const std::vector<std::size_t> ids{0, 3, 3, 9};
  const std::vector<double> log_phi(inst.text_space(), 0.0);
  double expect = 0.0;
  for (auto y : ids) expect += std::log(inst.doc_dists(2, y) / inst.cluster_dists(1, y));
  EXPECT_NEAR(ris_estimate(inst, 2, 1, ids, log_phi, 0.0), expect / 4.0, 1e-14);
}

TEST(RisEstimate, ConvergesToExactKlWithUnbiasedWeights) {
  const auto inst = small_instance(8, 200000);
  const OracleReport r = oracle_report(inst, 1.0);
  EXPECT_LT(r.mean_abs_error, 0.02);
  for (std::size_t i = 0; i < inst.n_docs(); ++i) {
    EXPECT_GE(r.exact_kl(i, inst.true_labels[i]), 0.0);
  }
}

TEST(EstimatorSweep, UnitExponentConverges) {
  const auto inst = small_instance(18, 16);
  const std::vector<double> alphas{1.0};
  const std::vector<std::size_t> js{256, 4096};
  const auto cells = estimator_error_sweep(inst, alphas, js, 50, 19, 4);
  EXPECT_LT(cells[1].rmse, cells[0].rmse);
  // Well separated pairs: the mean estimate sits within 5% of the exact value.
  const auto prior = exact_prior(inst);
  std::vector<double> log_phi(prior.size());
  for (std::size_t y = 0; y < prior.size(); ++y) log_phi[y] = std::log(prior[y]);
  Rng rng(23);
  const double exact = exact_kl(inst.doc_dists.row(0), inst.cluster_dists.row(2));
  double mean = 0.0;
  for (int t = 0; t < 20; ++t) {
    mean += ris_estimate(inst, 0, 2, sample_texts(inst.doc_dists, 4096, rng), log_phi, 1.0) / 20.0;
  }
  EXPECT_LT(std::abs(mean - exact), 0.05 * exact);
}

TEST(EstimatorSweep, VarianceShrinksWithSampleSize) {
  const auto inst = small_instance(9, 16, 0.3);
  const std::vector<double> alphas{0.25, 1.0};
  const std::vector<std::size_t> js{64, 1024};
  const auto cells = estimator_error_sweep(inst, alphas, js, 40, 11, 4);
  ASSERT_EQ(cells.size(), 4u);
  EXPECT_GT(cells[0].mean_variance, cells[1].mean_variance);
  EXPECT_GT(cells[2].mean_variance, cells[3].mean_variance);
  EXPECT_GT(cells[2].rmse, cells[3].rmse);
  // Unit exponent is unbiased; a small exponent trades bias for variance.
  EXPECT_LT(std::abs(cells[3].mean_bias), std::abs(cells[1].mean_bias));
  EXPECT_LT(cells[1].mean_variance, cells[3].mean_variance);

  const auto again = estimator_error_sweep(inst, alphas, js, 40, 11, 1);
  EXPECT_EQ(again[3].rmse, cells[3].rmse);
}

// --- second moment of the weights ------------------------------------------

TEST(SecondMoment, EqualsOneWhenProposalIsTheDocument) {
  SynthOptions o;
  o.k_true = 1;
  o.n_docs = 1;
  o.m = 15;
  Rng rng(12);
  const auto inst = generate_instance(o, rng);
  Proposal phi{std::vector<double>(15)};
  for (std::size_t y = 0; y < 15; ++y) phi.log_phi[y] = std::log(inst.doc_dists(0, y));
  for (double alpha : {0.1, 0.25, 0.5, 0.75, 1.0}) {
    EXPECT_NEAR(second_moment(phi, inst, alpha), 1.0, 1e-12);
  }
  const Proposal opt = optimal_proposal(inst, 0.7);
  for (std::size_t y = 0; y < 15; ++y) EXPECT_NEAR(opt.log_phi[y], phi.log_phi[y], 1e-12);
}

TEST(SecondMoment, TwoDocumentsAtHalfExponent) {
  SynthOptions o;
  o.k_true = 2;
  o.n_docs = 2;
  o.m = 6;
  Rng rng(24);
  const auto inst = generate_instance(o, rng);
  // At exponent one half each document contributes sum_y p(y|x) = 1.
  EXPECT_NEAR(second_moment(optimal_proposal(inst, 0.5), inst, 0.5), 1.0, 1e-14);
}

TEST(SecondMoment, HalfExponentIsFlat) {
  const auto inst = small_instance(13);
  std::mt19937_64 rng(14);
  const Proposal opt = optimal_proposal(inst, 0.5);
  for (int t = 0; t < 20; ++t) {
    EXPECT_NEAR(second_moment(perturb(opt, 1.0, rng), inst, 0.5), 1.0, 1e-12);
  }
}

TEST(SecondMoment, PowerMeanProposalMinimizesForUnitExponent) {
  std::mt19937_64 rng(15);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto inst = small_instance(100 + s);
    for (double alpha : {0.75, 1.0}) {
      const Proposal opt = optimal_proposal(inst, alpha);
      const double m0 = second_moment(opt, inst, alpha);
      for (int t = 0; t < 100; ++t) {
        EXPECT_GE(second_moment(perturb(opt, 0.1, rng), inst, alpha), m0 * (1 - 1e-12));
      }
    }
  }
}

TEST(SecondMoment, PowerMeanProposalIsAStationaryMaximumBelowHalf) {
  // For exponents under one half the moment is concave in the proposal, so
  // the same stationary point is the largest value on the simplex.
  std::mt19937_64 rng(16);
  const auto inst = small_instance(17);
  const double alpha = 0.25;
  const Proposal opt = optimal_proposal(inst, alpha);
  const double m0 = second_moment(opt, inst, alpha);
  for (int t = 0; t < 100; ++t) {
    EXPECT_LE(second_moment(perturb(opt, 0.1, rng), inst, alpha), m0 * (1 + 1e-12));
  }
  // First-order change vanishes along a zero-sum direction.
  Proposal up = opt, down = opt;
  const double h = 1e-5;
  up.log_phi[0] = std::log(std::exp(opt.log_phi[0]) + h);
  up.log_phi[1] = std::log(std::exp(opt.log_phi[1]) - h);
  down.log_phi[0] = std::log(std::exp(opt.log_phi[0]) - h);
  down.log_phi[1] = std::log(std::exp(opt.log_phi[1]) + h);
  const double slope = (second_moment(up, inst, alpha) - second_moment(down, inst, alpha)) / (2 * h);
  EXPECT_NEAR(slope, 0.0, 1e-6);
}

}  // namespace
}  // namespace gckit
