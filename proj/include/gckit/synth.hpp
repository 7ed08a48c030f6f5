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

#pragma once

// Planted-cluster generative models over a finite text space. Every
// distribution is explicit, so KL divergences, the prior p(Y) and importance
// weight moments can be computed by direct summation and used as oracles for
// the sampled-text estimators.
//
// Texts are symbols 0..M-1. With `private_mass > 0` each document also owns
// one private symbol (M + i) that only it generates with noticeable
// probability, which gives the heavy right tail real generated texts show.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gckit/engine.hpp"
#include "gckit/error.hpp"
#include "gckit/matrix.hpp"
#include "gckit/parallel.hpp"
#include "gckit/preprocess.hpp"

namespace gckit {

struct SynthOptions {
  std::size_t k_true = 2;
  std::size_t n_docs = 40;
  std::size_t m = 50;          // shared text-space size
  double concentration = 1.0;  // symmetric Dirichlet parameter
  double noise = 0.05;         // weight of per-document Dirichlet noise
  double private_mass = 0.0;   // weight of each document's private symbol
  std::size_t j = 256;         // sampled texts
  double floor = 1e-12;        // minimum probability of any symbol
};

struct SyntheticInstance {
  Matrix doc_dists;      // n x M_total, rows sum to 1
  Matrix cluster_dists;  // K x M_total
  std::vector<std::size_t> true_labels;
  std::vector<std::size_t> parent_labels;  // coarse labels for two-level instances
  std::vector<std::size_t> sampled_text_ids;
  LogProbMatrix p;

  std::size_t n_docs() const noexcept { return doc_dists.rows(); }
  std::size_t text_space() const noexcept { return doc_dists.cols(); }
};

namespace synth_detail {

inline std::vector<double> dirichlet(std::size_t dim, double concentration, Rng& rng) {
  std::gamma_distribution<double> gamma(concentration, 1.0);
  std::vector<double> v(dim);
  double z = 0.0;
  for (auto& x : v) {
    x = gamma(rng);
    z += x;
  }
  if (z <= 0.0) {
    // Every draw underflowed; fall back to a random vertex.
    std::fill(v.begin(), v.end(), 0.0);
    v[std::uniform_int_distribution<std::size_t>(0, dim - 1)(rng)] = 1.0;
    return v;
  }
  for (auto& x : v) x /= z;
  return v;
}

inline void floor_and_normalize(std::span<double> row, double floor) {
  double z = 0.0;
  for (double& x : row) {
    x = std::max(x, floor);
    z += x;
  }
  for (double& x : row) x /= z;
}

inline std::vector<double> padded(const std::vector<double>& v, std::size_t total) {
  std::vector<double> out(total, 0.0);
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

}  // namespace synth_detail

/// Mixture of the document distributions with equal weights: the exact p(Y).
inline std::vector<double> exact_prior(const SyntheticInstance& inst) {
  std::vector<double> prior(inst.text_space(), 0.0);
  for (std::size_t i = 0; i < inst.n_docs(); ++i) {
    for (std::size_t y = 0; y < prior.size(); ++y) prior[y] += inst.doc_dists(i, y);
  }
  for (double& v : prior) v /= static_cast<double>(inst.n_docs());
  return prior;
}

/// Draws texts by picking a document uniformly and then a text from it.
inline std::vector<std::size_t> sample_texts(const Matrix& doc_dists, std::size_t j, Rng& rng) {
  std::vector<std::discrete_distribution<std::size_t>> per_doc;
  per_doc.reserve(doc_dists.rows());
  for (std::size_t i = 0; i < doc_dists.rows(); ++i) {
    per_doc.emplace_back(doc_dists.row(i).begin(), doc_dists.row(i).end());
  }
  std::uniform_int_distribution<std::size_t> pick_doc(0, doc_dists.rows() - 1);
  std::vector<std::size_t> ids(j);
  for (auto& y : ids) y = per_doc[pick_doc(rng)](rng);
  return ids;
}

/// log p(y | x_i) for the given text ids.
inline Matrix log_prob_matrix(const Matrix& doc_dists, std::span<const std::size_t> text_ids) {
  Matrix out(doc_dists.rows(), text_ids.size());
  for (std::size_t i = 0; i < doc_dists.rows(); ++i) {
    for (std::size_t c = 0; c < text_ids.size(); ++c) {
      out(i, c) = std::log(doc_dists(i, text_ids[c]));
    }
  }
  return out;
}

inline void attach_samples(SyntheticInstance& inst, std::size_t j, Rng& rng) {
  inst.sampled_text_ids = sample_texts(inst.doc_dists, j, rng);
  inst.p.log_p = log_prob_matrix(inst.doc_dists, inst.sampled_text_ids);
  inst.p.doc_ids.clear();
  inst.p.text_ids.clear();
  for (std::size_t i = 0; i < inst.n_docs(); ++i) inst.p.doc_ids.push_back("d" + std::to_string(i));
  for (std::size_t y : inst.sampled_text_ids) inst.p.text_ids.push_back("y" + std::to_string(y));
}

inline void check(const SynthOptions& o) {
  require(o.k_true >= 1 && o.m >= o.k_true, "synth: need M >= K_true >= 1");
  require(o.n_docs >= o.k_true, "synth: need at least one document per cluster");
  require(o.j >= 1, "synth: J must be at least 1");
  require(o.concentration > 0.0, "synth: concentration must be positive");
  require(o.noise >= 0.0 && o.private_mass >= 0.0 && o.noise + o.private_mass <= 1.0,
          "synth: noise and private_mass must be nonnegative and sum to at most 1");
  require(o.floor > 0.0 && o.floor < 1.0, "synth: floor must lie in (0, 1)");
}

/// Flat planted instance. Documents are labeled in contiguous balanced blocks.
inline SyntheticInstance generate_instance(const SynthOptions& o, Rng& rng) {
  check(o);
  using namespace synth_detail;
  const std::size_t total = o.m + (o.private_mass > 0.0 ? o.n_docs : 0);
  SyntheticInstance inst;
  inst.cluster_dists = Matrix(o.k_true, total);
  for (std::size_t k = 0; k < o.k_true; ++k) {
    const auto d = padded(dirichlet(o.m, o.concentration, rng), total);
    std::copy(d.begin(), d.end(), inst.cluster_dists.row(k).begin());
  }
  inst.doc_dists = Matrix(o.n_docs, total);
  inst.true_labels.resize(o.n_docs);
  for (std::size_t i = 0; i < o.n_docs; ++i) {
    const std::size_t k = i * o.k_true / o.n_docs;
    inst.true_labels[i] = k;
    const auto fresh = o.noise > 0.0 ? dirichlet(o.m, o.concentration, rng)
                                     : std::vector<double>(o.m, 0.0);
    auto row = inst.doc_dists.row(i);
    const double keep = 1.0 - o.noise - o.private_mass;
    for (std::size_t y = 0; y < o.m; ++y) {
      row[y] = keep * inst.cluster_dists(k, y) + o.noise * fresh[y];
    }
    if (o.private_mass > 0.0) row[o.m + i] = o.private_mass;
  }
  for (std::size_t k = 0; k < o.k_true; ++k) floor_and_normalize(inst.cluster_dists.row(k), o.floor);
  for (std::size_t i = 0; i < o.n_docs; ++i) floor_and_normalize(inst.doc_dists.row(i), o.floor);
  attach_samples(inst, o.j, rng);
  return inst;
}

struct HierarchicalSynthOptions {
  std::size_t k_top = 2;
  std::size_t k_sub = 2;
  std::size_t docs_per_leaf = 20;
  std::size_t m = 60;
  double concentration = 0.5;
  double spread = 0.5;  // how far sub-clusters move away from their parent
  double noise = 0.05;
  std::size_t j = 512;
  double floor = 1e-12;
};

/// Two-level planted instance. `true_labels` hold the fine (leaf) clusters and
/// `parent_labels` the top-level ones; fine cluster f belongs to parent f / k_sub.
inline SyntheticInstance generate_hierarchical(const HierarchicalSynthOptions& o, Rng& rng) {
  require(o.k_top >= 1 && o.k_sub >= 1 && o.docs_per_leaf >= 1, "synth: bad hierarchy shape");
  require(o.spread >= 0.0 && o.spread <= 1.0 && o.noise >= 0.0 && o.noise <= 1.0,
          "synth: spread and noise must lie in [0, 1]");
  require(o.concentration > 0.0 && o.m >= 1 && o.j >= 1, "synth: bad text-space settings");
  using namespace synth_detail;
  const std::size_t fine = o.k_top * o.k_sub;
  SyntheticInstance inst;
  inst.cluster_dists = Matrix(fine, o.m);
  for (std::size_t t = 0; t < o.k_top; ++t) {
    const auto top = dirichlet(o.m, o.concentration, rng);
    for (std::size_t s = 0; s < o.k_sub; ++s) {
      const auto own = dirichlet(o.m, o.concentration, rng);
      auto row = inst.cluster_dists.row(t * o.k_sub + s);
      for (std::size_t y = 0; y < o.m; ++y) row[y] = (1.0 - o.spread) * top[y] + o.spread * own[y];
    }
  }
  const std::size_t n = fine * o.docs_per_leaf;
  inst.doc_dists = Matrix(n, o.m);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = i / o.docs_per_leaf;
    inst.true_labels.push_back(f);
    inst.parent_labels.push_back(f / o.k_sub);
    const auto fresh = dirichlet(o.m, o.concentration, rng);
    auto row = inst.doc_dists.row(i);
    for (std::size_t y = 0; y < o.m; ++y) {
      row[y] = (1.0 - o.noise) * inst.cluster_dists(f, y) + o.noise * fresh[y];
    }
    floor_and_normalize(row, o.floor);
  }
  for (std::size_t f = 0; f < fine; ++f) floor_and_normalize(inst.cluster_dists.row(f), o.floor);
  attach_samples(inst, o.j, rng);
  return inst;
}

/// KL[p || q] on a finite space.
inline double exact_kl(std::span<const double> p, std::span<const double> q) {
  require(p.size() == q.size() && !p.empty(), "exact_kl: size mismatch");
  const double sp = std::accumulate(p.begin(), p.end(), 0.0);
  const double sq = std::accumulate(q.begin(), q.end(), 0.0);
  require(std::abs(sp - 1.0) < 1e-9 && std::abs(sq - 1.0) < 1e-9,
          "exact_kl: inputs must sum to 1");
  double kl = 0.0;
  for (std::size_t m = 0; m < p.size(); ++m) {
    if (p[m] == 0.0) continue;
    if (q[m] <= 0.0) {
      throw Error(ErrorCode::kAbsoluteContinuity,
                  "q vanishes at symbol " + std::to_string(m) + " where p does not");
    }
    kl += p[m] * std::log(p[m] / q[m]);
  }
  return std::max(kl, 0.0);
}

struct OracleReport {
  Matrix exact_kl;         // n x K
  Matrix estimator_value;  // n x K
  double mean_abs_error = 0.0;
  double max_abs_error = 0.0;
};

/// RIS estimate of KL[p(Y|x_i) || q_k] from texts `text_ids` sampled from the
/// proposal `log_phi` (indexed by symbol), with exact q_k.
inline double ris_estimate(const SyntheticInstance& inst, std::size_t doc, std::size_t cluster,
                           std::span<const std::size_t> text_ids,
                           std::span<const double> log_phi, double alpha) {
  double acc = 0.0;
  for (std::size_t y : text_ids) {
    const double lp = std::log(inst.doc_dists(doc, y));
    const double lq = std::log(inst.cluster_dists(cluster, y));
    acc += std::exp(alpha * (lp - log_phi[y])) * (lp - lq);
  }
  return acc / static_cast<double>(text_ids.size());
}

/// Compares the RIS estimate on the instance's sampled texts with exact KL for
/// every (document, planted cluster) pair, using the exact prior as proposal.
inline OracleReport oracle_report(const SyntheticInstance& inst, double alpha) {
  const auto prior = exact_prior(inst);
  std::vector<double> log_phi(prior.size());
  for (std::size_t y = 0; y < prior.size(); ++y) log_phi[y] = std::log(prior[y]);
  const std::size_t n = inst.n_docs();
  const std::size_t k = inst.cluster_dists.rows();
  OracleReport r{Matrix(n, k), Matrix(n, k)};
  double sum_err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      r.exact_kl(i, c) = exact_kl(inst.doc_dists.row(i), inst.cluster_dists.row(c));
      r.estimator_value(i, c) =
          ris_estimate(inst, i, c, inst.sampled_text_ids, log_phi, alpha);
      const double err = std::abs(r.estimator_value(i, c) - r.exact_kl(i, c));
      sum_err += err;
      r.max_abs_error = std::max(r.max_abs_error, err);
    }
  }
  r.mean_abs_error = sum_err / static_cast<double>(n * k);
  return r;
}

struct SweepCell {
  double alpha = 0.0;
  std::size_t j = 0;
  double mean_bias = 0.0;      // mean over pairs of (mean estimate - exact KL)
  double mean_variance = 0.0;  // mean over pairs of the across-trial variance
  double rmse = 0.0;           // over pairs and trials
};

/// For each (alpha, J) draws `trials` fresh text sets from the exact prior and
/// summarizes the RIS estimator against exact KL over all (document, cluster)
/// pairs. Trial t uses an RNG seeded from (seed, t), so results do not depend
/// on `threads`.
inline std::vector<SweepCell> estimator_error_sweep(const SyntheticInstance& inst,
                                                    std::span<const double> alphas,
                                                    std::span<const std::size_t> js,
                                                    std::size_t trials, std::uint64_t seed,
                                                    std::size_t threads = 1) {
  require(trials >= 2, "sweep needs at least 2 trials");
  const auto prior = exact_prior(inst);
  std::vector<double> log_phi(prior.size());
  for (std::size_t y = 0; y < prior.size(); ++y) log_phi[y] = std::log(prior[y]);
  const std::size_t n = inst.n_docs();
  const std::size_t k = inst.cluster_dists.rows();
  Matrix exact(n, k);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < k; ++c) {
      exact(i, c) = exact_kl(inst.doc_dists.row(i), inst.cluster_dists.row(c));
    }
  }
  std::discrete_distribution<std::size_t> draw(prior.begin(), prior.end());
  std::vector<SweepCell> cells;
  for (double alpha : alphas) {
    for (std::size_t j : js) {
      // estimates[t] is an n x K matrix for trial t.
      std::vector<Matrix> estimates(trials);
      parallel_for(trials, threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
          std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                            static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(j)};
          Rng rng(seq);
          auto local = draw;
          std::vector<std::size_t> ids(j);
          for (auto& y : ids) y = local(rng);
          Matrix est(n, k);
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < k; ++c) est(i, c) = ris_estimate(inst, i, c, ids, log_phi, alpha);
          }
          estimates[t] = std::move(est);
        }
      });
      SweepCell cell{alpha, j};
      double sq_err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < k; ++c) {
          double mean = 0.0;
          for (const auto& e : estimates) mean += e(i, c);
          mean /= static_cast<double>(trials);
          double var = 0.0;
          for (const auto& e : estimates) {
            const double d = e(i, c) - mean;
            var += d * d;
            const double err = e(i, c) - exact(i, c);
            sq_err += err * err;
          }
          cell.mean_variance += var / static_cast<double>(trials - 1);
          cell.mean_bias += mean - exact(i, c);
        }
      }
      const double pairs = static_cast<double>(n * k);
      cell.mean_bias /= pairs;
      cell.mean_variance /= pairs;
      cell.rmse = std::sqrt(sq_err / (pairs * static_cast<double>(trials)));
      cells.push_back(cell);
    }
  }
  return cells;
}

/// Exact second moment of the regularized importance weights,
///   M(phi) = (1/n) sum_x sum_y phi(y) * (p(y|x) / phi(y))^(2 alpha),
/// for a proposal over the whole finite space.
inline double second_moment(const Proposal& phi, const SyntheticInstance& inst, double alpha) {
  require(phi.size() == inst.text_space(), "second_moment: proposal must cover the text space");
  double total = 0.0;
  for (std::size_t i = 0; i < inst.n_docs(); ++i) {
    double row = 0.0;
    for (std::size_t y = 0; y < phi.size(); ++y) {
      const double lp = std::log(inst.doc_dists(i, y));
      row += std::exp(phi.log_phi[y] + 2.0 * alpha * (lp - phi.log_phi[y]));
    }
    total += row;
  }
  return total / static_cast<double>(inst.n_docs());
}

/// The power-mean proposal over the full finite space, renormalized to sum 1.
inline Proposal optimal_proposal(const SyntheticInstance& inst, double alpha) {
  Matrix log_dists(inst.n_docs(), inst.text_space());
  for (std::size_t i = 0; i < inst.n_docs(); ++i) {
    for (std::size_t y = 0; y < inst.text_space(); ++y) {
      log_dists(i, y) = std::log(inst.doc_dists(i, y));
    }
  }
  Proposal phi = estimate_proposal(log_dists, alpha);
  const double log_z = logsumexp(phi.log_phi);
  for (double& v : phi.log_phi) v -= log_z;
  return phi;
}

}  // namespace gckit
