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

// Hierarchical clustering for prefix-code document indexes.
//
// Each internal node re-estimates the proposal on its own documents, resamples
// the globally sampled texts toward that localized proposal, and clusters its
// documents on the resampled columns. Leaves assign within-leaf ordinals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gckit/engine.hpp"
#include "gckit/error.hpp"
#include "gckit/matrix.hpp"
#include "gckit/preprocess.hpp"

namespace gckit {

struct ResampleWeights {
  std::vector<double> r;
  std::vector<double> normalized_r;
};

/// r_j = (phi_local_j / phi_j)^alpha. Normalization is done with a max shift,
/// so only a fully underflowed (non-finite) input is an error.
inline ResampleWeights resample_weights(const Proposal& phi, const Proposal& phi_local,
                                        double alpha) {
  require(phi.size() == phi_local.size() && phi.size() > 0,
          "resample_weights: proposals cover different text sets");
  const std::size_t n = phi.size();
  std::vector<double> log_r(n);
  for (std::size_t j = 0; j < n; ++j) {
    log_r[j] = alpha * (phi_local.log_phi[j] - phi.log_phi[j]);
  }
  const double hi = *std::max_element(log_r.begin(), log_r.end());
  if (!std::isfinite(hi)) {
    throw Error(ErrorCode::kUnderflow, "all resampling weights vanish");
  }
  ResampleWeights out{std::vector<double>(n), std::vector<double>(n)};
  double z = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    out.r[j] = std::exp(log_r[j]);
    out.normalized_r[j] = std::exp(log_r[j] - hi);
    z += out.normalized_r[j];
  }
  for (double& v : out.normalized_r) v /= z;
  return out;
}

/// `count` i.i.d. column indices drawn from Categorical(normalized_r).
inline std::vector<std::size_t> bootstrap_texts(const ResampleWeights& weights,
                                                std::size_t count, Rng& rng) {
  std::discrete_distribution<std::size_t> pick(weights.normalized_r.begin(),
                                               weights.normalized_r.end());
  std::vector<std::size_t> out(count);
  for (auto& c : out) c = pick(rng);
  return out;
}

inline Matrix select_submatrix(const Matrix& m, std::span<const std::size_t> rows,
                               std::span<const std::size_t> cols) {
  Matrix out(rows.size(), cols.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) out(r, c) = m(rows[r], cols[c]);
  }
  return out;
}

struct SubsetRun {
  RunResult run;                     // labels index into `rows` order
  std::vector<std::size_t> columns;  // resampled text indices, with repeats
  Proposal local_phi;
};

/// Clusters the documents `rows` of an already clipped matrix. `sampling_phi`
/// is the proposal the columns of `log_p` were drawn from. With
/// `localized = false` the sampling proposal is reused, which makes the
/// resampling uniform.
inline SubsetRun cluster_subset(const Matrix& log_p, std::span<const std::size_t> rows,
                                const Params& params, const Proposal& sampling_phi,
                                Rng& rng, bool localized = true) {
  require(rows.size() >= params.k, "cluster_subset: fewer documents than clusters");
  SubsetRun out;
  out.local_phi = localized ? make_proposal(log_p, rows, params) : sampling_phi;
  const ResampleWeights r = resample_weights(sampling_phi, out.local_phi, params.alpha);
  const std::size_t n_samples = params.n_samples == 0 ? log_p.cols() : params.n_samples;
  out.columns = bootstrap_texts(r, n_samples, rng);

  const Matrix sub_log_p = select_submatrix(log_p, rows, out.columns);
  Proposal sub_phi{std::vector<double>(out.columns.size())};
  for (std::size_t c = 0; c < out.columns.size(); ++c) {
    sub_phi.log_phi[c] = out.local_phi.log_phi[out.columns[c]];
  }
  const WeightMatrix sub_w = compute_weights(sub_log_p, sub_phi, params.alpha, params.threads);

  Params inner = params;
  inner.seed = rng();
  out.run = run_best_of(sub_log_p, sub_w, inner);
  return out;
}

struct HierNode {
  std::size_t depth = 0;
  std::vector<std::size_t> path;      // child indices from the root
  std::vector<std::size_t> doc_rows;  // ascending
  std::vector<HierNode> children;     // ordered by cluster index
  bool is_leaf = true;
};

struct TreeOptions {
  std::size_t leaf_threshold = 0;  // 0 means K
  bool localized_phi = true;
};

/// Deterministic per-node stream from the run seed and the node path.
inline Rng node_rng(std::uint64_t seed, std::span<const std::size_t> path) {
  std::vector<std::uint32_t> material{
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
      static_cast<std::uint32_t>(path.size())};
  for (std::size_t p : path) material.push_back(static_cast<std::uint32_t>(p));
  std::seed_seq seq(material.begin(), material.end());
  return Rng(seq);
}

namespace hierarchy_detail {

inline void grow(HierNode& node, const Matrix& log_p, const Params& params,
                 const Proposal& sampling_phi, std::size_t leaf_size, bool localized) {
  if (node.doc_rows.size() <= leaf_size) {
    node.is_leaf = true;
    return;
  }
  Rng rng = node_rng(params.seed, node.path);
  const SubsetRun sub =
      cluster_subset(log_p, node.doc_rows, params, sampling_phi, rng, localized);
  node.is_leaf = false;
  node.children.resize(params.k);
  for (std::size_t c = 0; c < params.k; ++c) {
    HierNode& child = node.children[c];
    child.depth = node.depth + 1;
    child.path = node.path;
    child.path.push_back(c);
  }
  const auto& labels = sub.run.assignment.labels;
  for (std::size_t r = 0; r < node.doc_rows.size(); ++r) {
    node.children[labels[r]].doc_rows.push_back(node.doc_rows[r]);
  }
  for (auto& child : node.children) {
    grow(child, log_p, params, sampling_phi, leaf_size, localized);
  }
}

}  // namespace hierarchy_detail

/// Clips `log_p` (when enabled), estimates the global proposal, and recurses
/// until nodes hold at most max(leaf_threshold, K) documents.
inline HierNode build_tree(const Matrix& log_p, const Params& params,
                           const TreeOptions& options = {}) {
  validate(params, log_p.rows());
  require(params.k >= 2, "hierarchical clustering needs K >= 2");
  const std::size_t leaf_threshold =
      options.leaf_threshold == 0 ? params.k : options.leaf_threshold;
  const Matrix clipped =
      params.clip ? clip_log_probs(log_p, params.clip_sigmas, params.threads).log_p : log_p;
  const Proposal phi = make_proposal(clipped, params);
  HierNode root;
  root.doc_rows = all_rows(log_p.rows());
  hierarchy_detail::grow(root, clipped, params, phi, std::max(leaf_threshold, params.k),
                         options.localized_phi);
  return root;
}

struct PrefixCode {
  std::size_t row = 0;
  std::vector<std::size_t> code;  // cluster digits, then the within-leaf ordinal
};

/// Codes indexed by document row.
inline std::vector<PrefixCode> assign_prefix_codes(const HierNode& root) {
  std::vector<PrefixCode> codes;
  auto visit = [&](auto&& self, const HierNode& node) -> void {
    if (node.is_leaf) {
      std::vector<std::size_t> members = node.doc_rows;
      std::sort(members.begin(), members.end());
      for (std::size_t ord = 0; ord < members.size(); ++ord) {
        PrefixCode pc{members[ord], node.path};
        pc.code.push_back(ord);
        codes.push_back(std::move(pc));
      }
      return;
    }
    for (const auto& child : node.children) self(self, child);
  };
  visit(visit, root);
  std::sort(codes.begin(), codes.end(),
            [](const PrefixCode& a, const PrefixCode& b) { return a.row < b.row; });
  return codes;
}

struct TreeStats {
  std::size_t nodes = 0;
  std::size_t leaves = 0;
  std::size_t max_depth = 0;
  std::size_t largest_leaf = 0;
};

inline TreeStats tree_stats(const HierNode& root) {
  TreeStats s;
  auto visit = [&](auto&& self, const HierNode& node) -> void {
    ++s.nodes;
    s.max_depth = std::max(s.max_depth, node.depth);
    if (node.is_leaf) {
      ++s.leaves;
      s.largest_leaf = std::max(s.largest_leaf, node.doc_rows.size());
    }
    for (const auto& child : node.children) self(self, child);
  };
  visit(visit, root);
  return s;
}

}  // namespace gckit
