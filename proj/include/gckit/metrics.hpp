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

// External clustering metrics: accuracy under the best label matching,
// normalized mutual information (geometric-mean normalization) and the
// adjusted Rand index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gckit/error.hpp"
#include "gckit/matrix.hpp"

namespace gckit {

enum class AssignMode { kMin, kMax };

struct Matching {
  // row_to_col[r] is the column matched to row r, or -1 when unmatched.
  std::vector<std::ptrdiff_t> row_to_col;
  double objective = 0.0;
};

/// Optimal rectangular assignment by shortest augmenting paths with dual
/// potentials (Jonker-Volgenant / Crouse). min(R, C) pairs are matched.
template <typename T>
Matching linear_assignment(const BasicMatrix<T>& cost, AssignMode mode = AssignMode::kMin) {
  if (cost.rows() == 0 || cost.cols() == 0) {
    throw Error(ErrorCode::kInvalidArgument, "linear_assignment: empty cost matrix");
  }
  for (const T& v : cost.data()) {
    if (!std::isfinite(static_cast<double>(v))) {
      throw Error(ErrorCode::kNonFinite, "linear_assignment: non-finite cost");
    }
  }
  const bool transpose = cost.rows() > cost.cols();
  const std::size_t nr = transpose ? cost.cols() : cost.rows();
  const std::size_t nc = transpose ? cost.rows() : cost.cols();
  const double sign = mode == AssignMode::kMax ? -1.0 : 1.0;
  auto c = [&](std::size_t i, std::size_t j) {
    return sign * static_cast<double>(transpose ? cost(j, i) : cost(i, j));
  };

  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> u(nr, 0.0), v(nc, 0.0), shortest(nc);
  std::vector<std::ptrdiff_t> path(nc, -1), col4row(nr, -1), row4col(nc, -1);
  std::vector<bool> seen_row(nr), seen_col(nc);
  std::vector<std::size_t> remaining(nc);

  for (std::size_t cur = 0; cur < nr; ++cur) {
    double min_val = 0.0;
    std::size_t i = cur;
    std::size_t n_remaining = nc;
    for (std::size_t it = 0; it < nc; ++it) remaining[it] = nc - it - 1;
    std::fill(seen_row.begin(), seen_row.end(), false);
    std::fill(seen_col.begin(), seen_col.end(), false);
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::ptrdiff_t sink = -1;
    while (sink == -1) {
      std::size_t index = 0;
      double lowest = kInf;
      bool found = false;
      seen_row[i] = true;
      for (std::size_t it = 0; it < n_remaining; ++it) {
        const std::size_t j = remaining[it];
        const double r = min_val + c(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          path[j] = static_cast<std::ptrdiff_t>(i);
          shortest[j] = r;
        }
        if (!found || shortest[j] < lowest || (shortest[j] == lowest && row4col[j] == -1)) {
          lowest = shortest[j];
          index = it;
          found = true;
        }
      }
      min_val = lowest;
      const std::size_t j = remaining[index];
      if (row4col[j] == -1) {
        sink = static_cast<std::ptrdiff_t>(j);
      } else {
        i = static_cast<std::size_t>(row4col[j]);
      }
      seen_col[j] = true;
      remaining[index] = remaining[--n_remaining];
    }
    u[cur] += min_val;
    for (std::size_t r = 0; r < nr; ++r) {
      if (seen_row[r] && r != cur) {
        u[r] += min_val - shortest[static_cast<std::size_t>(col4row[r])];
      }
    }
    for (std::size_t j = 0; j < nc; ++j) {
      if (seen_col[j]) v[j] -= min_val - shortest[j];
    }
    auto j = static_cast<std::size_t>(sink);
    while (true) {
      const auto r = static_cast<std::size_t>(path[j]);
      row4col[j] = static_cast<std::ptrdiff_t>(r);
      const std::ptrdiff_t prev = col4row[r];
      col4row[r] = static_cast<std::ptrdiff_t>(j);
      if (r == cur) break;
      j = static_cast<std::size_t>(prev);
    }
  }

  Matching m;
  m.row_to_col.assign(cost.rows(), -1);
  for (std::size_t r = 0; r < nr; ++r) {
    const auto col = static_cast<std::size_t>(col4row[r]);
    if (transpose) {
      m.row_to_col[col] = static_cast<std::ptrdiff_t>(r);
    } else {
      m.row_to_col[r] = static_cast<std::ptrdiff_t>(col);
    }
  }
  for (std::size_t r = 0; r < cost.rows(); ++r) {
    if (m.row_to_col[r] >= 0) {
      m.objective += static_cast<double>(cost(r, static_cast<std::size_t>(m.row_to_col[r])));
    }
  }
  return m;
}

/// Counts of co-occurring (truth, pred) labels. Label values are mapped to
/// contiguous indices in ascending order.
struct ContingencyTable {
  BasicMatrix<std::int64_t> counts;
  std::vector<std::int64_t> row_sums;
  std::vector<std::int64_t> col_sums;
  std::int64_t n = 0;
};

template <typename Label>
ContingencyTable contingency(std::span<const Label> truth, std::span<const Label> pred) {
  if (truth.size() != pred.size()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "labelings differ in length (" + std::to_string(truth.size()) + " vs " +
                    std::to_string(pred.size()) + ")");
  }
  require(!truth.empty(), "labelings must be nonempty");
  auto index_of = [](std::span<const Label> labels) {
    std::map<Label, std::size_t> idx;
    for (const Label& l : labels) idx.emplace(l, 0);
    std::size_t next = 0;
    for (auto& [label, i] : idx) i = next++;
    return idx;
  };
  const auto ti = index_of(truth);
  const auto pi = index_of(pred);
  ContingencyTable t;
  t.counts = BasicMatrix<std::int64_t>(ti.size(), pi.size(), 0);
  t.row_sums.assign(ti.size(), 0);
  t.col_sums.assign(pi.size(), 0);
  for (std::size_t s = 0; s < truth.size(); ++s) {
    const std::size_t r = ti.at(truth[s]);
    const std::size_t c = pi.at(pred[s]);
    ++t.counts(r, c);
    ++t.row_sums[r];
    ++t.col_sums[c];
  }
  t.n = static_cast<std::int64_t>(truth.size());
  return t;
}

/// Fraction of documents correctly labeled under the best one-to-one mapping
/// of predicted to true labels.
template <typename Label>
double accuracy(std::span<const Label> truth, std::span<const Label> pred) {
  const ContingencyTable t = contingency(truth, pred);
  const Matching m = linear_assignment(t.counts, AssignMode::kMax);
  return m.objective / static_cast<double>(t.n);
}

namespace metrics_detail {

inline double entropy(std::span<const std::int64_t> sums, std::int64_t n) {
  double h = 0.0;
  for (std::int64_t s : sums) {
    if (s == 0) continue;
    const double p = static_cast<double>(s) / static_cast<double>(n);
    h -= p * std::log(p);
  }
  return h;
}

inline bool same_partition(const ContingencyTable& t) {
  if (t.counts.rows() != t.counts.cols()) return false;
  for (std::size_t r = 0; r < t.counts.rows(); ++r) {
    std::size_t nonzero = 0;
    for (std::size_t c = 0; c < t.counts.cols(); ++c) nonzero += t.counts(r, c) != 0;
    if (nonzero != 1) return false;
  }
  return true;
}

inline double choose2(std::int64_t x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

}  // namespace metrics_detail

/// MI / sqrt(H(truth) * H(pred)). Degenerate single-cluster labelings score
/// 1 when both partitions coincide and 0 otherwise.
template <typename Label>
double nmi(std::span<const Label> truth, std::span<const Label> pred) {
  const ContingencyTable t = contingency(truth, pred);
  const double ht = metrics_detail::entropy(t.row_sums, t.n);
  const double hp = metrics_detail::entropy(t.col_sums, t.n);
  if (ht == 0.0 || hp == 0.0) return metrics_detail::same_partition(t) ? 1.0 : 0.0;
  const double n = static_cast<double>(t.n);
  double mi = 0.0;
  for (std::size_t r = 0; r < t.counts.rows(); ++r) {
    for (std::size_t c = 0; c < t.counts.cols(); ++c) {
      const auto nrc = t.counts(r, c);
      if (nrc == 0) continue;
      const double joint = static_cast<double>(nrc);
      mi += joint / n *
            std::log(joint * n / (static_cast<double>(t.row_sums[r]) *
                                  static_cast<double>(t.col_sums[c])));
    }
  }
  return std::clamp(mi / std::sqrt(ht * hp), 0.0, 1.0);
}

/// Hubert-Arabie adjusted Rand index from pair counts.
template <typename Label>
double ari(std::span<const Label> truth, std::span<const Label> pred) {
  const ContingencyTable t = contingency(truth, pred);
  require(t.n >= 2, "ARI needs at least 2 items");
  double index = 0.0;
  for (const auto v : t.counts.data()) index += metrics_detail::choose2(v);
  double sum_rows = 0.0;
  double sum_cols = 0.0;
  for (const auto v : t.row_sums) sum_rows += metrics_detail::choose2(v);
  for (const auto v : t.col_sums) sum_cols += metrics_detail::choose2(v);
  const double expected = sum_rows * sum_cols / metrics_detail::choose2(t.n);
  const double max_index = 0.5 * (sum_rows + sum_cols);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

struct Scores {
  double acc = 0.0;
  double nmi = 0.0;
  double ari = 0.0;
};

template <typename Label>
Scores evaluate(std::span<const Label> truth, std::span<const Label> pred) {
  return {accuracy(truth, pred), nmi(truth, pred), ari(truth, pred)};
}

// Vector conveniences; spans of const Label do not deduce from vectors.
template <typename Label>
double accuracy(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  return accuracy(std::span<const Label>(truth), std::span<const Label>(pred));
}
template <typename Label>
double nmi(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  return nmi(std::span<const Label>(truth), std::span<const Label>(pred));
}
template <typename Label>
double ari(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  return ari(std::span<const Label>(truth), std::span<const Label>(pred));
}
template <typename Label>
Scores evaluate(const std::vector<Label>& truth, const std::vector<Label>& pred) {
  return evaluate(std::span<const Label>(truth), std::span<const Label>(pred));
}

}  // namespace gckit
