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

// Preprocessing of the log-probability matrix: outlier clipping, proposal
// estimation and regularized importance weights. Everything stays in the log
// domain until the final exponentiation of the weights.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "gckit/error.hpp"
#include "gckit/matrix.hpp"
#include "gckit/parallel.hpp"

namespace gckit {

/// log(sum(exp(x))) with max shifting; -inf for an empty range.
template <typename Range>
double logsumexp(const Range& xs) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : xs) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double acc = 0.0;
  for (double x : xs) acc += std::exp(x - hi);
  return hi + std::log(acc);
}

inline ColumnStats column_stats(const Matrix& log_p, std::size_t threads = 1) {
  const std::size_t n = log_p.rows();
  const std::size_t cols = log_p.cols();
  ColumnStats s{std::vector<double>(cols), std::vector<double>(cols)};
  parallel_for(cols, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      double sum = 0.0;
      for (std::size_t i = 0; i < n; ++i) sum += log_p(i, j);
      const double mu = sum / static_cast<double>(n);
      double ss = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = log_p(i, j) - mu;
        ss += d * d;
      }
      s.mu[j] = mu;
      s.sigma[j] = std::sqrt(ss / static_cast<double>(n));
    }
  });
  return s;
}

struct ClipResult {
  Matrix log_p;
  std::size_t clipped_count = 0;
};

/// Resets every entry above mu_j + clip_sigmas * sigma_j to that threshold.
/// The column statistics are taken once, over all entries including outliers.
inline ClipResult clip_log_probs(const Matrix& log_p, double clip_sigmas,
                                 std::size_t threads = 1) {
  require(clip_sigmas > 0.0, "clip_sigmas must be positive");
  const ColumnStats stats = column_stats(log_p, threads);
  ClipResult out{log_p, 0};
  std::vector<std::size_t> per_column(log_p.cols(), 0);
  parallel_for(log_p.cols(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const double threshold = stats.mu[j] + clip_sigmas * stats.sigma[j];
      for (std::size_t i = 0; i < log_p.rows(); ++i) {
        if (out.log_p(i, j) > threshold) {
          out.log_p(i, j) = threshold;
          ++per_column[j];
        }
      }
    }
  });
  out.clipped_count = std::accumulate(per_column.begin(), per_column.end(), std::size_t{0});
  return out;
}

/// Power-mean proposal over the given rows:
///   log phi_j = (logsumexp_i(2 alpha log P_ij) - log m) / (2 alpha).
inline Proposal estimate_proposal(const Matrix& log_p, double alpha,
                                  std::span<const std::size_t> rows,
                                  std::size_t threads = 1) {
  require(alpha > 0.0, "alpha must be positive for the power-mean proposal");
  require(!rows.empty(), "proposal row subset must be nonempty");
  for (std::size_t r : rows) require(r < log_p.rows(), "proposal row index out of range");
  const double two_alpha = 2.0 * alpha;
  const double log_m = std::log(static_cast<double>(rows.size()));
  Proposal phi{std::vector<double>(log_p.cols())};
  parallel_for(log_p.cols(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> scaled(rows.size());
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t r = 0; r < rows.size(); ++r) {
        scaled[r] = two_alpha * log_p(rows[r], j);
      }
      phi.log_phi[j] = (logsumexp(scaled) - log_m) / two_alpha;
    }
  });
  return phi;
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

inline Proposal estimate_proposal(const Matrix& log_p, double alpha,
                                  std::size_t threads = 1) {
  const auto rows = all_rows(log_p.rows());
  return estimate_proposal(log_p, alpha, rows, threads);
}

/// Column mean of the probabilities, the plain estimate of p(y_j).
inline Proposal naive_proposal(const Matrix& log_p, std::size_t threads = 1) {
  const double log_n = std::log(static_cast<double>(log_p.rows()));
  Proposal phi{std::vector<double>(log_p.cols())};
  parallel_for(log_p.cols(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> col(log_p.rows());
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t i = 0; i < log_p.rows(); ++i) col[i] = log_p(i, j);
      phi.log_phi[j] = logsumexp(col) - log_n;
    }
  });
  return phi;
}

/// W_ij = exp(alpha * (log P_ij - log phi_j)).
inline WeightMatrix compute_weights(const Matrix& log_p, const Proposal& phi,
                                    double alpha, std::size_t threads = 1) {
  require(phi.size() == log_p.cols(), "proposal length does not match matrix width");
  require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
  WeightMatrix w(log_p.rows(), log_p.cols());
  parallel_for(log_p.rows(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < log_p.cols(); ++j) {
        const double v = std::exp(alpha * (log_p(i, j) - phi.log_phi[j]));
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::kOverflow, "weight (" + std::to_string(i) + "," +
                                                std::to_string(j) + ") is not finite");
        }
        if (v <= 0.0) {
          throw Error(ErrorCode::kUnderflow, "weight (" + std::to_string(i) + "," +
                                                 std::to_string(j) + ") underflows to zero");
        }
        w(i, j) = v;
      }
    }
  });
  return w;
}

/// Output of the full preprocessing chain: clip, then proposal, then weights.
struct Preprocessed {
  Matrix log_p;
  std::size_t clipped_count = 0;
  Proposal phi;
  WeightMatrix weights;
};

/// Column mean of the probabilities over a subset of rows.
inline Proposal naive_proposal(const Matrix& log_p, std::span<const std::size_t> rows,
                               std::size_t threads = 1) {
  require(!rows.empty(), "proposal row subset must be nonempty");
  const double log_m = std::log(static_cast<double>(rows.size()));
  Proposal phi{std::vector<double>(log_p.cols())};
  parallel_for(log_p.cols(), threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> col(rows.size());
    for (std::size_t j = begin; j < end; ++j) {
      for (std::size_t r = 0; r < rows.size(); ++r) col[r] = log_p(rows[r], j);
      phi.log_phi[j] = logsumexp(col) - log_m;
    }
  });
  return phi;
}

/// The proposal selected by `params`, estimated on `rows`. With alpha = 0 the
/// weights do not depend on the proposal, so the naive estimate stands in for
/// the undefined power mean.
inline Proposal make_proposal(const Matrix& log_p, std::span<const std::size_t> rows,
                              const Params& params) {
  if (params.proposal == ProposalMethod::kNaive || params.alpha == 0.0) {
    return naive_proposal(log_p, rows, params.threads);
  }
  return estimate_proposal(log_p, params.alpha, rows, params.threads);
}

inline Proposal make_proposal(const Matrix& log_p, const Params& params) {
  return make_proposal(log_p, all_rows(log_p.rows()), params);
}

inline Preprocessed preprocess(const Matrix& log_p, const Params& params) {
  Preprocessed out;
  if (params.clip) {
    auto clipped = clip_log_probs(log_p, params.clip_sigmas, params.threads);
    out.log_p = std::move(clipped.log_p);
    out.clipped_count = clipped.clipped_count;
  } else {
    out.log_p = log_p;
  }
  out.phi = make_proposal(out.log_p, params);
  out.weights = compute_weights(out.log_p, out.phi, params.alpha, params.threads);
  return out;
}

}  // namespace gckit
