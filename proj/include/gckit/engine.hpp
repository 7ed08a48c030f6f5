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

// Hard clustering of documents under the regularized importance-sampled KL
// distortion
//
//   d(i, k) = (1/J) * sum_j W_ij * (log P_ij - log c_k(j)),
//
// with centroids c_k kept as probability vectors over the J sampled texts.
// The assignment and centroid steps alternate until the total distortion
// stops improving.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gckit/error.hpp"
#include "gckit/matrix.hpp"
#include "gckit/parallel.hpp"
#include "gckit/preprocess.hpp"

namespace gckit {

using Rng = std::mt19937_64;

/// K probability vectors over the sampled texts, one per row.
struct CentroidSet {
  Matrix centroids;

  std::size_t k() const noexcept { return centroids.rows(); }
  std::span<const double> operator[](std::size_t k) const { return centroids.row(k); }
};

struct Assignment {
  std::vector<std::size_t> labels;
  std::vector<double> per_doc_distortion;
  double total_distortion = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

struct RunResult {
  Assignment assignment;
  CentroidSet centroids;
  std::uint64_t seed = 0;
  // Total distortion after each centroid update.
  std::vector<double> history;
};

// ---------------------------------------------------------------------------
// Distortion

/// Kernel on one document row against precomputed log centroid entries.
inline double distortion_row(std::span<const double> log_p_row,
                             std::span<const double> w_row,
                             std::span<const double> log_c) {
  double acc = 0.0;
  for (std::size_t j = 0; j < log_p_row.size(); ++j) {
    acc += w_row[j] * (log_p_row[j] - log_c[j]);
  }
  return acc / static_cast<double>(log_p_row.size());
}

/// RIS estimate of KL[p(Y|x_i) || c]; may be negative.
inline double distortion_row(std::size_t i, std::span<const double> centroid,
                             const Matrix& log_p, const Matrix& w) {
  require(centroid.size() == log_p.cols() && w.cols() == log_p.cols() &&
              w.rows() == log_p.rows() && i < log_p.rows(),
          "distortion_row: dimensions disagree");
  double acc = 0.0;
  for (std::size_t j = 0; j < centroid.size(); ++j) {
    const double wij = w(i, j);
    if (centroid[j] <= 0.0) {
      if (wij > 0.0) {
        throw Error(ErrorCode::kLogOfZero, "centroid entry " + std::to_string(j) +
                                               " is zero where document " +
                                               std::to_string(i) + " has weight");
      }
      continue;
    }
    acc += wij * (log_p(i, j) - std::log(centroid[j]));
  }
  return acc / static_cast<double>(centroid.size());
}

inline Matrix log_centroids(const CentroidSet& c) {
  Matrix out(c.k(), c.centroids.cols());
  for (std::size_t k = 0; k < c.k(); ++k) {
    for (std::size_t j = 0; j < out.cols(); ++j) {
      out(k, j) = std::log(c.centroids(k, j));
    }
  }
  return out;
}

struct AssignStep {
  std::vector<std::size_t> labels;
  std::vector<double> distortion;
};

/// Closest centroid per document; ties go to the lowest cluster index.
inline AssignStep assign_all(const Matrix& log_p, const Matrix& w,
                             const CentroidSet& centroids, std::size_t threads = 1) {
  require(centroids.k() >= 1 && centroids.centroids.cols() == log_p.cols(),
          "assign_all: centroid dimensions disagree");
  const std::size_t n = log_p.rows();
  for (std::size_t k = 0; k < centroids.k(); ++k) {
    for (std::size_t j = 0; j < log_p.cols(); ++j) {
      if (centroids.centroids(k, j) <= 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
          if (w(i, j) > 0.0) {
            throw Error(ErrorCode::kLogOfZero,
                        "centroid " + std::to_string(k) + " entry " +
                            std::to_string(j) + " is zero");
          }
        }
      }
    }
  }
  const Matrix log_c = log_centroids(centroids);
  AssignStep out{std::vector<std::size_t>(n), std::vector<double>(n)};
  parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < centroids.k(); ++k) {
        const double d = distortion_row(log_p.row(i), w.row(i), log_c.row(k));
        if (d < best_d) {
          best_d = d;
          best = k;
        }
      }
      out.labels[i] = best;
      out.distortion[i] = best_d;
    }
  });
  return out;
}

/// Sum of per-document distortions for a labeling, accumulated in row order.
inline double total_distortion(const Matrix& log_p, const Matrix& w,
                               std::span<const std::size_t> labels,
                               const CentroidSet& centroids,
                               std::vector<double>* per_doc = nullptr,
                               std::size_t threads = 1) {
  const Matrix log_c = log_centroids(centroids);
  std::vector<double> d(labels.size());
  parallel_for(labels.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      d[i] = distortion_row(log_p.row(i), w.row(i), log_c.row(labels[i]));
    }
  });
  const double total = std::accumulate(d.begin(), d.end(), 0.0);
  if (per_doc != nullptr) *per_doc = std::move(d);
  return total;
}

// ---------------------------------------------------------------------------
// Centroids

inline std::vector<double> normalized_row(std::span<const double> row) {
  const double z = std::accumulate(row.begin(), row.end(), 0.0);
  std::vector<double> out(row.begin(), row.end());
  for (double& v : out) v /= z;
  return out;
}

inline CentroidSet centroids_from_rows(const Matrix& w, std::span<const std::size_t> rows) {
  CentroidSet c{Matrix(rows.size(), w.cols())};
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto v = normalized_row(w.row(rows[k]));
    std::copy(v.begin(), v.end(), c.centroids.row(k).begin());
  }
  return c;
}

/// Centroid k is the column sum of W over the members of k, normalized to 1.
/// Every cluster must have at least one member.
inline CentroidSet update_centroids(const Matrix& w, std::span<const std::size_t> labels,
                                    std::size_t k, std::size_t threads = 1) {
  require(labels.size() == w.rows(), "update_centroids: label count disagrees with W");
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t l : labels) {
    require(l < k, "update_centroids: label out of range");
    ++counts[l];
  }
  for (std::size_t c = 0; c < k; ++c) {
    require(counts[c] > 0, "update_centroids: cluster " + std::to_string(c) + " is empty");
  }
  CentroidSet out{Matrix(k, w.cols(), 0.0)};
  // Columns are independent; within a column rows are summed in ascending order.
  parallel_for(w.cols(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = 0; i < w.rows(); ++i) {
      for (std::size_t j = begin; j < end; ++j) out.centroids(labels[i], j) += w(i, j);
    }
  });
  for (std::size_t c = 0; c < k; ++c) {
    auto row = out.centroids.row(c);
    const double z = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v /= z;
  }
  return out;
}

/// Gives every empty cluster the member with the largest distortion taken from
/// a cluster that can spare one. Returns the number of repairs made.
inline std::size_t repair_empty_clusters(std::vector<std::size_t>& labels,
                                         std::span<const double> distortion,
                                         std::size_t k) {
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t l : labels) ++counts[l];
  std::vector<bool> moved(labels.size(), false);
  std::size_t repairs = 0;
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] > 0) continue;
    std::size_t pick = labels.size();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (moved[i] || counts[labels[i]] < 2) continue;
      if (pick == labels.size() || distortion[i] > distortion[pick]) pick = i;
    }
    if (pick == labels.size()) {
      throw Error(ErrorCode::kInvalidArgument, "cannot repair empty cluster: K exceeds documents");
    }
    --counts[labels[pick]];
    labels[pick] = c;
    counts[c] = 1;
    moved[pick] = true;
    ++repairs;
  }
  return repairs;
}

// ---------------------------------------------------------------------------
// Initialization

/// K distinct row indices drawn uniformly without replacement.
inline std::vector<std::size_t> sample_rows_uniform(std::size_t n, std::size_t k, Rng& rng) {
  require(k <= n, "cannot pick " + std::to_string(k) + " distinct rows out of " +
                      std::to_string(n));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t a = 0; a < k; ++a) {
    std::uniform_int_distribution<std::size_t> pick(a, n - 1);
    std::swap(idx[a], idx[pick(rng)]);
  }
  idx.resize(k);
  return idx;
}

inline CentroidSet init_random(const Matrix& w, std::size_t k, Rng& rng) {
  const auto rows = sample_rows_uniform(w.rows(), k, rng);
  return centroids_from_rows(w, rows);
}

/// Unnormalized k-means++ selection weights. Distances are shifted so the
/// smallest is zero, then squared; already chosen rows get weight zero.
inline std::vector<double> kmeanspp_weights(std::span<const double> min_distortion,
                                            const std::vector<bool>& chosen) {
  const double lo = *std::min_element(min_distortion.begin(), min_distortion.end());
  std::vector<double> weights(min_distortion.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double d = min_distortion[i] - lo;
    weights[i] = chosen[i] ? 0.0 : d * d;
  }
  return weights;
}

/// Returns the chosen rows in selection order.
inline std::vector<std::size_t> kmeanspp_rows(const Matrix& log_p, const Matrix& w,
                                              std::size_t k, Rng& rng,
                                              std::size_t threads = 1) {
  const std::size_t n = w.rows();
  require(k >= 1 && k <= n, "k-means++: K must lie in [1, n_docs]");
  std::vector<bool> chosen(n, false);
  std::vector<std::size_t> rows;
  rows.push_back(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
  chosen[rows.back()] = true;
  std::vector<double> min_d(n, std::numeric_limits<double>::infinity());
  while (rows.size() < k) {
    std::vector<double> log_c(w.cols());
    const auto c = normalized_row(w.row(rows.back()));
    for (std::size_t j = 0; j < c.size(); ++j) log_c[j] = std::log(c[j]);
    parallel_for(n, threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        min_d[i] = std::min(min_d[i], distortion_row(log_p.row(i), w.row(i), log_c));
      }
    });
    auto weights = kmeanspp_weights(min_d, chosen);
    if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0.0) {
      for (std::size_t i = 0; i < n; ++i) weights[i] = chosen[i] ? 0.0 : 1.0;
    }
    std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
    rows.push_back(pick(rng));
    chosen[rows.back()] = true;
  }
  return rows;
}

inline CentroidSet init_kmeanspp(const Matrix& log_p, const Matrix& w, std::size_t k,
                                 Rng& rng, std::size_t threads = 1) {
  const auto rows = kmeanspp_rows(log_p, w, k, rng, threads);
  return centroids_from_rows(w, rows);
}

// ---------------------------------------------------------------------------
// Clustering

/// One clustering run on preprocessed matrices, seeded with `seed`.
inline RunResult run_clustering(const Matrix& log_p, const Matrix& w,
                                const Params& params, std::uint64_t seed) {
  validate(params, log_p.rows());
  require(w.rows() == log_p.rows() && w.cols() == log_p.cols(),
          "weight matrix does not match log-probability matrix");
  Rng rng(seed);
  RunResult run;
  run.seed = seed;
  run.centroids = params.init == InitMethod::kKMeansPlusPlus
                      ? init_kmeanspp(log_p, w, params.k, rng, params.threads)
                      : init_random(w, params.k, rng);
  Assignment& a = run.assignment;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t iter = 1; iter <= params.max_iters; ++iter) {
    AssignStep step = assign_all(log_p, w, run.centroids, params.threads);
    repair_empty_clusters(step.labels, step.distortion, params.k);
    run.centroids = update_centroids(w, step.labels, params.k, params.threads);
    a.labels = std::move(step.labels);
    a.total_distortion = total_distortion(log_p, w, a.labels, run.centroids,
                                          &a.per_doc_distortion, params.threads);
    a.iterations = iter;
    run.history.push_back(a.total_distortion);
    if (iter > 1 && !(previous - a.total_distortion >
                      params.tolerance * std::abs(previous))) {
      a.converged = true;
      break;
    }
    previous = a.total_distortion;
  }
  return run;
}

/// Index of the run with the lowest total distortion; ties keep the earlier run.
inline std::size_t select_best(const std::vector<RunResult>& runs) {
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].assignment.total_distortion < runs[best].assignment.total_distortion) best = r;
  }
  return best;
}

template <typename RunFn>
RunResult best_of_restarts(const Params& params, RunFn&& run_one) {
  require(params.restarts >= 1, "restarts must be at least 1");
  std::vector<RunResult> runs(params.restarts);
  const std::size_t threads = resolve_threads(params.threads);
  Params inner = params;
  // Parallelize across restarts when there are several; otherwise inside the run.
  const bool outer = params.restarts > 1 && threads > 1;
  inner.threads = outer ? 1 : threads;
  parallel_for(params.restarts, outer ? threads : 1, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) runs[r] = run_one(inner, params.seed + r);
  });
  return std::move(runs[select_best(runs)]);
}

/// Restarts with seeds seed, seed+1, ... and keeps the lowest total distortion.
inline RunResult run_best_of(const Matrix& log_p, const Matrix& w, const Params& params) {
  validate(params, log_p.rows());
  return best_of_restarts(params, [&](const Params& p, std::uint64_t seed) {
    return run_clustering(log_p, w, p, seed);
  });
}

/// Full pipeline for one seed: clip, proposal, weights, then clustering.
inline RunResult cluster(const Matrix& log_p, const Params& params) {
  validate(params, log_p.rows());
  const Preprocessed pre = preprocess(log_p, params);
  return run_clustering(pre.log_p, pre.weights, params, params.seed);
}

inline RunResult cluster_best_of(const Matrix& log_p, const Params& params) {
  validate(params, log_p.rows());
  const Preprocessed pre = preprocess(log_p, params);
  return run_best_of(pre.log_p, pre.weights, params);
}

// ---------------------------------------------------------------------------
// Euclidean k-means on matrix rows, as a comparison point.

namespace baseline_detail {

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

inline RunResult lloyd(const Matrix& m, const Params& params, std::uint64_t seed) {
  Rng rng(seed);
  const std::size_t n = m.rows();
  const std::size_t k = params.k;
  RunResult run;
  run.seed = seed;
  Matrix centers(k, m.cols());
  const auto rows = sample_rows_uniform(n, k, rng);
  for (std::size_t c = 0; c < k; ++c) {
    std::copy(m.row(rows[c]).begin(), m.row(rows[c]).end(), centers.row(c).begin());
  }
  Assignment& a = run.assignment;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t iter = 1; iter <= params.max_iters; ++iter) {
    std::vector<std::size_t> labels(n);
    std::vector<double> dist(n);
    parallel_for(n, params.threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
          const double d = squared_distance(m.row(i), centers.row(c));
          if (d < best_d) {
            best_d = d;
            labels[i] = c;
          }
        }
        dist[i] = best_d;
      }
    });
    repair_empty_clusters(labels, dist, k);
    centers = Matrix(k, m.cols(), 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[labels[i]];
      for (std::size_t j = 0; j < m.cols(); ++j) centers(labels[i], j) += m(i, j);
    }
    for (std::size_t c = 0; c < k; ++c) {
      for (double& v : centers.row(c)) v /= static_cast<double>(counts[c]);
    }
    a.per_doc_distortion.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      a.per_doc_distortion[i] = squared_distance(m.row(i), centers.row(labels[i]));
    }
    a.total_distortion =
        std::accumulate(a.per_doc_distortion.begin(), a.per_doc_distortion.end(), 0.0);
    a.labels = std::move(labels);
    a.iterations = iter;
    run.history.push_back(a.total_distortion);
    if (iter > 1 && !(previous - a.total_distortion > params.tolerance * std::abs(previous))) {
      a.converged = true;
      break;
    }
    previous = a.total_distortion;
  }
  run.centroids.centroids = std::move(centers);
  return run;
}

}  // namespace baseline_detail

/// Lloyd's k-means with squared Euclidean distortion and the same restart
/// protocol as `cluster_best_of`. Centroids are plain means, not distributions.
inline RunResult kmeans_rows_baseline(const Matrix& m, const Params& params) {
  require(m.rows() >= 1 && m.cols() >= 1, "baseline: matrix must be nonempty");
  require(params.k >= 1 && params.k <= m.rows(),
          "baseline: K (" + std::to_string(params.k) + ") exceeds rows (" +
              std::to_string(m.rows()) + ")");
  require(params.restarts >= 1 && params.max_iters >= 1, "baseline: bad restart settings");
  return best_of_restarts(params, [&](const Params& p, std::uint64_t seed) {
    return baseline_detail::lloyd(m, p, seed);
  });
}

}  // namespace gckit
