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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gckit/error.hpp"

namespace gckit {

/// Dense row-major matrix.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "matrix payload has " + std::to_string(data_.size()) +
                      " values, expected " + std::to_string(rows_ * cols_));
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const T& operator()(std::size_t i, std::size_t j) const {
    return data_[i * cols_ + j];
  }

  std::span<T> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  const std::vector<T>& data() const noexcept { return data_; }
  std::vector<T>& data() noexcept { return data_; }

  bool operator==(const BasicMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;

/// log p(y_j | x_i) for every document i and sampled text j (natural log).
struct LogProbMatrix {
  Matrix log_p;
  std::vector<std::string> doc_ids;
  std::vector<std::string> text_ids;

  std::size_t n_docs() const noexcept { return log_p.rows(); }
  std::size_t n_texts() const noexcept { return log_p.cols(); }
};

/// Checks the log-probability invariants: nonempty, finite, at most zero.
inline void validate_log_probs(const Matrix& log_p) {
  if (log_p.rows() == 0 || log_p.cols() == 0) {
    throw Error(ErrorCode::kDimensionMismatch, "matrix must be nonempty");
  }
  for (std::size_t i = 0; i < log_p.rows(); ++i) {
    for (std::size_t j = 0; j < log_p.cols(); ++j) {
      const double v = log_p(i, j);
      const std::string where =
          "(" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::kNonFinite, "entry " + where);
      }
      if (v > 0.0) {
        throw Error(ErrorCode::kPositiveLogProb, "entry " + where + " = " +
                                                     std::to_string(v));
      }
    }
  }
}

/// Fills in positional ids where none were supplied and checks alignment.
inline void validate(LogProbMatrix& m) {
  validate_log_probs(m.log_p);
  auto fill = [](std::vector<std::string>& ids, std::size_t n, const char* what) {
    if (ids.empty()) {
      ids.reserve(n);
      for (std::size_t i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    } else if (ids.size() != n) {
      throw Error(ErrorCode::kDimensionMismatch,
                  std::string(what) + " sidecar has " +
                      std::to_string(ids.size()) + " entries, matrix has " +
                      std::to_string(n));
    }
  };
  fill(m.doc_ids, m.n_docs(), "docs");
  fill(m.text_ids, m.n_texts(), "texts");
}

/// W_ij = (P_ij / phi_j)^alpha. Strictly positive.
class WeightMatrix : public Matrix {
 public:
  using Matrix::Matrix;
  explicit WeightMatrix(Matrix m) : Matrix(std::move(m)) {}
};

/// log phi(y_j), with the normalization constant fixed to 1.
struct Proposal {
  std::vector<double> log_phi;

  std::size_t size() const noexcept { return log_phi.size(); }
  bool operator==(const Proposal&) const = default;
};

/// Per-column mean and population standard deviation of log P.
struct ColumnStats {
  std::vector<double> mu;
  std::vector<double> sigma;
};

enum class InitMethod { kRandom, kKMeansPlusPlus };
enum class ProposalMethod { kPowerMean, kNaive };

struct Params {
  double alpha = 0.25;
  std::size_t k = 2;
  std::size_t restarts = 10;
  double clip_sigmas = 5.0;
  bool clip = true;
  ProposalMethod proposal = ProposalMethod::kPowerMean;
  InitMethod init = InitMethod::kRandom;
  std::size_t max_iters = 300;
  double tolerance = 1e-10;
  std::uint64_t seed = 0;
  // Number of resampled texts per hierarchy node; 0 keeps the matrix width.
  std::size_t n_samples = 0;
  // Worker threads; 0 means hardware concurrency. Never affects results.
  std::size_t threads = 1;
};

inline void validate(const Params& p, std::size_t n_docs) {
  require(p.alpha >= 0.0 && p.alpha <= 1.0, "alpha must lie in [0, 1]");
  require(p.k >= 1, "K must be at least 1");
  require(p.k <= n_docs, "K (" + std::to_string(p.k) +
                             ") exceeds the number of documents (" +
                             std::to_string(n_docs) + ")");
  require(p.restarts >= 1, "restarts must be at least 1");
  require(!p.clip || p.clip_sigmas > 0.0, "clip_sigmas must be positive");
  require(p.max_iters >= 1, "max_iters must be at least 1");
  require(p.tolerance >= 0.0, "tolerance must be nonnegative");
}

inline const char* to_string(InitMethod m) {
  return m == InitMethod::kRandom ? "random" : "kmeanspp";
}

inline const char* to_string(ProposalMethod m) {
  return m == ProposalMethod::kPowerMean ? "power_mean" : "naive";
}

}  // namespace gckit
