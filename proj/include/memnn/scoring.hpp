// Copyright 2026 The MemNN Authors
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

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "memnn/features.hpp"

namespace memnn {

enum class MatrixRole : std::uint32_t {
  kOutput = 0,      // U_O
  kResponse = 1,    // U_R
  kOutputTime = 2,  // U_Ot
  kSegmenter = 3,   // U_S
};

/// Dense n x D embedding matrix. Columns are stored contiguously because
/// every product is against a sparse feature vector.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(int rows, int cols, MatrixRole role);

  /// Entries i.i.d. N(0, stddev^2).
  static EmbeddingMatrix gaussian(int rows, int cols, MatrixRole role, double stddev,
                                  std::mt19937_64& rng);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  MatrixRole role() const { return role_; }

  std::span<double> column(int j);
  std::span<const double> column(int j) const;
  double at(int r, int c) const { return data_[index(r, c)]; }
  double& at(int r, int c) { return data_[index(r, c)]; }

  /// U * f as a dense n-vector.
  std::vector<double> embed(const SparseVector& f) const;
  bool all_finite() const;

  /// Header (magic, n, D, role) followed by row-major float64, all little endian.
  void save(std::ostream& os) const;
  static EmbeddingMatrix load(std::istream& is);

  bool operator==(const EmbeddingMatrix&) const = default;

 private:
  std::size_t index(int r, int c) const {
    return static_cast<std::size_t>(c) * static_cast<std::size_t>(rows_) + static_cast<std::size_t>(r);
  }

  int rows_ = 0;
  int cols_ = 0;
  MatrixRole role_ = MatrixRole::kOutput;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// Phi_x^T U^T U Phi_y, evaluated as (U fx) . (U fy).
double score_embedding(const EmbeddingMatrix& u, const SparseVector& fx, const SparseVector& fy);

/// Embedding score plus lambda times the raw feature dot product.
double score_mixed(const EmbeddingMatrix& u, const SparseVector& fx, const SparseVector& fy,
                   double lambda);

/// Signed preference of y over y2 given x: (U fx) . U (fy - fy2 + t).
/// Positive prefers y, negative prefers y2.
double score_time_triple(const EmbeddingMatrix& u, const FeatureLayout& layout,
                         const SparseVector& fx, const SparseVector& fy, const SparseVector& fy2,
                         const TimeFeatures& t);

struct SegmenterParams {
  EmbeddingMatrix projection;  // U_S, n x |W_seg|
  std::vector<double> classifier;  // w_seg, length n
  double margin = 0.1;
};

/// w_seg^T U_S Phi_seg(c). The segmenter fires when this exceeds the margin.
double score_segment(const SegmenterParams& p, const SparseVector& fc);

}  // namespace memnn
