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
#include "memnn/scoring.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>

namespace memnn {

namespace {

constexpr std::uint32_t kMatrixMagic = 0x314E4E4D;  // "MNN1"

void write_u32(std::ostream& os, std::uint32_t v) {
  std::array<char, 4> b{};
  for (int i = 0; i < 4; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 4);
}

void write_f64(std::ostream& os, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  std::array<char, 8> b{};
  for (int i = 0; i < 8; ++i) b[static_cast<std::size_t>(i)] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(b.data(), 8);
}

std::uint64_t read_le(std::istream& is, int bytes) {
  std::array<unsigned char, 8> b{};
  is.read(reinterpret_cast<char*>(b.data()), bytes);
  if (!is) throw Error("matrix: truncated input");
  std::uint64_t v = 0;
  for (int i = bytes - 1; i >= 0; --i) v = (v << 8) | b[static_cast<std::size_t>(i)];
  return v;
}

void check_dim(const EmbeddingMatrix& u, const SparseVector& f) {
  if (f.extent() > u.cols()) throw Error("score: feature index beyond matrix columns");
}

}  // namespace

EmbeddingMatrix::EmbeddingMatrix(int rows, int cols, MatrixRole role)
    : rows_(rows), cols_(cols), role_(role) {
  if (rows < 1 || cols < 1) throw Error("matrix: dimensions must be positive");
  data_.assign(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0);
}

EmbeddingMatrix EmbeddingMatrix::gaussian(int rows, int cols, MatrixRole role, double stddev,
                                          std::mt19937_64& rng) {
  EmbeddingMatrix m(rows, cols, role);
  std::normal_distribution<double> dist(0.0, stddev);
  for (auto& v : m.data_) v = dist(rng);
  return m;
}

std::span<double> EmbeddingMatrix::column(int j) {
  return {data_.data() + index(0, j), static_cast<std::size_t>(rows_)};
}

std::span<const double> EmbeddingMatrix::column(int j) const {
  return {data_.data() + index(0, j), static_cast<std::size_t>(rows_)};
}

std::vector<double> EmbeddingMatrix::embed(const SparseVector& f) const {
  check_dim(*this, f);
  std::vector<double> out(static_cast<std::size_t>(rows_), 0.0);
  for (const auto& e : f.entries()) {
    const double* col = data_.data() + index(0, e.index);
    for (int r = 0; r < rows_; ++r) out[static_cast<std::size_t>(r)] += e.value * col[r];
  }
  return out;
}

bool EmbeddingMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

void EmbeddingMatrix::save(std::ostream& os) const {
  write_u32(os, kMatrixMagic);
  write_u32(os, static_cast<std::uint32_t>(rows_));
  write_u32(os, static_cast<std::uint32_t>(cols_));
  write_u32(os, static_cast<std::uint32_t>(role_));
  for (int r = 0; r < rows_; ++r)
    for (int c = 0; c < cols_; ++c) write_f64(os, at(r, c));
}

EmbeddingMatrix EmbeddingMatrix::load(std::istream& is) {
  if (read_le(is, 4) != kMatrixMagic) throw Error("matrix: bad magic");
  auto rows = static_cast<int>(read_le(is, 4));
  auto cols = static_cast<int>(read_le(is, 4));
  auto role = static_cast<std::uint32_t>(read_le(is, 4));
  if (role > 3) throw Error("matrix: bad role tag");
  EmbeddingMatrix m(rows, cols, static_cast<MatrixRole>(role));
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m.at(r, c) = std::bit_cast<double>(read_le(is, 8));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw Error("dot: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double score_embedding(const EmbeddingMatrix& u, const SparseVector& fx, const SparseVector& fy) {
  return dot(u.embed(fx), u.embed(fy));
}

double score_mixed(const EmbeddingMatrix& u, const SparseVector& fx, const SparseVector& fy,
                   double lambda) {
  if (lambda < 0.0) throw Error("score_mixed: lambda must be non-negative");
  double s = score_embedding(u, fx, fy);
  return lambda == 0.0 ? s : s + lambda * fx.dot(fy);
}

double score_time_triple(const EmbeddingMatrix& u, const FeatureLayout& layout,
                         const SparseVector& fx, const SparseVector& fy, const SparseVector& fy2,
                         const TimeFeatures& t) {
  if (u.cols() != layout.dim()) throw Error("score_time_triple: matrix does not match layout");
  return score_embedding(u, fx, with_time(fy - fy2, layout, t));
}

double score_segment(const SegmenterParams& p, const SparseVector& fc) {
  if (static_cast<int>(p.classifier.size()) != p.projection.rows())
    throw Error("score_segment: classifier length does not match embedding dim");
  return dot(p.classifier, p.projection.embed(fc));
}

}  // namespace memnn
