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
#include <vector>

#include "memnn/features.hpp"
#include "memnn/scoring.hpp"

namespace memnn {

struct MemorySlot {
  Tokens tokens;
  WriteTime write_index = 0;
};

/// Append-only statement memory. Slot ids equal write indices.
class MemoryStore {
 public:
  MemoryStore() = default;
  explicit MemoryStore(const std::vector<Tokens>& statements);

  int write(Tokens tokens);
  int size() const { return static_cast<int>(slots_.size()); }
  bool empty() const { return slots_.empty(); }
  const MemorySlot& slot(int id) const;
  const Tokens& tokens(int id) const { return slot(id).tokens; }
  const std::vector<MemorySlot>& slots() const { return slots_; }

 private:
  std::vector<MemorySlot> slots_;
};

enum class HashKind { kWord, kCluster };

class HashIndex {
 public:
  HashKind kind() const { return kind_; }
  int bucket_count() const { return static_cast<int>(buckets_.size()); }
  /// Slot ids in bucket b, ascending.
  const std::vector<int>& bucket(int b) const { return buckets_.at(static_cast<std::size_t>(b)); }
  /// Buckets touched by the words of `tokens` (unknown words touch none).
  std::vector<int> buckets_for(const Tokens& tokens, const Vocab& vocab) const;
  /// Vocab id -> cluster for kCluster, identity for kWord.
  const std::vector<int>& word_bucket() const { return word_bucket_; }
  const std::vector<std::vector<double>>& centroids() const { return centroids_; }
  /// Same word-to-bucket map over a different store.
  HashIndex reindexed(const MemoryStore& store, const Vocab& vocab) const;

 private:
  friend HashIndex build_word_hash(const MemoryStore&, const Vocab&);
  friend HashIndex build_cluster_hash(const MemoryStore&, const Vocab&, const EmbeddingMatrix&,
                                      const FeatureLayout&, int, std::uint64_t, int);
  void index_store(const MemoryStore& store, const Vocab& vocab);

  HashKind kind_ = HashKind::kWord;
  std::vector<std::vector<int>> buckets_;
  std::vector<int> word_bucket_;
  std::vector<std::vector<double>> centroids_;
};

struct KMeansResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> assignment;
  /// Total squared distortion after seeding and after each Lloyd iteration.
  std::vector<double> distortion_history;
  double distortion = 0.0;
};

/// k-means++ seeding followed by Lloyd iterations. Deterministic in `seed`.
/// An empty cluster is re-seeded at the point farthest from its centroid.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, int iters,
                    std::uint64_t seed);

/// One bucket per dictionary word.
HashIndex build_word_hash(const MemoryStore& store, const Vocab& vocab);

/// K buckets from k-means over the Y_WORDS columns of U_O.
HashIndex build_cluster_hash(const MemoryStore& store, const Vocab& vocab,
                             const EmbeddingMatrix& output, const FeatureLayout& layout, int k,
                             std::uint64_t seed, int iters = 25);

/// Slots to score for `input`: everything without an index, otherwise the
/// union of the buckets the input hashes to. Ascending and deduplicated.
std::vector<int> lookup_candidates(const MemoryStore& store, const HashIndex* index,
                                   const Tokens& input, const Vocab& vocab);

}  // namespace memnn
