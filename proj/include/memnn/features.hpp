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

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "memnn/text.hpp"

namespace memnn {

// ---------------------------------------------------------------------------
// Dictionary

class Vocab {
 public:
  Vocab() = default;

  /// Ids are assigned in order of first occurrence.
  static Vocab build(const std::vector<Tokens>& corpus);
  static Vocab from_words(const std::vector<std::string>& words);

  std::optional<int> find(const std::string& word) const;
  int id(const std::string& word) const;  // throws on unknown words
  const std::string& word(int id) const;
  bool contains(const std::string& word) const { return index_.count(word) != 0; }
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

  /// One word per line; line number is the id.
  void save(std::ostream& os) const;
  static Vocab load(std::istream& is);

  bool operator==(const Vocab& other) const { return words_ == other.words_; }

 private:
  void add(const std::string& word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, int> index_;
};

// ---------------------------------------------------------------------------
// Feature space geometry

enum class Region : int {
  kYWords = 0,
  kXInput,
  kXSupport,
  kLeftCtx,
  kRightCtx,
  kYLeftCtx,
  kYRightCtx,
  kMatch,
  kLeftCtxMatch,
  kRightCtxMatch,
};

const char* region_name(Region r);

/// kBase = 3|W|. kContext = 7|W| adds unseen-word context bags, kept apart
/// for the input side and the memory side so that an unknown word shared by
/// both cannot score against itself. kMatch = 10|W| adds match flags.
enum class LayoutKind : int { kBase = 3, kContext = 7, kMatch = 10 };

class FeatureLayout {
 public:
  FeatureLayout() = default;
  FeatureLayout(int vocab_size, LayoutKind kind, bool time_features);

  int vocab_size() const { return vocab_size_; }
  LayoutKind kind() const { return kind_; }
  int region_count() const { return static_cast<int>(kind_); }
  bool has(Region r) const { return static_cast<int>(r) < region_count(); }
  /// First index of region r; throws if the layout lacks it.
  int offset(Region r) const;
  int index(Region r, int word_id) const { return offset(r) + word_id; }

  bool has_time() const { return time_dims_ == 3; }
  int time_dims() const { return time_dims_; }
  int time_offset() const;
  int dim() const { return vocab_size_ * region_count() + time_dims_; }

  /// Region holding `index`, or nullopt for the trailing time dims.
  std::optional<Region> region_of(int index) const;

  bool operator==(const FeatureLayout&) const = default;

 private:
  int vocab_size_ = 0;
  LayoutKind kind_ = LayoutKind::kBase;
  int time_dims_ = 0;
};

// ---------------------------------------------------------------------------
// Sparse vectors

class SparseVector {
 public:
  struct Entry {
    int index;
    double value;
    bool operator==(const Entry&) const = default;
  };

  SparseVector() = default;
  /// Sorts, merges duplicate indices and drops zeros.
  static SparseVector from_entries(std::vector<Entry> entries);

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t nnz() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double get(int index) const;
  /// One past the largest index, 0 when empty.
  int extent() const { return entries_.empty() ? 0 : entries_.back().index + 1; }

  double dot(const SparseVector& other) const;
  SparseVector scaled(double a) const;
  SparseVector operator+(const SparseVector& other) const;
  SparseVector operator-(const SparseVector& other) const;

  bool operator==(const SparseVector&) const = default;

 private:
  explicit SparseVector(std::vector<Entry> sorted) : entries_(std::move(sorted)) {}
  std::vector<Entry> entries_;
};

// ---------------------------------------------------------------------------
// Context bags for words never seen (or dropped) in training

class ContextStore {
 public:
  using Bag = std::map<int, int>;  // neighbour word id -> count

  static ContextStore build(const std::vector<Tokens>& corpus, const Vocab& vocab);
  /// Neighbours that are not in `vocab` are not recorded.
  void add_sentence(const Tokens& sentence, const Vocab& vocab);

  const Bag& left(const std::string& word) const;
  const Bag& right(const std::string& word) const;
  std::size_t size() const { return left_.size(); }

 private:
  std::unordered_map<std::string, Bag> left_;
  std::unordered_map<std::string, Bag> right_;
};

/// Decides which words are represented through their context instead of
/// their own feature. Words outside the vocabulary always are; `dropped`
/// (indexed by word id) additionally hides known words.
struct UnseenPolicy {
  const ContextStore* context = nullptr;
  const std::vector<bool>* dropped = nullptr;

  bool hides(const Vocab& vocab, const std::string& word) const;
};

struct FeaturizeStats {
  int skipped = 0;
};

/// Phi_x: `x` in X_INPUT, every support statement in X_SUPPORT.
SparseVector featurize_input(const Tokens& x, std::span<const Tokens* const> supports,
                             const FeatureLayout& layout, const Vocab& vocab,
                             const UnseenPolicy& policy = {}, FeaturizeStats* stats = nullptr);

/// Phi_y: word counts of `y` in Y_WORDS. When the layout carries match
/// regions and `conditional` is non-empty, words of `y` that also occur in
/// any conditional token list raise binary match flags.
SparseVector featurize_memory(const Tokens& y, const FeatureLayout& layout, const Vocab& vocab,
                              std::span<const Tokens* const> conditional = {},
                              const UnseenPolicy& policy = {}, FeaturizeStats* stats = nullptr);

// ---------------------------------------------------------------------------
// Write time

using WriteTime = std::int64_t;
/// The query is newer than every memory.
inline constexpr WriteTime kQueryTime = std::numeric_limits<WriteTime>::max();
/// The empty hop-2 candidate is older than every memory.
inline constexpr WriteTime kNilTime = -1;

using TimeFeatures = std::array<double, 3>;

/// (x older than y, x older than y2, y older than y2), each 0 or 1.
TimeFeatures featurize_time(WriteTime x, WriteTime y, WriteTime y2);

/// Adds `t` into the trailing time dims; throws when the layout has none.
SparseVector with_time(const SparseVector& v, const FeatureLayout& layout, const TimeFeatures& t);

}  // namespace memnn
