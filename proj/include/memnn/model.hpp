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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "memnn/features.hpp"
#include "memnn/memory.hpp"
#include "memnn/scoring.hpp"

namespace memnn {

struct ModelFlags {
  int hops = 2;             // k in {1, 2}
  bool time = false;        // write-time triple scorer for supports
  bool match = false;       // 10|W| layout with match flags
  bool unseen = false;      // 7|W| layout with context bags
  double lambda = 0.0;      // bag-of-words mixing weight
  bool nil_support = true;  // hop 2 may answer "no second support"

  LayoutKind layout_kind() const {
    return match ? LayoutKind::kMatch : unseen ? LayoutKind::kContext : LayoutKind::kBase;
  }
};

struct MemNNModel {
  Vocab vocab;
  FeatureLayout layout;
  ModelFlags flags;
  EmbeddingMatrix output;    // U_O
  EmbeddingMatrix response;  // U_R
  std::optional<EmbeddingMatrix> output_time;  // U_Ot, present iff flags.time
  std::optional<Vocab> segmenter_vocab;
  std::optional<SegmenterParams> segmenter;

  /// Gaussian-initialized model over `vocab`.
  static MemNNModel create(Vocab vocab, const ModelFlags& flags, int dim, double init_stddev,
                           std::uint64_t seed);
  /// Throws if matrices and layout disagree.
  void validate() const;
  bool uses_context() const { return layout.has(Region::kLeftCtx); }
};

/// Context bags of everything the model has read for this question: the
/// visible memory followed by the question itself.
ContextStore story_context(const Vocab& vocab, const MemoryStore& store, int visible,
                           const Tokens& question);

/// Embedding score used by s_O and s_R, including the optional
/// bag-of-words term over shared words.
double pair_score(const MemNNModel& m, const EmbeddingMatrix& u, const SparseVector& fx,
                  const SparseVector& fy);

/// Folds the word regions (Y, X_INPUT, X_SUPPORT) onto word ids.
SparseVector fold_words(const SparseVector& f, const FeatureLayout& layout);

/// argmax_i s_O(x, m_i); ties go to the lowest slot.
int support_hop1(const MemNNModel& m, const Tokens& x, const MemoryStore& store,
                 std::span<const int> candidates, const UnseenPolicy& policy = {});

/// argmax_i s_O([x, m_o1], m_i) over candidates other than o1. With
/// `allow_nil` the empty memory competes too and nullopt means it won.
std::optional<int> support_hop2(const MemNNModel& m, const Tokens& x, int o1,
                                const MemoryStore& store, std::span<const int> candidates,
                                const UnseenPolicy& policy = {}, bool allow_nil = false);

/// Pairwise replacement scan with the write-time triple scorer. `o1` empty
/// selects the first hop. Candidates are visited in slot order; the
/// incumbent (always the older memory) is replaced when the triple score
/// prefers the newer challenger. `zero_time` drops the time features.
std::optional<int> support_time(const MemNNModel& m, const Tokens& x, std::optional<int> o1,
                                const MemoryStore& store, std::span<const int> candidates,
                                const UnseenPolicy& policy = {}, bool allow_nil = false,
                                bool zero_time = false);

/// argmax over the dictionary (plus words unknown to it that occur in the
/// query, when the model has context features) of s_R([x, supports], w).
std::string respond_word(const MemNNModel& m, const Tokens& x,
                         std::span<const Tokens* const> supports, const UnseenPolicy& policy = {});

struct Answer {
  std::string word;
  std::vector<int> supports;
  int candidates = 0;
};

/// Full pipeline: candidate lookup, k supports (plain or time), response.
Answer answer(const MemNNModel& m, const Tokens& x, const MemoryStore& store,
              const HashIndex* index = nullptr);

struct StreamSegment {
  Tokens tokens;
  bool question = false;
  std::size_t end = 0;  // stream position one past the last word
};

struct SegmentationResult {
  std::vector<StreamSegment> segments;
  bool trailing = false;  // last segment was flushed at end of stream
};

SparseVector featurize_segment(const Tokens& buffer, const Vocab& seg_vocab);

/// Greedy left-to-right segmentation. A "?" always closes a question.
SegmentationResult segment_stream(const Vocab& seg_vocab, const SegmenterParams& p,
                                  const Tokens& stream);
SegmentationResult segment_stream(const MemNNModel& m, const Tokens& stream);

}  // namespace memnn
