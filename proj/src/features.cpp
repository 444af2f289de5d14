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
#include "memnn/features.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_set>

namespace memnn {

// --- Vocab -----------------------------------------------------------------

void Vocab::add(const std::string& word) {
  if (index_.emplace(word, static_cast<int>(words_.size())).second) words_.push_back(word);
}

Vocab Vocab::build(const std::vector<Tokens>& corpus) {
  Vocab v;
  for (const auto& sentence : corpus)
    for (const auto& w : sentence) v.add(w);
  if (v.size() == 0) throw Error("build_vocab: empty corpus");
  return v;
}

Vocab Vocab::from_words(const std::vector<std::string>& words) {
  Vocab v;
  for (const auto& w : words) {
    if (w.empty()) throw Error("vocab: empty word");
    if (v.contains(w)) throw Error("vocab: duplicate word '" + w + "'");
    v.add(w);
  }
  if (v.size() == 0) throw Error("vocab: no words");
  return v;
}

std::optional<int> Vocab::find(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Vocab::id(const std::string& word) const {
  auto it = index_.find(word);
  if (it == index_.end()) throw Error("vocab: unknown word '" + word + "'");
  return it->second;
}

const std::string& Vocab::word(int id) const {
  if (id < 0 || id >= size()) throw Error("vocab: id out of range");
  return words_[static_cast<std::size_t>(id)];
}

void Vocab::save(std::ostream& os) const {
  for (const auto& w : words_) os << w << '\n';
}

Vocab Vocab::load(std::istream& is) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(is, line)) words.push_back(line);
  return from_words(words);
}

// --- FeatureLayout -----------------------------------------------------------

const char* region_name(Region r) {
  switch (r) {
    case Region::kYWords: return "Y_WORDS";
    case Region::kXInput: return "X_INPUT";
    case Region::kXSupport: return "X_SUPPORT";
    case Region::kLeftCtx: return "LEFT_CTX";
    case Region::kRightCtx: return "RIGHT_CTX";
    case Region::kYLeftCtx: return "Y_LEFT_CTX";
    case Region::kYRightCtx: return "Y_RIGHT_CTX";
    case Region::kMatch: return "MATCH";
    case Region::kLeftCtxMatch: return "LEFT_CTX_MATCH";
    case Region::kRightCtxMatch: return "RIGHT_CTX_MATCH";
  }
  return "?";
}

FeatureLayout::FeatureLayout(int vocab_size, LayoutKind kind, bool time_features)
    : vocab_size_(vocab_size), kind_(kind), time_dims_(time_features ? 3 : 0) {
  if (vocab_size < 1) throw Error("layout: vocabulary must be non-empty");
}

int FeatureLayout::offset(Region r) const {
  if (!has(r)) throw Error(std::string("layout: region ") + region_name(r) + " not configured");
  return static_cast<int>(r) * vocab_size_;
}

int FeatureLayout::time_offset() const {
  if (!has_time()) throw Error("layout: no time dimensions");
  return vocab_size_ * region_count();
}

std::optional<Region> FeatureLayout::region_of(int index) const {
  if (index < 0 || index >= dim()) throw Error("layout: index out of range");
  int r = index / vocab_size_;
  if (r >= region_count()) return std::nullopt;
  return static_cast<Region>(r);
}

// --- SparseVector ------------------------------------------------------------

SparseVector SparseVector::from_entries(std::vector<Entry> entries) {
  std::sort(entries.begin(), entries.end(),
            [](const Entry& a, const Entry& b) { return a.index < b.index; });
  std::vector<Entry> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    if (e.index < 0) throw Error("sparse vector: negative index");
    if (!out.empty() && out.back().index == e.index)
      out.back().value += e.value;
    else
      out.push_back(e);
  }
  std::erase_if(out, [](const Entry& e) { return e.value == 0.0; });
  return SparseVector(std::move(out));
}

double SparseVector::get(int index) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), index,
                             [](const Entry& e, int i) { return e.index < i; });
  return (it != entries_.end() && it->index == index) ? it->value : 0.0;
}

double SparseVector::dot(const SparseVector& other) const {
  double s = 0.0;
  auto a = entries_.begin();
  auto b = other.entries_.begin();
  while (a != entries_.end() && b != other.entries_.end()) {
    if (a->index < b->index) {
      ++a;
    } else if (b->index < a->index) {
      ++b;
    } else {
      s += a->value * b->value;
      ++a;
      ++b;
    }
  }
  return s;
}

SparseVector SparseVector::scaled(double a) const {
  std::vector<Entry> out;
  if (a == 0.0) return SparseVector(std::move(out));
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.index, e.value * a});
  return SparseVector(std::move(out));
}

SparseVector SparseVector::operator+(const SparseVector& other) const {
  std::vector<Entry> all(entries_);
  all.insert(all.end(), other.entries_.begin(), other.entries_.end());
  return from_entries(std::move(all));
}

SparseVector SparseVector::operator-(const SparseVector& other) const {
  return *this + other.scaled(-1.0);
}

// --- ContextStore ------------------------------------------------------------

ContextStore ContextStore::build(const std::vector<Tokens>& corpus, const Vocab& vocab) {
  ContextStore store;
  for (const auto& s : corpus) store.add_sentence(s, vocab);
  return store;
}

void ContextStore::add_sentence(const Tokens& sentence, const Vocab& vocab) {
  for (std::size_t i = 0; i < sentence.size(); ++i) {
    auto& l = left_[sentence[i]];
    auto& r = right_[sentence[i]];
    if (i > 0)
      if (auto id = vocab.find(sentence[i - 1])) ++l[*id];
    if (i + 1 < sentence.size())
      if (auto id = vocab.find(sentence[i + 1])) ++r[*id];
  }
}

const ContextStore::Bag& ContextStore::left(const std::string& word) const {
  static const Bag kEmpty;
  auto it = left_.find(word);
  return it == left_.end() ? kEmpty : it->second;
}

const ContextStore::Bag& ContextStore::right(const std::string& word) const {
  static const Bag kEmpty;
  auto it = right_.find(word);
  return it == right_.end() ? kEmpty : it->second;
}

bool UnseenPolicy::hides(const Vocab& vocab, const std::string& word) const {
  auto id = vocab.find(word);
  if (!id) return true;
  return dropped != nullptr && (*dropped)[static_cast<std::size_t>(*id)];
}

// --- Featurizers ---------------------------------------------------------------

namespace {

// Context regions hold the presence of each neighbour word, not its count.
void add_context(std::vector<SparseVector::Entry>& out, const std::string& word,
                 const FeatureLayout& layout, const UnseenPolicy& policy, Region left,
                 Region right, FeaturizeStats* stats) {
  if (!layout.has(Region::kLeftCtx)) {
    if (stats) ++stats->skipped;
    return;
  }
  if (policy.context == nullptr) return;
  for (const auto& [id, count] : policy.context->left(word))
    out.push_back({layout.index(left, id), 1.0});
  for (const auto& [id, count] : policy.context->right(word))
    out.push_back({layout.index(right, id), 1.0});
}

void add_words(std::vector<SparseVector::Entry>& out, const Tokens& tokens, Region region,
               const FeatureLayout& layout, const Vocab& vocab, const UnseenPolicy& policy,
               FeaturizeStats* stats) {
  const bool y = region == Region::kYWords;
  const Region left = y ? Region::kYLeftCtx : Region::kLeftCtx;
  const Region right = y ? Region::kYRightCtx : Region::kRightCtx;
  for (const auto& w : tokens) {
    if (policy.hides(vocab, w))
      add_context(out, w, layout, policy, left, right, stats);
    else
      out.push_back({layout.index(region, vocab.id(w)), 1.0});
  }
}

}  // namespace

SparseVector featurize_input(const Tokens& x, std::span<const Tokens* const> supports,
                             const FeatureLayout& layout, const Vocab& vocab,
                             const UnseenPolicy& policy, FeaturizeStats* stats) {
  std::vector<SparseVector::Entry> out;
  add_words(out, x, Region::kXInput, layout, vocab, policy, stats);
  for (const Tokens* s : supports)
    if (s) add_words(out, *s, Region::kXSupport, layout, vocab, policy, stats);
  return SparseVector::from_entries(std::move(out));
}

SparseVector featurize_memory(const Tokens& y, const FeatureLayout& layout, const Vocab& vocab,
                              std::span<const Tokens* const> conditional,
                              const UnseenPolicy& policy, FeaturizeStats* stats) {
  std::vector<SparseVector::Entry> out;
  add_words(out, y, Region::kYWords, layout, vocab, policy, stats);

  if (layout.has(Region::kMatch) && !conditional.empty()) {
    std::unordered_set<std::string> query;
    for (const Tokens* t : conditional)
      if (t) query.insert(t->begin(), t->end());
    std::set<int> flags;
    std::unordered_set<std::string> seen;
    for (const auto& w : y) {
      if (!query.count(w) || !seen.insert(w).second) continue;
      if (!policy.hides(vocab, w)) {
        flags.insert(layout.index(Region::kMatch, vocab.id(w)));
      } else if (policy.context != nullptr) {
        for (const auto& [id, count] : policy.context->left(w))
          flags.insert(layout.index(Region::kLeftCtxMatch, id));
        for (const auto& [id, count] : policy.context->right(w))
          flags.insert(layout.index(Region::kRightCtxMatch, id));
      }
    }
    for (int i : flags) out.push_back({i, 1.0});
  }
  return SparseVector::from_entries(std::move(out));
}

TimeFeatures featurize_time(WriteTime x, WriteTime y, WriteTime y2) {
  return {x < y ? 1.0 : 0.0, x < y2 ? 1.0 : 0.0, y < y2 ? 1.0 : 0.0};
}

SparseVector with_time(const SparseVector& v, const FeatureLayout& layout, const TimeFeatures& t) {
  if (!layout.has_time()) throw Error("time features requested on a layout without time dims");
  const int off = layout.time_offset();
  std::vector<SparseVector::Entry> extra;
  for (int i = 0; i < 3; ++i)
    if (t[static_cast<std::size_t>(i)] != 0.0) extra.push_back({off + i, t[static_cast<std::size_t>(i)]});
  if (extra.empty()) return v;
  return v + SparseVector::from_entries(std::move(extra));
}

}  // namespace memnn
