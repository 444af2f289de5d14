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
#include "memnn/model.hpp"

#include <algorithm>
#include <random>
#include <unordered_set>

namespace memnn {

MemNNModel MemNNModel::create(Vocab vocab, const ModelFlags& flags, int dim, double init_stddev,
                              std::uint64_t seed) {
  if (flags.hops != 1 && flags.hops != 2) throw Error("model: hops must be 1 or 2");
  if (flags.lambda < 0.0) throw Error("model: lambda must be non-negative");
  std::mt19937_64 rng(seed);
  FeatureLayout layout(vocab.size(), flags.layout_kind(), flags.time);
  const int d = layout.dim();
  MemNNModel m{std::move(vocab),
               layout,
               flags,
               EmbeddingMatrix::gaussian(dim, d, MatrixRole::kOutput, init_stddev, rng),
               EmbeddingMatrix::gaussian(dim, d, MatrixRole::kResponse, init_stddev, rng),
               std::nullopt,
               std::nullopt,
               std::nullopt};
  if (flags.time)
    m.output_time = EmbeddingMatrix::gaussian(dim, d, MatrixRole::kOutputTime, init_stddev, rng);
  return m;
}

void MemNNModel::validate() const {
  if (layout.vocab_size() != vocab.size()) throw Error("model: layout/vocab mismatch");
  if (layout.kind() != flags.layout_kind() || layout.has_time() != flags.time)
    throw Error("model: layout does not match flags");
  if (output.cols() != layout.dim() || response.cols() != layout.dim())
    throw Error("model: matrix width does not match layout");
  if (output.rows() != response.rows()) throw Error("model: embedding dims differ");
  if (flags.time != output_time.has_value()) throw Error("model: U_Ot presence does not match flags");
  if (output_time && (output_time->cols() != layout.dim() || output_time->rows() != output.rows()))
    throw Error("model: U_Ot shape mismatch");
  if (segmenter.has_value() != segmenter_vocab.has_value())
    throw Error("model: segmenter params without dictionary");
  if (segmenter && segmenter->projection.cols() != segmenter_vocab->size())
    throw Error("model: segmenter width does not match its dictionary");
}

ContextStore story_context(const Vocab& vocab, const MemoryStore& store, int visible,
                           const Tokens& question) {
  ContextStore ctx;
  for (int s = 0; s < visible; ++s) ctx.add_sentence(store.tokens(s), vocab);
  ctx.add_sentence(question, vocab);
  return ctx;
}

SparseVector fold_words(const SparseVector& f, const FeatureLayout& layout) {
  std::vector<SparseVector::Entry> out;
  const int w = layout.vocab_size();
  for (const auto& e : f.entries()) {
    if (e.index < 3 * w) out.push_back({e.index % w, e.value});
  }
  return SparseVector::from_entries(std::move(out));
}

double pair_score(const MemNNModel& m, const EmbeddingMatrix& u, const SparseVector& fx,
                  const SparseVector& fy) {
  double s = score_embedding(u, fx, fy);
  if (m.flags.lambda > 0.0)
    s += m.flags.lambda * fold_words(fx, m.layout).dot(fold_words(fy, m.layout));
  return s;
}

namespace {

// Scores each candidate against a fixed query vector; returns the best index
// into `ys` with ties to the first.
std::size_t argmax_pair(const MemNNModel& m, const EmbeddingMatrix& u, const SparseVector& fx,
                        const std::vector<SparseVector>& ys) {
  const auto ux = u.embed(fx);
  const bool mix = m.flags.lambda > 0.0;
  const SparseVector fold_x = mix ? fold_words(fx, m.layout) : SparseVector{};
  std::size_t best = 0;
  double best_s = 0.0;
  for (std::size_t i = 0; i < ys.size(); ++i) {
    double s = dot(ux, u.embed(ys[i]));
    if (mix) s += m.flags.lambda * fold_x.dot(fold_words(ys[i], m.layout));
    if (i == 0 || s > best_s) {
      best = i;
      best_s = s;
    }
  }
  return best;
}

}  // namespace

int support_hop1(const MemNNModel& m, const Tokens& x, const MemoryStore& store,
                 std::span<const int> candidates, const UnseenPolicy& policy) {
  if (candidates.empty()) throw Error("support_hop1: no candidate memories");
  const Tokens* cond[] = {&x};
  const auto fx = featurize_input(x, {}, m.layout, m.vocab, policy);
  std::vector<SparseVector> ys;
  ys.reserve(candidates.size());
  for (int c : candidates)
    ys.push_back(featurize_memory(store.tokens(c), m.layout, m.vocab, cond, policy));
  return candidates[argmax_pair(m, m.output, fx, ys)];
}

std::optional<int> support_hop2(const MemNNModel& m, const Tokens& x, int o1,
                                const MemoryStore& store, std::span<const int> candidates,
                                const UnseenPolicy& policy, bool allow_nil) {
  const Tokens& first = store.tokens(o1);
  const Tokens* sup[] = {&first};
  const Tokens* cond[] = {&x, &first};
  std::vector<std::optional<int>> ids;
  std::vector<SparseVector> ys;
  if (allow_nil) {
    ids.push_back(std::nullopt);
    ys.emplace_back();
  }
  for (int c : candidates) {
    if (c == o1) continue;
    ids.push_back(c);
    ys.push_back(featurize_memory(store.tokens(c), m.layout, m.vocab, cond, policy));
  }
  if (ys.empty()) throw Error("support_hop2: no candidate memories");
  const auto fx = featurize_input(x, sup, m.layout, m.vocab, policy);
  return ids[argmax_pair(m, m.output, fx, ys)];
}

std::optional<int> support_time(const MemNNModel& m, const Tokens& x, std::optional<int> o1,
                                const MemoryStore& store, std::span<const int> candidates,
                                const UnseenPolicy& policy, bool allow_nil, bool zero_time) {
  if (!m.output_time) throw Error("support_time: model has no write-time matrix");
  const EmbeddingMatrix& u = *m.output_time;
  const Tokens* first = o1 ? &store.tokens(*o1) : nullptr;
  const Tokens* sup[] = {first};
  const Tokens* cond[] = {&x, first};
  const std::span<const Tokens* const> sup_span = first ? std::span<const Tokens* const>(sup)
                                                        : std::span<const Tokens* const>{};
  const std::span<const Tokens* const> cond_span(cond, first ? 2 : 1);

  std::vector<std::optional<int>> ids;
  std::vector<WriteTime> times;
  if (o1 && allow_nil) {
    ids.push_back(std::nullopt);
    times.push_back(kNilTime);
  }
  for (int c : candidates) {
    if (o1 && c == *o1) continue;
    ids.push_back(c);
    times.push_back(store.slot(c).write_index);
  }
  if (ids.empty()) throw Error("support_time: no candidate memories");

  const auto fx = featurize_input(x, sup_span, m.layout, m.vocab, policy);
  const auto uq = u.embed(fx);
  // s_Ot(q, y, y2) = e(y) - e(y2) + sum_j t_j * tau_j
  std::vector<double> e(ids.size(), 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (ids[i])
      e[i] = dot(uq, u.embed(featurize_memory(store.tokens(*ids[i]), m.layout, m.vocab, cond_span,
                                              policy)));
  std::array<double, 3> tau{};
  const int off = m.layout.time_offset();
  for (int j = 0; j < 3; ++j) tau[static_cast<std::size_t>(j)] = dot(uq, u.column(off + j));

  const WriteTime x_time = o1 ? store.slot(*o1).write_index : kQueryTime;
  std::size_t t = 0;
  for (std::size_t i = 1; i < ids.size(); ++i) {
    double s = e[t] - e[i];
    if (!zero_time) {
      const auto tf = featurize_time(x_time, times[t], times[i]);
      for (std::size_t j = 0; j < 3; ++j) s += tf[j] * tau[j];
    }
    if (s < 0.0) t = i;
  }
  return ids[t];
}

std::string respond_word(const MemNNModel& m, const Tokens& x,
                         std::span<const Tokens* const> supports, const UnseenPolicy& policy) {
  std::vector<std::string> words = m.vocab.words();
  if (m.uses_context()) {
    std::unordered_set<std::string> extra;
    auto collect = [&](const Tokens& t) {
      for (const auto& w : t)
        if (!m.vocab.contains(w) && extra.insert(w).second) words.push_back(w);
    };
    collect(x);
    for (const Tokens* s : supports)
      if (s) collect(*s);
  }
  std::vector<const Tokens*> cond{&x};
  for (const Tokens* s : supports)
    if (s) cond.push_back(s);

  const auto fx = featurize_input(x, supports, m.layout, m.vocab, policy);
  std::vector<SparseVector> ys;
  ys.reserve(words.size());
  Tokens single(1);
  for (const auto& w : words) {
    single[0] = w;
    ys.push_back(featurize_memory(single, m.layout, m.vocab, cond, policy));
  }
  return words[argmax_pair(m, m.response, fx, ys)];
}

Answer answer(const MemNNModel& m, const Tokens& x, const MemoryStore& store,
              const HashIndex* index) {
  if (store.empty()) throw Error("answer: memory is empty");
  ContextStore ctx;
  UnseenPolicy policy;
  if (m.uses_context()) {
    ctx = story_context(m.vocab, store, store.size(), x);
    policy.context = &ctx;
  }

  Answer out;
  const auto cand1 = lookup_candidates(store, index, x, m.vocab);
  out.candidates = static_cast<int>(cand1.size());
  const int o1 = m.flags.time ? *support_time(m, x, std::nullopt, store, cand1, policy)
                              : support_hop1(m, x, store, cand1, policy);
  out.supports.push_back(o1);

  if (m.flags.hops == 2) {
    Tokens joined = x;
    const auto& first = store.tokens(o1);
    joined.insert(joined.end(), first.begin(), first.end());
    auto cand2 = lookup_candidates(store, index, joined, m.vocab);
    std::erase(cand2, o1);
    if (!cand2.empty() || m.flags.nil_support) {
      const auto o2 = m.flags.time
                          ? support_time(m, x, o1, store, cand2, policy, m.flags.nil_support)
                          : support_hop2(m, x, o1, store, cand2, policy, m.flags.nil_support);
      if (o2) out.supports.push_back(*o2);
    }
  }

  std::vector<const Tokens*> sup;
  for (int s : out.supports) sup.push_back(&store.tokens(s));
  out.word = respond_word(m, x, sup, policy);
  return out;
}

SparseVector featurize_segment(const Tokens& buffer, const Vocab& seg_vocab) {
  std::vector<SparseVector::Entry> out;
  for (const auto& w : buffer)
    if (auto id = seg_vocab.find(w)) out.push_back({*id, 1.0});
  return SparseVector::from_entries(std::move(out));
}

SegmentationResult segment_stream(const Vocab& seg_vocab, const SegmenterParams& p,
                                  const Tokens& stream) {
  SegmentationResult res;
  Tokens buffer;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    buffer.push_back(stream[i]);
    const bool question = stream[i] == "?";
    if (question || score_segment(p, featurize_segment(buffer, seg_vocab)) > p.margin) {
      res.segments.push_back({std::move(buffer), question, i + 1});
      buffer.clear();
    }
  }
  if (!buffer.empty()) {
    res.segments.push_back({std::move(buffer), false, stream.size()});
    res.trailing = true;
  }
  return res;
}

SegmentationResult segment_stream(const MemNNModel& m, const Tokens& stream) {
  if (!m.segmenter) throw Error("segment_stream: model has no segmenter");
  return segment_stream(*m.segmenter_vocab, *m.segmenter, stream);
}

}  // namespace memnn
