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
#include "memnn/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace memnn {

namespace {

// Featurization environment of one training example: context bags of the
// story read so far and the dropout directive.
class ExampleEnv {
 public:
  ExampleEnv(const MemNNModel& m, const SupervisedExample& ex, const MemoryStore& store,
             const NegativeSample& neg)
      : m_(m), store_(store) {
    if (m.uses_context()) {
      ctx_ = story_context(m.vocab, store, ex.memory_size, ex.question);
      policy_.context = &ctx_;
    }
    if (!neg.dropped.empty()) policy_.dropped = &neg.dropped;
  }
  ExampleEnv(const ExampleEnv&) = delete;
  ExampleEnv& operator=(const ExampleEnv&) = delete;

  const UnseenPolicy& policy() const { return policy_; }

  SparseVector input(const Tokens& x, std::span<const Tokens* const> sup) const {
    return featurize_input(x, sup, m_.layout, m_.vocab, policy_);
  }

  SparseVector memory(int slot, std::span<const Tokens* const> cond) const {
    if (slot == kNilSlot) return {};
    return featurize_memory(store_.tokens(slot), m_.layout, m_.vocab, cond, policy_);
  }

  SparseVector word(const std::string& w, std::span<const Tokens* const> cond) const {
    return featurize_memory(Tokens{w}, m_.layout, m_.vocab, cond, policy_);
  }

  WriteTime time(int slot) const {
    return slot == kNilSlot ? kNilTime : store_.slot(slot).write_index;
  }

  const Tokens* tokens(int slot) const { return slot == kNilSlot ? nullptr : &store_.tokens(slot); }

 private:
  const MemNNModel& m_;
  const MemoryStore& store_;
  ContextStore ctx_;
  UnseenPolicy policy_;
};

// max(0, margin - s(q, pos) + s(q, neg)) against matrix u.
HingeTerm ranking_term(const MemNNModel& m, const EmbeddingMatrix& u, ColumnGradient* g,
                       std::string name, double margin, const SparseVector& q,
                       const SparseVector& pos, const SparseVector& neg) {
  HingeTerm t{std::move(name), margin - pair_score(m, u, q, pos) + pair_score(m, u, q, neg)};
  if (g && t.active()) add_pair_gradient(*g, u, q, pos - neg, -1.0);
  return t;
}

// max(0, margin + sign * s_Ot(q, y, y2)).
HingeTerm triple_term(const MemNNModel& m, const ExampleEnv& env, ColumnGradient* g,
                      std::string name, double margin, double sign, const SparseVector& q,
                      WriteTime x_time, int y, int y2, std::span<const Tokens* const> cond) {
  const EmbeddingMatrix& u = *m.output_time;
  const auto t = featurize_time(x_time, env.time(y), env.time(y2));
  const SparseVector z = with_time(env.memory(y, cond) - env.memory(y2, cond), m.layout, t);
  HingeTerm term{std::move(name), margin + sign * score_embedding(u, q, z)};
  if (g && term.active()) add_pair_gradient(*g, u, q, z, sign);
  return term;
}

HingeTerm response_term(const MemNNModel& m, const ExampleEnv& env, const SupervisedExample& ex,
                        const NegativeSample& neg, int o1, std::optional<int> o2, double margin,
                        Gradient* grad) {
  std::vector<const Tokens*> sup{env.tokens(o1)};
  if (m.flags.hops == 2 && o2 && *o2 != kNilSlot) sup.push_back(env.tokens(*o2));
  std::vector<const Tokens*> cond{&ex.question};
  cond.insert(cond.end(), sup.begin(), sup.end());
  const auto q = env.input(ex.question, sup);
  return ranking_term(m, m.response, grad ? &grad->response : nullptr, "response", margin, q,
                      env.word(ex.answer, cond), env.word(*neg.response, cond));
}

int pick_excluding(int n, const std::vector<int>& excluded, bool with_nil, std::mt19937_64& rng,
                   bool* found) {
  std::vector<int> pool;
  if (with_nil) pool.push_back(kNilSlot);
  for (int i = 0; i < n; ++i)
    if (std::find(excluded.begin(), excluded.end(), i) == excluded.end()) pool.push_back(i);
  *found = !pool.empty();
  if (pool.empty()) return 0;
  return pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
}

}  // namespace

void add_pair_gradient(ColumnGradient& g, const EmbeddingMatrix& u, const SparseVector& a,
                       const SparseVector& b, double scale) {
  const auto ua = u.embed(a);
  const auto ub = u.embed(b);
  const auto n = static_cast<std::size_t>(u.rows());
  auto add = [&](int col, double coef, const std::vector<double>& v) {
    auto& dst = g[col];
    if (dst.empty()) dst.assign(n, 0.0);
    for (std::size_t r = 0; r < n; ++r) dst[r] += coef * v[r];
  };
  for (const auto& e : a.entries()) add(e.index, scale * e.value, ub);
  for (const auto& e : b.entries()) add(e.index, scale * e.value, ua);
}

void apply_gradient(MemNNModel& m, const Gradient& g, double learning_rate) {
  auto apply = [&](EmbeddingMatrix& u, const ColumnGradient& cg) {
    for (const auto& [col, v] : cg) {
      auto c = u.column(col);
      for (std::size_t r = 0; r < c.size(); ++r) c[r] -= learning_rate * v[r];
    }
  };
  apply(m.output, g.output);
  apply(m.response, g.response);
  if (m.output_time) apply(*m.output_time, g.output_time);
}

std::optional<int> hop2_target(const MemNNModel& m, const SupervisedExample& ex) {
  if (m.flags.hops != 2) return std::nullopt;
  if (ex.supports.size() > 1) return ex.supports[1];
  if (m.flags.nil_support) return kNilSlot;
  return std::nullopt;
}

std::vector<bool> unseen_dropout(int vocab_size, double d_percent, std::mt19937_64& rng) {
  if (d_percent < 0.0 || d_percent > 100.0) throw Error("unseen_dropout: d must be in [0, 100]");
  std::vector<bool> out(static_cast<std::size_t>(vocab_size), false);
  if (d_percent == 0.0) return out;
  std::bernoulli_distribution coin(d_percent / 100.0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = coin(rng);
  return out;
}

NegativeSample sample_negatives(const MemNNModel& m, const SupervisedExample& ex,
                                double dropout_percent, std::mt19937_64& rng) {
  if (ex.supports.empty()) throw Error("sample_negatives: example has no supports");
  NegativeSample neg;
  const int o1 = ex.supports[0];
  bool ok = false;
  int f = pick_excluding(ex.memory_size, {o1}, false, rng, &ok);
  if (ok) neg.hop1 = f;

  if (auto o2 = hop2_target(m, ex)) {
    f = pick_excluding(ex.memory_size, {o1, *o2}, m.flags.nil_support && *o2 != kNilSlot, rng, &ok);
    if (ok) neg.hop2 = f;
  }

  const auto answer_id = m.vocab.find(ex.answer);
  std::vector<int> excluded;
  if (answer_id) excluded.push_back(*answer_id);
  f = pick_excluding(m.vocab.size(), excluded, false, rng, &ok);
  if (ok) neg.response = m.vocab.word(f);

  if (m.flags.unseen && dropout_percent > 0.0)
    neg.dropped = unseen_dropout(m.vocab.size(), dropout_percent, rng);
  return neg;
}

std::vector<HingeTerm> hinge_terms(const MemNNModel& m, const SupervisedExample& ex,
                                   const MemoryStore& store, const NegativeSample& neg,
                                   double margin, Gradient* grad) {
  ExampleEnv env(m, ex, store, neg);
  std::vector<HingeTerm> terms;
  ColumnGradient* g = grad ? &grad->output : nullptr;
  const Tokens& x = ex.question;
  const int o1 = ex.supports.at(0);
  const auto o2 = hop2_target(m, ex);

  if (neg.hop1) {
    const Tokens* cond[] = {&x};
    terms.push_back(ranking_term(m, m.output, g, "hop1", margin, env.input(x, {}),
                                 env.memory(o1, cond), env.memory(*neg.hop1, cond)));
  }
  if (o2 && neg.hop2) {
    const Tokens* sup[] = {env.tokens(o1)};
    const Tokens* cond[] = {&x, env.tokens(o1)};
    terms.push_back(ranking_term(m, m.output, g, "hop2", margin, env.input(x, sup),
                                 env.memory(*o2, cond), env.memory(*neg.hop2, cond)));
  }
  if (neg.response) terms.push_back(response_term(m, env, ex, neg, o1, o2, margin, grad));
  return terms;
}

std::vector<HingeTerm> train_time_terms(const MemNNModel& m, const SupervisedExample& ex,
                                        const MemoryStore& store, const NegativeSample& neg,
                                        double margin, Gradient* grad) {
  if (!m.output_time) throw Error("train_time_terms: model has no write-time matrix");
  ExampleEnv env(m, ex, store, neg);
  std::vector<HingeTerm> terms;
  ColumnGradient* g = grad ? &grad->output_time : nullptr;
  const Tokens& x = ex.question;
  const int o1 = ex.supports.at(0);
  const auto o2 = hop2_target(m, ex);

  if (neg.hop1) {
    const Tokens* cond[] = {&x};
    const auto q = env.input(x, {});
    terms.push_back(triple_term(m, env, g, "hop1_first", margin, -1.0, q, kQueryTime, o1,
                                *neg.hop1, cond));
    terms.push_back(triple_term(m, env, g, "hop1_second", margin, +1.0, q, kQueryTime,
                                *neg.hop1, o1, cond));
  }
  if (o2 && neg.hop2) {
    const Tokens* sup[] = {env.tokens(o1)};
    const Tokens* cond[] = {&x, env.tokens(o1)};
    const auto q = env.input(x, sup);
    const WriteTime xt = env.time(o1);
    terms.push_back(triple_term(m, env, g, "hop2_first", margin, -1.0, q, xt, *o2, *neg.hop2, cond));
    terms.push_back(triple_term(m, env, g, "hop2_second", margin, +1.0, q, xt, *neg.hop2, *o2, cond));
  }
  if (neg.response) terms.push_back(response_term(m, env, ex, neg, o1, o2, margin, grad));
  return terms;
}

double example_loss(const MemNNModel& m, const SupervisedExample& ex, const MemoryStore& store,
                    const NegativeSample& neg, double margin, Gradient* grad,
                    std::vector<HingeTerm>* terms) {
  auto t = m.flags.time ? train_time_terms(m, ex, store, neg, margin, grad)
                        : hinge_terms(m, ex, store, neg, margin, grad);
  double loss = 0.0;
  for (const auto& term : t) loss += term.value();
  if (terms) *terms = std::move(t);
  return loss;
}

EpochStats sgd_epoch(MemNNModel& m, const TrainingSet& data, const TrainConfig& cfg,
                     std::mt19937_64& rng) {
  if (data.examples.empty()) throw Error("sgd_epoch: empty dataset");
  std::vector<std::size_t> order(data.examples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);

  EpochStats stats;
  std::size_t active = 0;
  std::size_t total_terms = 0;
  std::vector<HingeTerm> terms;
  for (std::size_t i : order) {
    const auto& ex = data.examples[i];
    const auto neg = sample_negatives(m, ex, cfg.dropout_percent, rng);
    Gradient g;
    const double loss = example_loss(m, ex, data.store(ex), neg, cfg.margin, &g, &terms);
    if (!std::isfinite(loss)) {
      std::ostringstream msg;
      msg << "sgd_epoch: non-finite loss on example " << i << " (question '" << join(ex.question)
          << "')";
      throw Error(msg.str());
    }
    stats.mean_loss += loss;
    for (const auto& t : terms) active += t.active() ? 1u : 0u;
    total_terms += terms.size();
    if (cfg.learning_rate != 0.0) apply_gradient(m, g, cfg.learning_rate);
  }
  stats.mean_loss /= static_cast<double>(data.examples.size());
  stats.active_fraction =
      total_terms ? static_cast<double>(active) / static_cast<double>(total_terms) : 0.0;
  return stats;
}

GradientCheck finite_difference_check(const MemNNModel& m0, const SupervisedExample& ex,
                                      const MemoryStore& store, const NegativeSample& neg,
                                      double margin, double eps) {
  if (eps < 1e-7 || eps > 1e-4) throw Error("finite_difference_check: eps outside [1e-7, 1e-4]");
  Gradient g;
  std::vector<HingeTerm> terms;
  example_loss(m0, ex, store, neg, margin, &g, &terms);
  const double kink_tol = std::max(1e-4, 100.0 * eps);
  for (const auto& t : terms)
    if (std::abs(t.raw) < kink_tol) throw KinkError("hinge term '" + t.name + "' near its kink");

  MemNNModel m = m0;
  GradientCheck out;
  auto check = [&](EmbeddingMatrix& u, const ColumnGradient& cg) {
    for (const auto& [col, analytic] : cg) {
      for (int r = 0; r < u.rows(); ++r) {
        const double orig = u.at(r, col);
        u.at(r, col) = orig + eps;
        const double lp = example_loss(m, ex, store, neg, margin);
        u.at(r, col) = orig - eps;
        const double lm = example_loss(m, ex, store, neg, margin);
        u.at(r, col) = orig;
        const double numeric = (lp - lm) / (2.0 * eps);
        const double err = std::abs(analytic[static_cast<std::size_t>(r)] - numeric) /
                           std::max(1.0, std::abs(numeric));
        out.max_rel_error = std::max(out.max_rel_error, err);
        ++out.entries;
      }
    }
  };
  check(m.output, g.output);
  check(m.response, g.response);
  if (m.output_time) check(*m.output_time, g.output_time);
  return out;
}

// --- segmenter ---------------------------------------------------------------

SegmenterData segmenter_data(const std::vector<SegmentedStream>& streams) {
  std::set<Tokens> pos;
  std::set<Tokens> neg;
  for (const auto& stream : streams) {
    for (const auto& seg : stream) {
      const auto& t = seg.tokens;
      if (!seg.question) pos.insert(t);
      // Prefixes never include the closing "?" of a question.
      for (std::size_t len = 1; len < t.size(); ++len)
        neg.insert(Tokens(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(len)));
    }
  }
  SegmenterData data;
  data.positives.assign(pos.begin(), pos.end());
  for (const auto& n : neg)
    if (!pos.count(n)) data.negatives.push_back(n);
  return data;
}

namespace {

// One SGD step on max(0, margin - sign * seg(c)); sign = +1 for positives.
double segment_step(SegmenterParams& p, const SparseVector& f, double sign, double lr) {
  const auto uf = p.projection.embed(f);
  const double raw = p.margin - sign * dot(p.classifier, uf);
  if (raw <= 0.0) return 0.0;
  const std::vector<double> w = p.classifier;
  for (std::size_t r = 0; r < w.size(); ++r) p.classifier[r] += lr * sign * uf[r];
  for (const auto& e : f.entries()) {
    auto col = p.projection.column(e.index);
    for (std::size_t r = 0; r < w.size(); ++r) col[r] += lr * sign * e.value * w[r];
  }
  return raw;
}

}  // namespace

SegmenterParams train_segmenter(const SegmenterData& data, const Vocab& seg_vocab,
                                const TrainConfig& cfg) {
  if (data.positives.empty()) throw Error("train_segmenter: no positive segments");
  std::mt19937_64 rng(cfg.seed ^ 0x5E6u);
  SegmenterParams p{EmbeddingMatrix::gaussian(cfg.dim, seg_vocab.size(), MatrixRole::kSegmenter,
                                              cfg.init_stddev, rng),
                    std::vector<double>(static_cast<std::size_t>(cfg.dim)), cfg.margin};
  std::normal_distribution<double> init(0.0, cfg.init_stddev);
  for (auto& w : p.classifier) w = init(rng);

  std::vector<SparseVector> pos, neg;
  for (const auto& t : data.positives) pos.push_back(featurize_segment(t, seg_vocab));
  for (const auto& t : data.negatives) neg.push_back(featurize_segment(t, seg_vocab));

  std::vector<std::size_t> order(pos.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < cfg.segmenter_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      segment_step(p, pos[i], +1.0, cfg.learning_rate);
      if (!neg.empty()) {
        const auto j = std::uniform_int_distribution<std::size_t>(0, neg.size() - 1)(rng);
        segment_step(p, neg[j], -1.0, cfg.learning_rate);
      }
    }
  }
  return p;
}

double segmenter_loss(const SegmenterParams& p, const Vocab& seg_vocab, const SegmenterData& data) {
  double loss = 0.0;
  for (const auto& t : data.positives)
    loss += std::max(0.0, p.margin - score_segment(p, featurize_segment(t, seg_vocab)));
  for (const auto& t : data.negatives)
    loss += std::max(0.0, p.margin + score_segment(p, featurize_segment(t, seg_vocab)));
  return loss;
}

}  // namespace memnn
