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
#include "memnn/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <thread>

namespace memnn::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<const sim::Question*> ordered_questions(const sim::Story& story) {
  std::vector<const sim::Question*> qs;
  for (const auto& q : story.questions) qs.push_back(&q);
  std::stable_sort(qs.begin(), qs.end(), [](const sim::Question* a, const sim::Question* b) {
    return a->position < b->position;
  });
  return qs;
}

bool all_punctuation(const Tokens& t) {
  return std::all_of(t.begin(), t.end(), [](const std::string& w) { return is_punctuation(w); });
}

bool supports_match(const MemNNModel& m, const std::vector<int>& predicted,
                    const std::vector<int>& gold) {
  if (predicted.empty() || gold.empty() || predicted[0] != gold[0]) return false;
  if (m.flags.hops == 1) return true;
  return predicted == gold;
}

// Runs fn(i) for i in [0, n) on `threads` workers; rethrows the first error.
template <class Fn>
void parallel_for(std::size_t n, int threads, Fn fn) {
  unsigned workers = threads > 0 ? static_cast<unsigned>(threads) : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  auto work = [&] {
    try {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) fn(i);
    } catch (...) {
      std::lock_guard lock(error_mu);
      if (!error) error = std::current_exception();
      next = n;
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

// --- data conversion ------------------------------------------------------------

TrainingSet to_training_set(const std::vector<sim::Story>& stories) {
  TrainingSet out;
  for (const auto& story : stories) {
    std::vector<Tokens> statements;
    for (const auto& s : story.statements) statements.push_back(s.tokens);
    out.stories.emplace_back(statements);
    const int id = static_cast<int>(out.stories.size()) - 1;
    for (const auto* q : ordered_questions(story)) {
      for (int s : q->supports)
        if (s < 0 || s >= q->position) throw Error("to_training_set: support not before its question");
      out.examples.push_back({q->tokens, q->answer, q->supports, id, q->position});
    }
  }
  return out;
}

TrainingSet to_stream_training_set(const std::vector<sim::Story>& stories,
                                   const std::vector<sim::JoinedStream>& streams) {
  if (stories.size() != streams.size()) throw Error("stream training set: story/stream count mismatch");
  TrainingSet out;
  for (std::size_t i = 0; i < stories.size(); ++i) {
    const auto qs = ordered_questions(stories[i]);
    std::vector<Tokens> statements;
    std::size_t qi = 0;
    const int id = static_cast<int>(i);
    for (const auto& item : streams[i].items) {
      if (!item.question) {
        statements.push_back(item.tokens);
        continue;
      }
      if (qi >= qs.size()) throw Error("stream training set: more questions in stream than in story");
      const auto& q = *qs[qi++];
      if (q.position != static_cast<int>(statements.size()))
        throw Error("stream training set: question position does not match the stream");
      out.examples.push_back({item.tokens, q.answer, q.supports, id, q.position});
    }
    if (qi != qs.size()) throw Error("stream training set: questions missing from stream");
    out.stories.emplace_back(statements);
  }
  return out;
}

Vocab training_vocab(const TrainingSet& data) {
  std::vector<Tokens> corpus;
  for (const auto& store : data.stories)
    for (const auto& slot : store.slots()) corpus.push_back(slot.tokens);
  for (const auto& ex : data.examples) {
    corpus.push_back(ex.question);
    corpus.push_back({ex.answer});
  }
  return Vocab::build(corpus);
}

std::vector<sim::JoinedStream> join_stories(const std::vector<sim::Story>& stories,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<sim::JoinedStream> out;
  out.reserve(stories.size());
  for (const auto& s : stories) out.push_back(sim::join_story(s, rng));
  return out;
}

std::vector<SegmentedStream> gold_segments(const std::vector<sim::JoinedStream>& streams) {
  std::vector<SegmentedStream> out;
  for (const auto& s : streams) {
    SegmentedStream seg;
    for (const auto& item : s.items) seg.push_back({item.tokens, item.question});
    out.push_back(std::move(seg));
  }
  return out;
}

// --- train / eval ---------------------------------------------------------------

TrainResult run_train(const ExperimentConfig& cfg, const TrainingSet& data, std::ostream* csv) {
  return run_train(cfg, data, training_vocab(data), csv);
}

TrainResult run_train(const ExperimentConfig& cfg, const TrainingSet& data, const Vocab& vocab,
                      std::ostream* csv) {
  const auto t0 = Clock::now();
  TrainResult r{MemNNModel::create(vocab, cfg.flags, cfg.train.dim, cfg.train.init_stddev,
                                   cfg.train.seed),
                {}, 0.0};
  std::mt19937_64 rng(cfg.train.seed * 0x9E3779B97F4A7C15ull + 1);
  if (csv) *csv << "epoch,mean_loss,train_acc,active_fraction\n";
  for (int e = 0; e < cfg.train.epochs; ++e) {
    r.curve.push_back(sgd_epoch(r.model, data, cfg.train, rng));
    if (!csv) continue;
    // Training accuracy costs a full inference pass, so only the CSV path pays it.
    const double acc = run_eval(r.model, data, nullptr, cfg.threads).accuracy();
    *csv << e + 1 << ',' << std::setprecision(6) << r.curve.back().mean_loss << ',' << acc << ','
         << r.curve.back().active_fraction << '\n';
  }
  r.seconds = seconds_since(t0);
  return r;
}

double EvalReport::accuracy() const {
  if (records.empty()) return 0.0;
  const auto ok = std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(records.size());
}

double EvalReport::support_accuracy() const {
  if (records.empty()) return 0.0;
  const auto ok = std::count_if(records.begin(), records.end(),
                                [](const auto& r) { return r.supports_correct; });
  return 100.0 * static_cast<double>(ok) / static_cast<double>(records.size());
}

double EvalReport::mean_candidates() const {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) s += r.candidates;
  return s / static_cast<double>(records.size());
}

double EvalReport::mean_memory() const {
  if (records.empty()) return 0.0;
  double s = 0.0;
  for (const auto& r : records) s += r.memory;
  return s / static_cast<double>(records.size());
}

std::map<std::string, KindTally> EvalReport::by_kind() const {
  std::map<std::string, KindTally> out;
  for (const auto& r : records) {
    auto& t = out[sim::question_kind_name(r.kind)];
    ++t.total;
    t.correct += r.correct ? 1 : 0;
  }
  return out;
}

void EvalReport::print(std::ostream& out) const {
  out << std::fixed << std::setprecision(2) << "questions " << records.size() << "\naccuracy "
      << accuracy() << "%\nsupport_accuracy " << support_accuracy() << "%\nmean_candidates "
      << mean_candidates() << " of " << mean_memory() << "\n";
  for (const auto& [kind, t] : by_kind())
    out << "  " << kind << ' ' << t.correct << '/' << t.total << ' '
        << 100.0 * t.correct / std::max(1, t.total) << "%\n";
  out << "seconds " << seconds << '\n';
  out.unsetf(std::ios::floatfield);
}

std::optional<HashIndex> prototype_index(const MemNNModel& m, Hashing hashing, int clusters,
                                         std::uint64_t seed) {
  if (hashing == Hashing::kNone) return std::nullopt;
  // Any non-empty store will do; only the word-to-bucket map is kept.
  MemoryStore probe(std::vector<Tokens>{{m.vocab.word(0)}});
  if (hashing == Hashing::kWord) return build_word_hash(probe, m.vocab);
  return build_cluster_hash(probe, m.vocab, m.output, m.layout, clusters, seed);
}

EvalReport run_eval(const MemNNModel& m, const TrainingSet& data, const HashIndex* prototype,
                    int threads) {
  const auto t0 = Clock::now();
  EvalReport report;
  report.records.resize(data.examples.size());
  parallel_for(data.examples.size(), threads, [&](std::size_t i) {
    const auto& ex = data.examples[i];
    const auto& full = data.store(ex);
    std::vector<Tokens> visible;
    for (int s = 0; s < ex.memory_size; ++s) visible.push_back(full.tokens(s));
    const MemoryStore store(visible);
    QuestionRecord& r = report.records[i];
    r.expected = ex.answer;
    r.kind = infer_kind(ex.question);
    r.memory = store.size();
    if (store.empty()) return;
    std::optional<HashIndex> index;
    if (prototype) index = prototype->reindexed(store, m.vocab);
    const Answer a = answer(m, ex.question, store, index ? &*index : nullptr);
    r.predicted = a.word;
    r.correct = a.word == ex.answer;
    r.supports_correct = supports_match(m, a.supports, ex.supports);
    r.candidates = a.candidates;
  });
  report.seconds = seconds_since(t0);
  return report;
}

// --- stream mode ----------------------------------------------------------------

double BoundaryScore::precision() const {
  return predicted ? static_cast<double>(true_positive) / predicted : 0.0;
}
double BoundaryScore::recall() const {
  return gold ? static_cast<double>(true_positive) / gold : 0.0;
}
double BoundaryScore::f1() const {
  const double p = precision();
  const double r = recall();
  return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

BoundaryScore boundary_score(const MemNNModel& m, const std::vector<sim::JoinedStream>& streams) {
  BoundaryScore score;
  for (const auto& s : streams) {
    std::vector<std::size_t> gold;
    for (const auto& item : s.items)
      if (!item.question) gold.push_back(item.end);
    const auto res = segment_stream(m, s.tokens);
    for (std::size_t k = 0; k < res.segments.size(); ++k) {
      const auto& seg = res.segments[k];
      if (seg.question) continue;
      if (res.trailing && k + 1 == res.segments.size() && all_punctuation(seg.tokens)) continue;
      ++score.predicted;
      if (std::binary_search(gold.begin(), gold.end(), seg.end)) ++score.true_positive;
    }
    score.gold += static_cast<int>(gold.size());
  }
  return score;
}

EvalReport run_stream_eval(const MemNNModel& m, const std::vector<sim::Story>& stories,
                           const std::vector<sim::JoinedStream>& streams) {
  if (stories.size() != streams.size()) throw Error("stream eval: story/stream count mismatch");
  const auto t0 = Clock::now();
  EvalReport report;
  std::vector<std::vector<QuestionRecord>> per_story(stories.size());
  parallel_for(stories.size(), 0, [&](std::size_t i) {
    const auto qs = ordered_questions(stories[i]);
    const auto res = segment_stream(m, streams[i].tokens);
    MemoryStore store;
    std::size_t qi = 0;
    for (std::size_t k = 0; k < res.segments.size(); ++k) {
      const auto& seg = res.segments[k];
      if (!seg.question) {
        if (res.trailing && k + 1 == res.segments.size() && all_punctuation(seg.tokens)) continue;
        store.write(seg.tokens);
        continue;
      }
      if (qi >= qs.size()) throw Error("stream eval: more questions in stream than in story");
      const auto& q = *qs[qi++];
      QuestionRecord r;
      r.expected = q.answer;
      r.kind = infer_kind(q.tokens);
      r.memory = store.size();
      if (!store.empty()) {
        const Answer a = answer(m, seg.tokens, store);
        r.predicted = a.word;
        r.correct = a.word == q.answer;
        r.supports_correct = supports_match(m, a.supports, q.supports);
        r.candidates = a.candidates;
      }
      per_story[i].push_back(std::move(r));
    }
    if (qi != qs.size()) throw Error("stream eval: questions missing from stream");
  });
  for (auto& v : per_story)
    for (auto& r : v) report.records.push_back(std::move(r));
  report.seconds = seconds_since(t0);
  return report;
}

void attach_segmenter(MemNNModel& m, const std::vector<sim::JoinedStream>& streams,
                      const TrainConfig& cfg) {
  std::vector<Tokens> corpus;
  for (const auto& s : streams) corpus.push_back(s.tokens);
  Vocab seg_vocab = Vocab::build(corpus);
  m.segmenter = train_segmenter(segmenter_data(gold_segments(streams)), seg_vocab, cfg);
  m.segmenter_vocab = std::move(seg_vocab);
}

// --- experiments ----------------------------------------------------------------

namespace {

constexpr std::uint64_t kJoinSalt = 0x6A6F696EULL;

sim::Split make_split(const ExperimentConfig& cfg) {
  auto split = sim::generate_split(cfg.dataset_config(), cfg.train_seed, cfg.test_seed);
  if (cfg.train_questions > 0)
    split.train = sim::subsample_questions(split.train, cfg.train_questions, cfg.train_seed);
  return split;
}

Experiment train_and_eval(const ExperimentConfig& cfg, sim::Split split, std::ostream* csv) {
  if (cfg.input == InputMode::kSentence) {
    auto trained = run_train(cfg, to_training_set(split.train.stories), csv);
    const auto proto = prototype_index(trained.model, cfg.hashing, cfg.clusters, cfg.train.seed);
    auto report = run_eval(trained.model, to_training_set(split.test.stories),
                           proto ? &*proto : nullptr, cfg.threads);
    return {std::move(split), std::move(trained), std::move(report), std::nullopt};
  }
  const auto train_streams = join_stories(split.train.stories, cfg.train_seed ^ kJoinSalt);
  const auto test_streams = join_stories(split.test.stories, cfg.test_seed ^ kJoinSalt);
  auto trained = run_train(cfg, to_stream_training_set(split.train.stories, train_streams), csv);
  attach_segmenter(trained.model, train_streams, cfg.train);
  auto boundaries = boundary_score(trained.model, test_streams);
  auto report = run_stream_eval(trained.model, split.test.stories, test_streams);
  return {std::move(split), std::move(trained), std::move(report), boundaries};
}

}  // namespace

Experiment run_experiment(const ExperimentConfig& cfg, std::ostream* csv) {
  cfg.validate();
  return train_and_eval(cfg, make_split(cfg), csv);
}

std::vector<CurvePoint> learning_curve(const ExperimentConfig& cfg, const std::vector<int>& sizes,
                                       std::ostream* csv) {
  cfg.validate();
  const auto full = sim::generate_split(cfg.dataset_config(), cfg.train_seed, cfg.test_seed);
  if (csv) *csv << "questions,accuracy,seconds\n";
  std::vector<CurvePoint> out;
  for (int n : sizes) {
    const auto t0 = Clock::now();
    sim::Split split{sim::subsample_questions(full.train, n, cfg.train_seed), full.test};
    const auto e = train_and_eval(cfg, std::move(split), nullptr);
    out.push_back({n, e.report.accuracy(), seconds_since(t0)});
    if (csv)
      *csv << n << ',' << std::fixed << std::setprecision(2) << out.back().accuracy << ','
           << out.back().seconds << '\n';
  }
  return out;
}

}  // namespace memnn::harness
