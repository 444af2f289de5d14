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
#include <algorithm>
#include <random>

#include "doctest.h"
#include "memnn/training.hpp"

using namespace memnn;

namespace {

struct Tiny {
  MemNNModel model;
  MemoryStore store;
  SupervisedExample ex;
  TrainingSet set;
};

// Two memories and a two-word answer space, so every negative is forced.
Tiny tiny(int hops, bool time, std::uint64_t seed, double stddev = 0.5) {
  ModelFlags f;
  f.hops = hops;
  f.time = time;
  f.nil_support = false;
  Tiny t{MemNNModel::create(Vocab::from_words({"kitchen", "office"}), f, 2, stddev, seed),
         MemoryStore({{"kitchen"}, {"office"}}),
         {{"office"}, "kitchen", {0}, 0, 2},
         {}};
  if (hops == 2) t.ex.supports = {0, 1};
  t.set.stories = {t.store};
  t.set.examples = {t.ex};
  return t;
}

NegativeSample forced(const Tiny& t) {
  NegativeSample n;
  n.hop1 = 1;
  n.response = "office";
  return n;
}

// Random store and labels over a small vocabulary.
struct Random {
  MemNNModel model;
  MemoryStore store;
  SupervisedExample ex;
};

Random random_instance(std::mt19937_64& rng, bool time, bool match, double lambda) {
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f"};
  ModelFlags f;
  f.hops = 2;
  f.time = time;
  f.match = match;
  f.lambda = lambda;
  Random r{MemNNModel::create(Vocab::from_words(words), f, 3, 0.7, rng()), {}, {}};
  const int n = 4 + static_cast<int>(rng() % 4);
  for (int i = 0; i < n; ++i) {
    Tokens t(1 + rng() % 3);
    for (auto& w : t) w = words[rng() % words.size()];
    r.store.write(t);
  }
  r.ex.question = {words[rng() % words.size()], words[rng() % words.size()]};
  r.ex.answer = words[rng() % words.size()];
  const int o1 = static_cast<int>(rng() % static_cast<unsigned>(n));
  int o2 = static_cast<int>(rng() % static_cast<unsigned>(n));
  if (o2 == o1) o2 = (o1 + 1) % n;
  r.ex.supports = {o1, o2};
  r.ex.memory_size = n;
  return r;
}

}  // namespace

TEST_CASE("all-zero embeddings put every term at the margin") {
  for (int hops : {1, 2}) {
    auto t = tiny(hops, false, 1, 0.0);
    t.store.write({"office", "kitchen"});
    auto neg = forced(t);
    if (hops == 2) neg.hop2 = 2;
    const auto terms = hinge_terms(t.model, t.ex, t.store, neg, 0.1);
    CHECK(terms.size() == static_cast<std::size_t>(hops + 1));
    for (const auto& term : terms) CHECK(term.raw == doctest::Approx(0.1));
  }
}

TEST_CASE("a satisfied margin contributes nothing") {
  auto t = tiny(1, false, 1, 0.0);
  auto& u = t.model.output;
  u.at(0, t.model.layout.index(Region::kXInput, 1)) = 1.0;
  u.at(0, t.model.layout.index(Region::kYWords, 0)) = 1.0;
  auto& r = t.model.response;
  r.at(0, t.model.layout.index(Region::kXInput, 1)) = 1.0;
  r.at(0, t.model.layout.index(Region::kYWords, 0)) = 1.0;
  Gradient g;
  const double loss = example_loss(t.model, t.ex, t.store, forced(t), 0.1, &g);
  CHECK(loss == 0.0);
  for (const auto* cg : {&g.output, &g.response})
    for (const auto& [col, v] : *cg)
      for (double x : v) CHECK(x == 0.0);
}

TEST_CASE("zero learning rate leaves the model unchanged") {
  auto t = tiny(2, true, 3);
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  const auto before = t.model.output;
  std::mt19937_64 rng(1);
  sgd_epoch(t.model, t.set, cfg, rng);
  CHECK(t.model.output == before);
}

TEST_CASE("one epoch does not increase a lone example's loss") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    for (bool time : {false, true}) {
      auto t = tiny(2, time, seed);
      const double before = example_loss(t.model, t.ex, t.store, forced(t), 0.1);
      TrainConfig cfg;
      cfg.dropout_percent = 0.0;
      std::mt19937_64 rng(seed);
      sgd_epoch(t.model, t.set, cfg, rng);
      const double after = example_loss(t.model, t.ex, t.store, forced(t), 0.1);
      CHECK(after <= before + 1e-12);
    }
  }
}

TEST_CASE("sgd is deterministic in the seed") {
  auto a = tiny(2, true, 5);
  auto b = tiny(2, true, 5);
  TrainConfig cfg;
  std::mt19937_64 ra(9), rb(9);
  for (int e = 0; e < 3; ++e) {
    sgd_epoch(a.model, a.set, cfg, ra);
    sgd_epoch(b.model, b.set, cfg, rb);
  }
  CHECK(a.model.output == b.model.output);
  CHECK(*a.model.output_time == *b.model.output_time);
}

TEST_CASE("time objective without age weights doubles the plain hinge") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    auto r = random_instance(rng, true, false, 0.0);
    auto& ut = *r.model.output_time;
    ut = r.model.output;
    for (int j = 0; j < 3; ++j)
      for (int i = 0; i < ut.rows(); ++i) ut.at(i, r.model.layout.time_offset() + j) = 0.0;
    NegativeSample n;
    n.hop1 = (r.ex.supports[0] + 1) % r.store.size();
    const auto plain = hinge_terms(r.model, r.ex, r.store, n, 0.1);
    const auto timed = train_time_terms(r.model, r.ex, r.store, n, 0.1);
    REQUIRE(timed.size() == 2);
    CHECK(timed[0].raw + timed[1].raw == doctest::Approx(2.0 * plain[0].raw));
  }
}

TEST_CASE("ordered scores satisfy every triple term") {
  auto t = tiny(2, true, 1, 0.0);
  t.store.write({"kitchen", "kitchen"});
  auto& u = *t.model.output_time;
  const auto& l = t.model.layout;
  // Hop 1 (x = office): kitchen 1 against office 0.
  // Hop 2 (x = office, support kitchen): office 5 against the kitchen pair 2.
  u.at(0, l.index(Region::kXInput, 1)) = 1.0;
  u.at(0, l.index(Region::kYWords, 0)) = 1.0;
  u.at(1, l.index(Region::kYWords, 1)) = 1.0;
  u.at(1, l.index(Region::kXSupport, 0)) = 5.0;
  auto neg = forced(t);
  neg.hop2 = 2;
  const auto terms = train_time_terms(t.model, t.ex, t.store, neg, 0.1);
  CHECK(terms.size() == 5);
  for (int i = 0; i < 4; ++i) CHECK_FALSE(terms[static_cast<std::size_t>(i)].active());

  SUBCASE("zero margin only fires on a strict misordering") {
    auto z = tiny(2, true, 1, 0.0);
    for (const auto& term : train_time_terms(z.model, z.ex, z.store, forced(z), 0.0))
      CHECK_FALSE(term.active());
  }
}

TEST_CASE("finite differences agree with the analytic gradient") {
  std::mt19937_64 rng(2024);
  double worst = 0.0;
  int checked = 0;
  for (bool time : {false, true}) {
    for (int trial = 0; trial < 100; ++trial) {
      auto r = random_instance(rng, time, trial % 3 == 0, trial % 4 == 0 ? 0.3 : 0.0);
      std::mt19937_64 nrng(rng());
      for (int attempt = 0; attempt < 10; ++attempt) {
        const auto neg = sample_negatives(r.model, r.ex, 0.0, nrng);
        try {
          const auto c = finite_difference_check(r.model, r.ex, r.store, neg, 0.1);
          worst = std::max(worst, c.max_rel_error);
          ++checked;
          break;
        } catch (const KinkError&) {
        }
      }
    }
  }
  CHECK(checked >= 190);
  CHECK(worst <= 1e-5);
}

TEST_CASE("negatives never hit the labels") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto r = random_instance(rng, trial % 2 == 0, false, 0.0);
    const auto n = sample_negatives(r.model, r.ex, 0.0, rng);
    REQUIRE(n.hop1.has_value());
    CHECK(*n.hop1 != r.ex.supports[0]);
    REQUIRE(n.hop2.has_value());
    CHECK(*n.hop2 != r.ex.supports[1]);
    CHECK(*n.hop2 != r.ex.supports[0]);
    REQUIRE(n.response.has_value());
    CHECK(*n.response != r.ex.answer);
  }
}

TEST_CASE("degenerate store skips the term") {
  ModelFlags f;
  f.hops = 1;
  auto m = MemNNModel::create(Vocab::from_words({"a"}), f, 2, 0.1, 1);
  const SupervisedExample ex{{"a"}, "a", {0}, 0, 1};
  std::mt19937_64 rng(1);
  const auto n = sample_negatives(m, ex, 0.0, rng);
  CHECK_FALSE(n.hop1.has_value());
  CHECK_FALSE(n.response.has_value());
  CHECK(hinge_terms(m, ex, MemoryStore({{"a"}}), n, 0.1).empty());
}

TEST_CASE("unseen dropout rate") {
  std::mt19937_64 rng(12);
  CHECK(unseen_dropout(50, 0.0, rng) == std::vector<bool>(50, false));
  CHECK(unseen_dropout(50, 100.0, rng) == std::vector<bool>(50, true));
  const auto d = unseen_dropout(10000, 20.0, rng);
  const double frac = static_cast<double>(std::count(d.begin(), d.end(), true)) / 10000.0;
  CHECK(frac == doctest::Approx(0.20).epsilon(0.1));
  CHECK_THROWS_AS(unseen_dropout(5, 101.0, rng), Error);
}

TEST_CASE("segmenter data") {
  const std::vector<SegmentedStream> streams{
      {{tokenize("bill went to the kitchen"), false}, {tokenize("where is bill ?"), true}}};
  const auto d = segmenter_data(streams);
  CHECK(d.positives == std::vector<Tokens>{tokenize("bill went to the kitchen")});
  CHECK(d.negatives.size() == 4 + 3);
  CHECK(std::find(d.negatives.begin(), d.negatives.end(), tokenize("bill went to the")) !=
        d.negatives.end());
}

TEST_CASE("segmenter learns a single statement") {
  const Tokens s = tokenize("bill is in the kitchen");
  const Vocab sv = Vocab::build({s});
  SegmenterData d;
  d.positives = {s};
  for (std::size_t len = 1; len < s.size(); ++len)
    d.negatives.emplace_back(s.begin(), s.begin() + static_cast<std::ptrdiff_t>(len));
  TrainConfig cfg;
  cfg.dim = 10;
  cfg.segmenter_epochs = 500;
  cfg.learning_rate = 0.05;
  const auto p = train_segmenter(d, sv, cfg);
  CHECK(score_segment(p, featurize_segment(s, sv)) > p.margin);
  for (const auto& n : d.negatives) CHECK(score_segment(p, featurize_segment(n, sv)) <= p.margin);

  SUBCASE("a zero segmenter leaves every term at the margin") {
    SegmenterParams z{EmbeddingMatrix(3, sv.size(), MatrixRole::kSegmenter), {0, 0, 0}, 5.0};
    CHECK(segmenter_loss(z, sv, d) == doctest::Approx(5.0 * (1 + 4)));
  }
  CHECK_THROWS_AS(train_segmenter({}, sv, cfg), Error);
}
