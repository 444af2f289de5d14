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
#include <set>

#include "doctest.h"
#include "memnn/memory.hpp"
#include "memnn/simulator.hpp"

using namespace memnn;

TEST_CASE("store write order") {
  MemoryStore s;
  CHECK(s.write(tokenize("joe went kitchen")) == 0);
  CHECK(s.size() == 1);
  CHECK(s.write(tokenize("a")) == 1);
  CHECK(s.write(tokenize("b")) == 2);
  CHECK(s.slot(2).write_index == 2);
  CHECK_THROWS_AS(s.slot(3), Error);

  sim::DatasetConfig cfg;
  cfg.story_length = 7000;
  const auto d = sim::generate_dataset(cfg);
  MemoryStore big;
  for (const auto& st : d.stories)
    for (const auto& s2 : st.statements) big.write(s2.tokens);
  CHECK(big.size() == 7000);
  CHECK(big.write(tokenize("one more")) == 7000);
}

TEST_CASE("word hash") {
  const MemoryStore s({tokenize("a b"), tokenize("b c"), tokenize("a a")});
  const Vocab v = Vocab::from_words({"a", "b", "c", "d"});
  const auto h = build_word_hash(s, v);
  CHECK(h.bucket(v.id("b")) == std::vector<int>{0, 1});
  CHECK(h.bucket(v.id("a")) == std::vector<int>{0, 2});
  CHECK(h.bucket(v.id("c")) == std::vector<int>{1});
  CHECK(lookup_candidates(s, &h, tokenize("d"), v).empty());
  CHECK(lookup_candidates(s, &h, tokenize("zzz"), v).empty());
  CHECK(lookup_candidates(s, &h, tokenize("c a"), v) == std::vector<int>{0, 1, 2});
  CHECK(lookup_candidates(s, nullptr, tokenize("d"), v) == std::vector<int>{0, 1, 2});
}

TEST_CASE("word hash on a simulated store matches a linear scan") {
  sim::DatasetConfig cfg;
  cfg.mode = sim::ActMode::kActorObject;
  cfg.n_statements = 2000;
  cfg.n_questions = 500;
  cfg.story_length = 2000;
  const auto d = sim::generate_dataset(cfg);
  MemoryStore s;
  std::vector<Tokens> text;
  for (const auto& st : d.stories)
    for (const auto& x : st.statements) {
      s.write(x.tokens);
      text.push_back(x.tokens);
    }
  const Vocab v = Vocab::build(text);
  const auto h = build_word_hash(s, v);
  for (const char* w : {"milk", "kitchen", "joe", "dropped"}) {
    std::vector<int> scan;
    for (int i = 0; i < s.size(); ++i)
      if (std::count(text[static_cast<std::size_t>(i)].begin(), text[static_cast<std::size_t>(i)].end(), w))
        scan.push_back(i);
    CHECK(!scan.empty());
    CHECK(h.bucket(v.id(w)) == scan);
  }
}

TEST_CASE("k-means") {
  SUBCASE("two well separated pairs") {
    const auto r = kmeans({{0.0}, {0.1}, {10.0}, {10.1}}, 2, 25, 1);
    std::vector<double> c{r.centroids[0][0], r.centroids[1][0]};
    std::sort(c.begin(), c.end());
    CHECK(c[0] == doctest::Approx(0.05));
    CHECK(c[1] == doctest::Approx(10.05));
    CHECK(r.distortion == doctest::Approx(0.01));
  }
  SUBCASE("one cluster per point") {
    const auto r = kmeans({{0.0, 1.0}, {2.0, 0.0}, {5.0, 5.0}}, 3, 10, 4);
    CHECK(r.distortion == doctest::Approx(0.0));
    CHECK(std::set<int>(r.assignment.begin(), r.assignment.end()).size() == 3);
  }
  SUBCASE("identical points") {
    const auto r = kmeans({{3.0, 4.0}, {3.0, 4.0}, {3.0, 4.0}}, 1, 5, 2);
    CHECK(r.centroids[0] == std::vector<double>{3.0, 4.0});
  }
  SUBCASE("bad k") {
    CHECK_THROWS_AS(kmeans({{1.0}}, 2, 5, 1), Error);
    CHECK_THROWS_AS(kmeans({{1.0}}, 0, 5, 1), Error);
  }
}

TEST_CASE("property: Lloyd iterations never increase distortion") {
  std::mt19937_64 rng(21);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::vector<double>> pts(60, std::vector<double>(4));
    for (auto& p : pts)
      for (auto& x : p) x = g(rng);
    const auto r = kmeans(pts, 5, 20, static_cast<std::uint64_t>(trial));
    for (std::size_t i = 1; i < r.distortion_history.size(); ++i)
      CHECK(r.distortion_history[i] <= r.distortion_history[i - 1] + 1e-9);
    CHECK(r.distortion == doctest::Approx(r.distortion_history.back()));
  }
}

TEST_CASE("cluster hash") {
  const Vocab v = Vocab::from_words({"a", "b", "c", "d", "e"});
  const FeatureLayout l(v.size(), LayoutKind::kBase, false);
  std::mt19937_64 rng(8);
  const auto u = EmbeddingMatrix::gaussian(6, l.dim(), MatrixRole::kOutput, 1.0, rng);
  const MemoryStore s({tokenize("a b"), tokenize("c"), tokenize("d e"), tokenize("b d")});

  SUBCASE("one cluster keeps everything") {
    const auto h = build_cluster_hash(s, v, u, l, 1, 3);
    CHECK(lookup_candidates(s, &h, tokenize("e"), v) == std::vector<int>{0, 1, 2, 3});
  }
  SUBCASE("slots sharing a word share a bucket") {
    const auto h = build_cluster_hash(s, v, u, l, 3, 3);
    for (const char* w : {"a", "b", "c", "d", "e"}) {
      const auto c = lookup_candidates(s, &h, tokenize(w), v);
      const auto wh = build_word_hash(s, v);
      for (int slot : wh.bucket(v.id(w))) CHECK(std::binary_search(c.begin(), c.end(), slot));
    }
  }
  SUBCASE("with one cluster per word it covers the word hash") {
    const auto h = build_cluster_hash(s, v, u, l, v.size(), 3);
    const auto wh = build_word_hash(s, v);
    for (const char* q : {"a", "c e", "b", "zz"}) {
      const auto cc = lookup_candidates(s, &h, tokenize(q), v);
      const auto wc = lookup_candidates(s, &wh, tokenize(q), v);
      CHECK(std::includes(cc.begin(), cc.end(), wc.begin(), wc.end()));
    }
  }
  SUBCASE("reindexing keeps the word map") {
    const auto h = build_cluster_hash(s, v, u, l, 2, 3);
    const MemoryStore other({tokenize("e"), tokenize("a")});
    const auto r = h.reindexed(other, v);
    CHECK(r.word_bucket() == h.word_bucket());
    CHECK(lookup_candidates(other, &r, tokenize("e"), v).front() == 0);
  }
  CHECK_THROWS_AS(build_cluster_hash(MemoryStore{}, v, u, l, 2, 1), Error);
}
