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
#include <random>
#include <sstream>

#include "doctest.h"
#include "memnn/features.hpp"

using namespace memnn;

namespace {

std::vector<Tokens> corpus(std::initializer_list<const char*> lines) {
  std::vector<Tokens> out;
  for (const char* l : lines) out.push_back(tokenize(l));
  return out;
}

int count_in(const SparseVector& v, const FeatureLayout& layout, Region r) {
  int n = 0;
  for (const auto& e : v.entries())
    if (layout.region_of(e.index) == r) ++n;
  return n;
}

}  // namespace

TEST_CASE("tokenize splits punctuation and lowercases") {
  CHECK(tokenize("Where is Joe now?") == Tokens{"where", "is", "joe", "now", "?"});
  CHECK(tokenize("a; b, then c.") == Tokens{"a", ";", "b", ",", "then", "c", "."});
  CHECK(tokenize("   ").empty());
}

TEST_CASE("vocab") {
  const Vocab v = Vocab::build(corpus({"joe went kitchen", "joe went office"}));
  CHECK(v.size() == 4);
  CHECK(v.id("joe") == 0);
  CHECK(v.id("office") == 3);
  CHECK_THROWS_AS(Vocab::build({}), Error);
  CHECK_THROWS_AS(v.id("bill"), Error);
  CHECK_FALSE(v.find("bill").has_value());

  SUBCASE("rebuild is identical") {
    CHECK(Vocab::build(corpus({"joe went kitchen", "joe went office"})) == v);
  }
  SUBCASE("text round trip") {
    std::stringstream s;
    v.save(s);
    CHECK(s.str() == "joe\nwent\nkitchen\noffice\n");
    CHECK(Vocab::load(s) == v);
  }
}

TEST_CASE("layout sizes") {
  CHECK(FeatureLayout(10, LayoutKind::kBase, false).dim() == 30);
  CHECK(FeatureLayout(10, LayoutKind::kContext, false).dim() == 70);
  CHECK(FeatureLayout(10, LayoutKind::kMatch, true).dim() == 103);

  const FeatureLayout base(4, LayoutKind::kBase, true);
  CHECK(base.offset(Region::kXSupport) == 8);
  CHECK(base.time_offset() == 12);
  CHECK_THROWS_AS(base.offset(Region::kLeftCtx), Error);
  CHECK_THROWS_AS(FeatureLayout(4, LayoutKind::kBase, false).time_offset(), Error);
  CHECK_FALSE(base.region_of(13).has_value());
}

TEST_CASE("regions tile the non-time dims") {
  for (auto kind : {LayoutKind::kBase, LayoutKind::kContext, LayoutKind::kMatch}) {
    const FeatureLayout l(7, kind, true);
    std::vector<int> owner(static_cast<std::size_t>(l.dim()), -1);
    for (int r = 0; r < l.region_count(); ++r) {
      const int off = l.offset(static_cast<Region>(r));
      for (int i = off; i < off + 7; ++i) {
        CHECK(owner[static_cast<std::size_t>(i)] == -1);
        owner[static_cast<std::size_t>(i)] = r;
      }
    }
    for (int i = 0; i < l.dim() - 3; ++i) CHECK(owner[static_cast<std::size_t>(i)] >= 0);
    CHECK(l.time_offset() == l.dim() - 3);
  }
}

TEST_CASE("sparse vectors") {
  const auto v = SparseVector::from_entries({{4, 1.0}, {1, 2.0}, {4, 1.0}, {2, 0.0}});
  CHECK(v.entries() == std::vector<SparseVector::Entry>{{1, 2.0}, {4, 2.0}});
  CHECK(v.extent() == 5);
  const auto w = SparseVector::from_entries({{4, 3.0}, {7, 1.0}});
  CHECK(v.dot(w) == 6.0);
  CHECK((v - v).empty());
  CHECK((v + w).get(4) == 5.0);
  CHECK(v.scaled(0.5).get(1) == 1.0);
}

TEST_CASE("featurize_input") {
  const Vocab v = Vocab::build(corpus({"where is bill", "bill is in the kitchen"}));
  const FeatureLayout l(v.size(), LayoutKind::kBase, false);
  const Tokens x = tokenize("where is bill");
  const Tokens m = tokenize("bill is in the kitchen");

  const auto fx = featurize_input(x, {}, l, v);
  CHECK(fx.nnz() == 3);
  CHECK(count_in(fx, l, Region::kXInput) == 3);

  const Tokens* sup[] = {&m};
  const auto fxs = featurize_input(x, sup, l, v);
  CHECK(count_in(fxs, l, Region::kXInput) == 3);
  CHECK(count_in(fxs, l, Region::kXSupport) == 5);
  CHECK(fxs.get(l.index(Region::kXSupport, v.id("bill"))) == 1.0);

  SUBCASE("unknown word without context regions is skipped") {
    FeaturizeStats stats;
    const auto f = featurize_input(tokenize("where is frodo"), {}, l, v, {}, &stats);
    CHECK(f.nnz() == 2);
    CHECK(stats.skipped == 1);
  }
  SUBCASE("counts, not flags") {
    CHECK(featurize_input(tokenize("bill bill"), {}, l, v).get(l.index(Region::kXInput, v.id("bill"))) ==
          2.0);
  }
}

TEST_CASE("unseen word is represented by its context bags") {
  const Vocab v = Vocab::from_words({"the", "appears", "where", "is"});
  const ContextStore ctx = ContextStore::build({tokenize("the boromir appears")}, v);
  const FeatureLayout l(v.size(), LayoutKind::kContext, false);
  const UnseenPolicy policy{&ctx, nullptr};

  const auto fx = featurize_input(tokenize("boromir"), {}, l, v, policy);
  CHECK(count_in(fx, l, Region::kXInput) == 0);
  CHECK(fx.entries() == std::vector<SparseVector::Entry>{{l.index(Region::kLeftCtx, v.id("the")), 1.0},
                                                         {l.index(Region::kRightCtx, v.id("appears")), 1.0}});
  // The memory side keeps its own bags.
  const auto fy = featurize_memory(tokenize("boromir"), l, v, {}, policy);
  CHECK(fy.entries() ==
        std::vector<SparseVector::Entry>{{l.index(Region::kYLeftCtx, v.id("the")), 1.0},
                                         {l.index(Region::kYRightCtx, v.id("appears")), 1.0}});
}

TEST_CASE("dropped known words switch to context") {
  const Vocab v = Vocab::from_words({"joe", "went", "kitchen"});
  const ContextStore ctx = ContextStore::build({tokenize("joe went kitchen")}, v);
  const FeatureLayout l(v.size(), LayoutKind::kContext, false);
  std::vector<bool> dropped{false, true, false};
  const UnseenPolicy policy{&ctx, &dropped};
  const auto f = featurize_input(tokenize("joe went kitchen"), {}, l, v, policy);
  CHECK(f.get(l.index(Region::kXInput, 1)) == 0.0);
  CHECK(f.get(l.index(Region::kLeftCtx, 0)) == 1.0);
  CHECK(f.get(l.index(Region::kRightCtx, 2)) == 1.0);
}

TEST_CASE("match flags") {
  const Vocab v = Vocab::build(corpus({"joe left the milk", "where is the milk", "fred went"}));
  const FeatureLayout l(v.size(), LayoutKind::kMatch, false);
  const Tokens y = tokenize("joe left the milk");
  const Tokens x = tokenize("where is the milk");
  const Tokens* cond[] = {&x};

  const auto f = featurize_memory(y, l, v, cond);
  CHECK(count_in(f, l, Region::kYWords) == 4);
  CHECK(count_in(f, l, Region::kMatch) == 2);
  CHECK(f.get(l.index(Region::kMatch, v.id("the"))) == 1.0);
  CHECK(f.get(l.index(Region::kMatch, v.id("milk"))) == 1.0);

  CHECK(count_in(featurize_memory(y, l, v), l, Region::kMatch) == 0);

  const Tokens other = tokenize("fred went");
  const Tokens* disjoint[] = {&other};
  const auto g = featurize_memory(y, l, v, disjoint);
  CHECK(count_in(g, l, Region::kMatch) == 0);
  CHECK(count_in(g, l, Region::kYWords) == 4);

  SUBCASE("repeated words still give a single flag") {
    const auto h = featurize_memory(tokenize("milk milk"), l, v, cond);
    CHECK(h.get(l.index(Region::kMatch, v.id("milk"))) == 1.0);
    CHECK(h.get(l.index(Region::kYWords, v.id("milk"))) == 2.0);
  }
}

TEST_CASE("unseen words match through their context") {
  const Vocab v = Vocab::from_words({"the", "appears", "where", "is", "?"});
  const ContextStore ctx = ContextStore::build({tokenize("the boromir appears")}, v);
  const FeatureLayout l(v.size(), LayoutKind::kMatch, false);
  const Tokens x = tokenize("where is boromir ?");
  const Tokens* cond[] = {&x};
  const auto f = featurize_memory(tokenize("boromir"), l, v, cond, {&ctx, nullptr});
  CHECK(f.get(l.index(Region::kLeftCtxMatch, v.id("the"))) == 1.0);
  CHECK(f.get(l.index(Region::kRightCtxMatch, v.id("appears"))) == 1.0);
  CHECK(count_in(f, l, Region::kMatch) == 0);
}

TEST_CASE("time features") {
  CHECK(featurize_time(kQueryTime, 3, 7) == TimeFeatures{0, 0, 1});
  CHECK(featurize_time(5, 2, 8) == TimeFeatures{0, 1, 1});
  CHECK(featurize_time(kQueryTime, 4, 4)[2] == 0.0);
  CHECK(featurize_time(kQueryTime, kNilTime, 2) == TimeFeatures{0, 0, 1});

  const FeatureLayout l(3, LayoutKind::kBase, true);
  const auto v = with_time(SparseVector::from_entries({{0, 1.0}}), l, {1, 0, 1});
  CHECK(v.get(9) == 1.0);
  CHECK(v.get(10) == 0.0);
  CHECK(v.get(11) == 1.0);
  CHECK_THROWS_AS(with_time({}, FeatureLayout(3, LayoutKind::kBase, false), {1, 0, 0}), Error);
}

TEST_CASE("context store") {
  const Vocab v = Vocab::from_words({"a", "b", "c"});
  const auto s = ContextStore::build({tokenize("a b c")}, v);
  CHECK(s.right("a") == ContextStore::Bag{{1, 1}});
  CHECK(s.left("c") == ContextStore::Bag{{1, 1}});
  CHECK(s.left("b") == ContextStore::Bag{{0, 1}});
  CHECK(s.right("b") == ContextStore::Bag{{2, 1}});

  const auto single = ContextStore::build({tokenize("a")}, v);
  CHECK(single.left("a").empty());
  CHECK(single.right("a").empty());

  CHECK(ContextStore::build({tokenize("a b a b")}, v).right("a") == ContextStore::Bag{{1, 2}});
  // Bags stop at sentence boundaries.
  CHECK(ContextStore::build({tokenize("a"), tokenize("b")}, v).right("a").empty());
}

TEST_CASE("property: every index lies in a declared region") {
  std::mt19937_64 rng(3);
  const Vocab v = Vocab::from_words({"a", "b", "c", "d", "e", "f"});
  const ContextStore ctx = ContextStore::build({tokenize("a zz b c yy d e f")}, v);
  for (auto kind : {LayoutKind::kBase, LayoutKind::kContext, LayoutKind::kMatch}) {
    const FeatureLayout l(v.size(), kind, true);
    for (int trial = 0; trial < 200; ++trial) {
      auto draw = [&] {
        static const char* pool[] = {"a", "b", "c", "d", "e", "f", "zz", "yy"};
        Tokens t(rng() % 5 + 1);
        for (auto& w : t) w = pool[rng() % 8];
        return t;
      };
      const Tokens x = draw(), s = draw(), y = draw();
      const Tokens* sup[] = {&s};
      const Tokens* cond[] = {&x, &s};
      for (const auto& f : {featurize_input(x, sup, l, v, {&ctx, nullptr}),
                            featurize_memory(y, l, v, cond, {&ctx, nullptr})}) {
        for (const auto& e : f.entries()) {
          REQUIRE(e.index >= 0);
          REQUIRE(e.index < l.dim() - 3);
          REQUIRE(l.region_of(e.index).has_value());
          REQUIRE(e.value > 0.0);
        }
      }
    }
  }
}

TEST_CASE("property: input features decompose over the support") {
  std::mt19937_64 rng(11);
  const Vocab v = Vocab::from_words({"a", "b", "c", "d"});
  const FeatureLayout l(v.size(), LayoutKind::kBase, false);
  for (int trial = 0; trial < 100; ++trial) {
    Tokens x(3), s(4);
    for (auto& w : x) w = v.word(static_cast<int>(rng() % 4));
    for (auto& w : s) w = v.word(static_cast<int>(rng() % 4));
    const Tokens* sup[] = {&s};
    const Tokens* only[] = {&s};
    const auto joint = featurize_input(x, sup, l, v);
    const auto parts = featurize_input(x, {}, l, v) +
                       (featurize_input({}, only, l, v));
    CHECK(joint == parts);
    CHECK(featurize_input(x, sup, l, v) == joint);
  }
}
