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
// Paraphrase-fact store for measuring memory hashing.

#include <algorithm>
#include <chrono>
#include <numeric>

#include "memnn/harness.hpp"

namespace memnn::harness {

namespace {

std::string synonym(char kind, int id, int variant) {
  return std::string(1, kind) + std::to_string(id) + static_cast<char>('a' + variant);
}

struct Fact {
  int subject = 0;
  int relation = 0;
  int object = 0;
};

Tokens fact_tokens(const Fact& f, int s_syn, int r_syn) {
  return {synonym('s', f.subject, s_syn), synonym('r', f.relation, r_syn),
          "o" + std::to_string(f.object)};
}

// Surface forms of a query that share no word with the fact.
Tokens paraphrase(const Fact& f, int s_syn, int r_syn, const FactsConfig& cfg,
                  std::mt19937_64& rng) {
  auto other = [&](int used, int n) {
    const int k = std::uniform_int_distribution<int>(1, n - 1)(rng);
    return (used + k) % n;
  };
  return {synonym('s', f.subject, other(s_syn, cfg.subject_synonyms)),
          synonym('r', f.relation, other(r_syn, cfg.relation_synonyms))};
}

// Training queries draw any surface form, so every synonym of a concept is
// pulled toward the same query words.
Tokens any_form(const Fact& f, const FactsConfig& cfg, std::mt19937_64& rng) {
  auto pick = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };
  return {synonym('s', f.subject, pick(cfg.subject_synonyms)),
          synonym('r', f.relation, pick(cfg.relation_synonyms))};
}

}  // namespace

double HashRow::speedup() const {
  return mean_candidates > 0.0 ? store_size / mean_candidates : 0.0;
}

FactsTask make_facts_task(const FactsConfig& cfg) {
  if (cfg.subject_synonyms < 2 || cfg.relation_synonyms < 2)
    throw Error("facts task: paraphrases need at least two synonyms per concept");
  if (cfg.store_size > cfg.subjects * cfg.relations)
    throw Error("facts task: store larger than the number of subject/relation pairs");
  if (cfg.train_store < 2 || cfg.objects < 1 || cfg.test_questions > cfg.store_size)
    throw Error("facts task: invalid sizes");
  std::mt19937_64 rng(cfg.seed);
  auto uniform = [&](int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng); };

  // One object per (subject, relation) pair; the store holds a random subset.
  std::vector<Fact> universe;
  for (int s = 0; s < cfg.subjects; ++s)
    for (int r = 0; r < cfg.relations; ++r) universe.push_back({s, r, uniform(cfg.objects)});
  std::shuffle(universe.begin(), universe.end(), rng);

  FactsTask task;
  task.init_stddev = cfg.init_stddev;
  std::vector<std::pair<int, int>> forms;
  for (int i = 0; i < cfg.store_size; ++i) {
    const Fact& f = universe[static_cast<std::size_t>(i)];
    forms.emplace_back(uniform(cfg.subject_synonyms), uniform(cfg.relation_synonyms));
    task.store.write(fact_tokens(f, forms.back().first, forms.back().second));
  }
  std::vector<int> order(static_cast<std::size_t>(cfg.store_size));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (int q = 0; q < cfg.test_questions; ++q) {
    const int slot = order[static_cast<std::size_t>(q)];
    const Fact& f = universe[static_cast<std::size_t>(slot)];
    task.queries.push_back(paraphrase(f, forms[slot].first, forms[slot].second, cfg, rng));
    task.targets.push_back(slot);
  }

  // Training episodes mix the target with facts sharing its subject or its
  // relation, so ranking needs both halves of the query.
  for (int e = 0; e < cfg.train_questions; ++e) {
    const Fact target{uniform(cfg.subjects), uniform(cfg.relations), uniform(cfg.objects)};
    std::vector<Fact> facts{target};
    while (static_cast<int>(facts.size()) < cfg.train_store) {
      Fact d{uniform(cfg.subjects), uniform(cfg.relations), uniform(cfg.objects)};
      const int kind = uniform(3);
      if (kind == 0) d.subject = target.subject;
      if (kind == 1) d.relation = target.relation;
      if (d.subject == target.subject && d.relation == target.relation) continue;
      facts.push_back(d);
    }
    std::shuffle(facts.begin(), facts.end(), rng);
    std::vector<Tokens> statements;
    int target_slot = 0;
    for (std::size_t i = 0; i < facts.size(); ++i) {
      if (facts[i].subject == target.subject && facts[i].relation == target.relation)
        target_slot = static_cast<int>(i);
      statements.push_back(
          fact_tokens(facts[i], uniform(cfg.subject_synonyms), uniform(cfg.relation_synonyms)));
    }
    task.train.stories.emplace_back(statements);
    task.train.examples.push_back({any_form(target, cfg, rng),
                                   "o" + std::to_string(target.object),
                                   {target_slot},
                                   e,
                                   static_cast<int>(statements.size())});
  }
  return task;
}

MemNNModel train_facts_model(const FactsTask& task, const TrainConfig& cfg) {
  std::vector<Tokens> corpus;
  for (const auto& slot : task.store.slots()) corpus.push_back(slot.tokens);
  for (const auto& store : task.train.stories)
    for (const auto& slot : store.slots()) corpus.push_back(slot.tokens);
  for (const auto& ex : task.train.examples) corpus.push_back(ex.question);
  for (const auto& q : task.queries) corpus.push_back(q);
  ModelFlags flags;
  flags.hops = 1;
  MemNNModel m = MemNNModel::create(Vocab::build(corpus), flags, cfg.dim, task.init_stddev, cfg.seed);
  TrainConfig c = cfg;
  c.dropout_percent = 0.0;
  std::mt19937_64 rng(cfg.seed + 17);
  for (int e = 0; e < cfg.epochs; ++e) sgd_epoch(m, task.train, c, rng);
  return m;
}

std::vector<HashRow> hash_bench(const MemNNModel& m, const FactsTask& task,
                                const std::vector<int>& clusters, std::uint64_t seed) {
  using Clock = std::chrono::steady_clock;
  const MemoryStore& store = task.store;
  // Scores are (U q).(U y); memory embeddings are computed once.
  std::vector<std::vector<double>> mem;
  mem.reserve(static_cast<std::size_t>(store.size()));
  for (const auto& slot : store.slots())
    mem.push_back(m.output.embed(featurize_memory(slot.tokens, m.layout, m.vocab)));
  std::vector<std::vector<double>> queries;
  for (const auto& q : task.queries)
    queries.push_back(m.output.embed(featurize_input(q, {}, m.layout, m.vocab)));

  auto run = [&](const std::string& name, const HashIndex* index) {
    const auto t0 = Clock::now();
    HashRow row;
    row.name = name;
    row.store_size = store.size();
    int hits = 0;
    double cands = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const auto c = lookup_candidates(store, index, task.queries[q], m.vocab);
      cands += static_cast<double>(c.size());
      int best = -1;
      double best_s = 0.0;
      for (int s : c) {
        const double v = dot(queries[q], mem[static_cast<std::size_t>(s)]);
        if (best < 0 || v > best_s) {
          best = s;
          best_s = v;
        }
      }
      hits += best == task.targets[q] ? 1 : 0;
    }
    const double n = static_cast<double>(std::max<std::size_t>(queries.size(), 1));
    row.mean_candidates = cands / n;
    row.accuracy = 100.0 * hits / n;
    row.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return row;
  };

  std::vector<HashRow> rows;
  rows.push_back(run("none", nullptr));
  const HashIndex word = build_word_hash(store, m.vocab);
  rows.push_back(run("word", &word));
  for (int k : clusters) {
    const HashIndex h = build_cluster_hash(store, m.vocab, m.output, m.layout, k, seed);
    rows.push_back(run("cluster:" + std::to_string(k), &h));
  }
  return rows;
}

}  // namespace memnn::harness
