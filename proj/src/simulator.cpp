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
#include "memnn/simulator.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace memnn::sim {

namespace {

const std::vector<std::string> kActors = {"joe", "fred", "bill", "dan"};
const std::vector<std::string> kObjects = {"milk", "football", "apple"};
const std::vector<std::string> kRooms = {"kitchen", "office", "bathroom", "garden", "bedroom"};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

bool coin(double p, std::mt19937_64& rng) { return std::bernoulli_distribution(p)(rng); }

Tokens words(const std::string& s) { return tokenize(s); }

void append(Tokens& out, const Tokens& more) { out.insert(out.end(), more.begin(), more.end()); }

std::optional<std::size_t> last_go(const std::vector<Action>& h, int actor, std::size_t before,
                                   int room = -1) {
  for (std::size_t i = before; i-- > 0;) {
    const auto& a = h[i];
    if (a.kind == ActionKind::kGo && a.actor == actor && (room < 0 || a.target == room)) return i;
  }
  return std::nullopt;
}

}  // namespace

WorldSpec WorldSpec::defaults() { return {kActors, kObjects, kRooms}; }

WorldSpec WorldSpec::sized(int n_actors, int n_objects, int n_rooms) {
  auto fits = [](int n, const std::vector<std::string>& names) {
    return n >= 1 && n <= static_cast<int>(names.size());
  };
  if (!fits(n_actors, kActors) || !fits(n_objects, kObjects) || !fits(n_rooms, kRooms))
    throw Error("WorldSpec::sized: counts must be within 1..4 actors, 1..3 objects, 1..5 rooms");
  auto head = [](const std::vector<std::string>& v, int n) {
    return std::vector<std::string>(v.begin(), v.begin() + n);
  };
  return {head(kActors, n_actors), head(kObjects, n_objects), head(kRooms, n_rooms)};
}

WorldState init_world(const WorldSpec& spec, std::mt19937_64& rng) {
  if (spec.actors.empty() || spec.objects.empty() || spec.rooms.empty())
    throw Error("init_world: empty world");
  WorldState w;
  w.spec = spec;
  std::uniform_int_distribution<int> room(0, static_cast<int>(spec.rooms.size()) - 1);
  for (std::size_t i = 0; i < spec.actors.size(); ++i) w.actor_room.push_back(room(rng));
  for (std::size_t i = 0; i < spec.objects.size(); ++i) w.object_at.push_back({false, room(rng)});
  w.initial_actor_room = w.actor_room;
  w.initial_object_at = w.object_at;
  return w;
}

WorldState init_world(std::uint64_t seed, int n_actors, int n_objects, int n_rooms) {
  std::mt19937_64 rng(seed);
  return init_world(WorldSpec::sized(n_actors, n_objects, n_rooms), rng);
}

bool is_legal(const WorldState& w, const Action& a, ActMode mode) {
  const int actors = static_cast<int>(w.actor_room.size());
  const int objects = static_cast<int>(w.object_at.size());
  const int rooms = static_cast<int>(w.spec.rooms.size());
  if (a.actor < 0 || a.actor >= actors) return false;
  switch (a.kind) {
    case ActionKind::kGo:
      return a.target >= 0 && a.target < rooms && w.actor_room[a.actor] != a.target;
    case ActionKind::kGet: {
      if (mode != ActMode::kActorObject || a.target < 0 || a.target >= objects) return false;
      const Place& p = w.object_at[a.target];
      return !p.held && p.index == w.actor_room[a.actor];
    }
    case ActionKind::kDrop: {
      if (mode != ActMode::kActorObject || a.target < 0 || a.target >= objects) return false;
      const Place& p = w.object_at[a.target];
      return p.held && p.index == a.actor;
    }
    default:
      return false;  // not simulated
  }
}

std::vector<Action> valid_actions(const WorldState& w, int actor, ActMode mode) {
  if (actor < 0 || actor >= static_cast<int>(w.actor_room.size()))
    throw Error("valid_actions: unknown actor");
  std::vector<Action> out;
  for (int r = 0; r < static_cast<int>(w.spec.rooms.size()); ++r) {
    Action a{ActionKind::kGo, actor, r};
    if (is_legal(w, a, mode)) out.push_back(a);
  }
  if (mode == ActMode::kActorObject) {
    for (int o = 0; o < static_cast<int>(w.object_at.size()); ++o) {
      for (ActionKind k : {ActionKind::kGet, ActionKind::kDrop}) {
        Action a{k, actor, o};
        if (is_legal(w, a, mode)) out.push_back(a);
      }
    }
  }
  return out;
}

void apply(WorldState& w, const Action& a) {
  if (!is_legal(w, a, ActMode::kActorObject)) throw Error("apply: illegal action");
  switch (a.kind) {
    case ActionKind::kGo:
      w.actor_room[a.actor] = a.target;
      break;
    case ActionKind::kGet:
      w.object_at[a.target] = {true, a.actor};
      break;
    case ActionKind::kDrop:
      w.object_at[a.target] = {false, w.actor_room[a.actor]};
      break;
    default:
      break;
  }
  w.history.push_back(a);
}

Action step(WorldState& w, ActMode mode, std::mt19937_64& rng) {
  std::vector<std::vector<Action>> options;
  for (int i = 0; i < static_cast<int>(w.actor_room.size()); ++i) {
    auto v = valid_actions(w, i, mode);
    if (!v.empty()) options.push_back(std::move(v));
  }
  if (options.empty()) throw Error("step: no actor has a valid action");
  const auto& mine = pick(options, rng);
  std::vector<ActionKind> kinds;
  for (const auto& a : mine)
    if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) kinds.push_back(a.kind);
  const ActionKind kind = pick(kinds, rng);
  std::vector<Action> of_kind;
  for (const auto& a : mine)
    if (a.kind == kind) of_kind.push_back(a);
  const Action a = pick(of_kind, rng);
  apply(w, a);
  return a;
}

std::vector<std::string> verb_synonyms(ActionKind kind) {
  switch (kind) {
    case ActionKind::kGo:
      return {"went to", "journeyed to", "travelled to", "moved to", "went back to"};
    case ActionKind::kGet:
      return {"picked up", "got", "grabbed", "took"};
    case ActionKind::kDrop:
      return {"dropped", "left", "discarded", "put down"};
    default:
      throw Error("verb_synonyms: action is not transcribed");
  }
}

Tokens transcribe(const WorldSpec& spec, const Action& a, const Grammar& g,
                  std::mt19937_64& rng) {
  const auto verbs = verb_synonyms(a.kind);
  Tokens out{spec.actors.at(static_cast<std::size_t>(a.actor))};
  append(out, words(pick(verbs, rng)));
  if (coin(g.article_prob, rng)) out.push_back("the");
  if (a.kind == ActionKind::kGo) {
    out.push_back(spec.rooms.at(static_cast<std::size_t>(a.target)));
  } else {
    out.push_back(spec.objects.at(static_cast<std::size_t>(a.target)));
    if (coin(g.there_prob, rng)) out.push_back("there");
  }
  return out;
}

const char* question_kind_name(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::kWhereIsActor:
      return "where_is_actor";
    case QuestionKind::kWhereWasBefore:
      return "where_was_before";
    case QuestionKind::kWhereIsObject:
      return "where_is_object";
  }
  return "?";
}

std::string oracle_answer(const WorldState& w, const QuestionSpec& q,
                          std::optional<std::size_t> upto) {
  const std::size_t n = std::min(upto.value_or(w.history.size()), w.history.size());
  std::vector<int> actor_room = w.initial_actor_room;
  std::vector<Place> object_at = w.initial_object_at;
  std::optional<int> before;
  for (std::size_t i = 0; i < n; ++i) {
    const Action& a = w.history[i];
    if (a.kind == ActionKind::kGo) {
      if (q.kind == QuestionKind::kWhereWasBefore && a.actor == q.entity && a.target == q.room)
        before = actor_room[a.actor];
      actor_room[a.actor] = a.target;
    } else if (a.kind == ActionKind::kGet) {
      object_at[a.target] = {true, a.actor};
    } else if (a.kind == ActionKind::kDrop) {
      object_at[a.target] = {false, actor_room[a.actor]};
    }
  }
  auto room = [&](int r) { return w.spec.rooms.at(static_cast<std::size_t>(r)); };
  switch (q.kind) {
    case QuestionKind::kWhereIsActor:
      return room(actor_room.at(static_cast<std::size_t>(q.entity)));
    case QuestionKind::kWhereWasBefore:
      if (!before) throw Error("oracle_answer: actor never entered that room");
      return room(*before);
    case QuestionKind::kWhereIsObject: {
      const Place& p = object_at.at(static_cast<std::size_t>(q.entity));
      return room(p.held ? actor_room[static_cast<std::size_t>(p.index)] : p.index);
    }
  }
  throw Error("oracle_answer: bad question kind");
}

std::optional<std::vector<std::size_t>> support_chain(const WorldState& w, const QuestionSpec& q,
                                                      std::size_t first_visible) {
  const auto& h = w.history;
  std::vector<std::size_t> chain;
  switch (q.kind) {
    case QuestionKind::kWhereIsActor: {
      auto j = last_go(h, q.entity, h.size());
      if (!j) return std::nullopt;
      chain = {*j};
      break;
    }
    case QuestionKind::kWhereWasBefore: {
      auto j = last_go(h, q.entity, h.size(), q.room);
      if (!j) return std::nullopt;
      auto i = last_go(h, q.entity, *j);
      if (!i) return std::nullopt;
      chain = {*j, *i};
      break;
    }
    case QuestionKind::kWhereIsObject: {
      std::optional<std::size_t> j;
      for (std::size_t k = h.size(); k-- > 0;) {
        if ((h[k].kind == ActionKind::kGet || h[k].kind == ActionKind::kDrop) &&
            h[k].target == q.entity) {
          j = k;
          break;
        }
      }
      if (!j) return std::nullopt;
      const Action& a = h[*j];
      // A drop leaves the object where the actor stood; a get means it
      // follows the holder, who may have moved since.
      auto i = last_go(h, a.actor, a.kind == ActionKind::kDrop ? *j : h.size());
      if (!i) return std::nullopt;
      chain = {*j, *i};
      break;
    }
  }
  for (auto c : chain)
    if (c < first_visible) return std::nullopt;
  return chain;
}

Tokens question_tokens(const WorldSpec& spec, const QuestionSpec& q, std::mt19937_64& rng) {
  const auto e = static_cast<std::size_t>(q.entity);
  Tokens out;
  switch (q.kind) {
    case QuestionKind::kWhereIsActor:
      out = {"where", "is", spec.actors.at(e)};
      if (coin(0.5, rng)) out.push_back("now");
      break;
    case QuestionKind::kWhereWasBefore:
      out = {"where", "was", spec.actors.at(e), "before", "the",
             spec.rooms.at(static_cast<std::size_t>(q.room))};
      break;
    case QuestionKind::kWhereIsObject:
      out = {"where", "is", "the", spec.objects.at(e)};
      if (coin(0.5, rng)) out.push_back("now");
      break;
  }
  out.push_back("?");
  return out;
}

std::optional<Question> generate_question(const WorldState& w, std::size_t story_begin,
                                          int difficulty, bool with_before,
                                          std::mt19937_64& rng) {
  if (difficulty < 1) throw Error("generate_question: difficulty must be >= 1");
  const std::size_t n = w.history.size();
  if (story_begin >= n) return std::nullopt;
  const int window = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(difficulty), n - story_begin));
  const int k = std::uniform_int_distribution<int>(1, window)(rng);
  const Action& a = w.history[n - static_cast<std::size_t>(k)];

  QuestionSpec spec;
  std::optional<std::vector<std::size_t>> chain;
  if (a.kind == ActionKind::kGo) {
    if (with_before && coin(0.5, rng)) {
      spec = {QuestionKind::kWhereWasBefore, a.actor, a.target};
      chain = support_chain(w, spec, story_begin);
    }
    if (!chain) {
      spec = {QuestionKind::kWhereIsActor, a.actor, -1};
      chain = support_chain(w, spec, story_begin);
    }
  } else {
    spec = {QuestionKind::kWhereIsObject, a.target, -1};
    chain = support_chain(w, spec, story_begin);
  }
  if (!chain) return std::nullopt;

  Question q;
  q.tokens = question_tokens(w.spec, spec, rng);
  q.answer = oracle_answer(w, spec);
  for (auto c : *chain) q.supports.push_back(static_cast<int>(c - story_begin));
  q.difficulty = k;
  q.kind = spec.kind;
  q.spec = spec;
  q.position = static_cast<int>(n - story_begin);
  return q;
}

// --- joining ------------------------------------------------------------------

const std::vector<Tokens>& connectives() {
  static const std::vector<Tokens> kList = {
      {"."},      {"and"}, {"then"},         {",", "then"},         {";"},
      {",", "later"}, {",", "after", "that"}, {",", "and", "then"}, {",", "next"}};
  return kList;
}

namespace {

struct Item {
  const Tokens* tokens;
  bool question;
};

JoinedStream join_items(const std::vector<Item>& items, std::mt19937_64& rng) {
  JoinedStream out;
  const Item* prev = nullptr;
  for (const auto& it : items) {
    StreamItem s;
    s.question = it.question;
    if (prev && !prev->question) {
      if (it.question)
        s.tokens.push_back(".");
      else
        append(s.tokens, pick(connectives(), rng));
    }
    append(s.tokens, *it.tokens);
    append(out.tokens, s.tokens);
    s.end = out.tokens.size();
    out.items.push_back(std::move(s));
    prev = &it;
  }
  if (prev && !prev->question) out.tokens.push_back(".");
  return out;
}

}  // namespace

JoinedStream join_story(const Story& story, std::mt19937_64& rng) {
  std::vector<const Question*> qs;
  for (const auto& q : story.questions) qs.push_back(&q);
  std::stable_sort(qs.begin(), qs.end(),
                   [](const Question* a, const Question* b) { return a->position < b->position; });
  std::vector<Item> items;
  std::size_t qi = 0;
  for (std::size_t i = 0; i <= story.statements.size(); ++i) {
    while (qi < qs.size() && qs[qi]->position == static_cast<int>(i))
      items.push_back({&qs[qi++]->tokens, true});
    if (i < story.statements.size()) items.push_back({&story.statements[i].tokens, false});
  }
  return join_items(items, rng);
}

JoinedStream join_statements(std::span<const Tokens> statements, std::mt19937_64& rng) {
  if (statements.empty()) throw Error("join_statements: no statements");
  std::vector<Item> items;
  for (const auto& s : statements) items.push_back({&s, false});
  return join_items(items, rng);
}

Tokens strip_connective(const Tokens& segment) {
  std::size_t best = 0;
  for (const auto& c : connectives()) {
    if (c.size() < segment.size() && c.size() > best &&
        std::equal(c.begin(), c.end(), segment.begin()))
      best = c.size();
  }
  return Tokens(segment.begin() + static_cast<std::ptrdiff_t>(best), segment.end());
}

// --- datasets -----------------------------------------------------------------

std::size_t Dataset::question_count() const {
  std::size_t n = 0;
  for (const auto& s : stories) n += s.questions.size();
  return n;
}

std::size_t Dataset::statement_count() const {
  std::size_t n = 0;
  for (const auto& s : stories) n += s.statements.size();
  return n;
}

Dataset generate_dataset(const DatasetConfig& cfg) {
  if (cfg.n_statements < 1 || cfg.n_questions < 0 || cfg.story_length < 1 || cfg.difficulty < 1)
    throw Error("generate_dataset: invalid config");
  std::mt19937_64 rng(cfg.seed);
  Dataset d;
  d.world = init_world(WorldSpec::defaults(), rng);
  const auto S = static_cast<long long>(cfg.n_statements);
  const auto Q = static_cast<long long>(cfg.n_questions);
  long long pending = 0;
  std::size_t story_begin = 0;
  for (long long i = 0; i < S; ++i) {
    if (i % cfg.story_length == 0) {
      d.stories.emplace_back();
      story_begin = static_cast<std::size_t>(i);
    }
    Story& story = d.stories.back();
    const Action a = step(d.world, cfg.mode, rng);
    story.statements.push_back({transcribe(d.world.spec, a, cfg.grammar, rng), a,
                                d.world.history.size() - 1});

    pending += (i + 1) * Q / S - i * Q / S;
    const bool last = i + 1 == S;
    int attempts = 0;
    while (pending > 0 && attempts < (last ? 10000 : 8)) {
      ++attempts;
      auto q = generate_question(d.world, story_begin, cfg.difficulty, cfg.with_before, rng);
      if (!q) continue;
      story.questions.push_back(std::move(*q));
      --pending;
    }
  }
  if (pending > 0) throw Error("generate_dataset: could not place all questions");
  return d;
}

Split generate_split(const DatasetConfig& cfg, std::uint64_t train_seed, std::uint64_t test_seed) {
  if (train_seed == test_seed) throw Error("generate_split: train and test seeds must differ");
  DatasetConfig c = cfg;
  c.seed = train_seed;
  Split s;
  s.train = generate_dataset(c);
  c.seed = test_seed;
  s.test = generate_dataset(c);
  return s;
}

Dataset subsample_questions(const Dataset& d, int n, std::uint64_t seed) {
  std::vector<std::pair<std::size_t, std::size_t>> all;
  for (std::size_t s = 0; s < d.stories.size(); ++s)
    for (std::size_t q = 0; q < d.stories[s].questions.size(); ++q) all.emplace_back(s, q);
  if (n < 0 || static_cast<std::size_t>(n) > all.size())
    throw Error("subsample_questions: n exceeds the number of questions");
  std::mt19937_64 rng(seed);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(n));
  std::sort(all.begin(), all.end());
  Dataset out = d;
  for (auto& s : out.stories) s.questions.clear();
  for (auto [s, q] : all) out.stories[s].questions.push_back(d.stories[s].questions[q]);
  return out;
}

Story figure_story() {
  WorldState w;
  w.spec = WorldSpec::defaults();
  w.actor_room = {3, 3, 4, 4};  // everyone starts in the garden or bedroom
  w.object_at = {{false, 0}, {false, 1}, {false, 2}};
  w.initial_actor_room = w.actor_room;
  w.initial_object_at = w.object_at;
  const std::vector<std::pair<Action, std::string>> script = {
      {{ActionKind::kGo, 0, 0}, "joe went to the kitchen"},
      {{ActionKind::kGo, 1, 0}, "fred went to the kitchen"},
      {{ActionKind::kGet, 0, 0}, "joe picked up the milk"},
      {{ActionKind::kGo, 0, 1}, "joe travelled to the office"},
      {{ActionKind::kDrop, 0, 0}, "joe left the milk"},
      {{ActionKind::kGo, 0, 2}, "joe went to the bathroom"},
  };
  Story story;
  for (const auto& [a, text] : script) {
    apply(w, a);
    story.statements.push_back({tokenize(text), a, w.history.size() - 1});
  }
  auto ask = [&](const QuestionSpec& spec, const std::string& text) {
    Question q;
    q.tokens = tokenize(text);
    q.answer = oracle_answer(w, spec);
    const auto chain = support_chain(w, spec);
    for (auto c : chain.value()) q.supports.push_back(static_cast<int>(c));
    q.kind = spec.kind;
    q.spec = spec;
    q.position = static_cast<int>(story.statements.size());
    story.questions.push_back(std::move(q));
  };
  ask({QuestionKind::kWhereIsObject, 0, -1}, "where is the milk now ?");
  ask({QuestionKind::kWhereIsActor, 0, -1}, "where is joe ?");
  ask({QuestionKind::kWhereWasBefore, 0, 1}, "where was joe before the office ?");
  return story;
}

Story unseen_word_story() {
  const std::vector<std::string> lines = {
      "bilbo travelled to the cave",     "gollum dropped the ring there",
      "bilbo took the ring",             "bilbo went back to the shire",
      "bilbo left the ring there",       "frodo got the ring",
      "frodo journeyed to mount-doom",   "frodo dropped the ring there",
      "sauron died",                     "frodo went back to the shire",
      "bilbo travelled to the grey-havens", "the end",
  };
  Story story;
  for (std::size_t i = 0; i < lines.size(); ++i)
    story.statements.push_back({tokenize(lines[i]), Action{}, i});
  const int n = static_cast<int>(lines.size());
  auto ask = [&](const std::string& text, const std::string& answer, std::vector<int> supports,
                 QuestionKind kind) {
    Question q;
    q.tokens = tokenize(text);
    q.answer = answer;
    q.supports = std::move(supports);
    q.kind = kind;
    q.spec.kind = kind;
    q.position = n;
    story.questions.push_back(std::move(q));
  };
  ask("where is the ring ?", "mount-doom", {7, 6}, QuestionKind::kWhereIsObject);
  ask("where is bilbo now ?", "grey-havens", {10}, QuestionKind::kWhereIsActor);
  ask("where is frodo now ?", "shire", {9}, QuestionKind::kWhereIsActor);
  return story;
}

}  // namespace memnn::sim
