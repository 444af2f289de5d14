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
#include <random>
#include <span>
#include <string>
#include <vector>

#include "memnn/text.hpp"

namespace memnn::sim {

using memnn::Error;
using memnn::Tokens;

struct WorldSpec {
  std::vector<std::string> actors;
  std::vector<std::string> objects;
  std::vector<std::string> rooms;

  /// 4 actors, 3 objects, 5 rooms, named as in the examples.
  static WorldSpec defaults();
  /// First n names of each default list; throws if a count is out of range.
  static WorldSpec sized(int n_actors, int n_objects, int n_rooms);
};

enum class ActionKind { kGo, kGet, kGetFrom, kPutIn, kGive, kDrop, kLook, kInventory, kExamine };

struct Action {
  ActionKind kind = ActionKind::kGo;
  int actor = 0;
  int target = 0;  // room for go, object for get/drop

  bool operator==(const Action&) const = default;
};

/// Either held by an actor or lying in a room.
struct Place {
  bool held = false;
  int index = 0;

  bool operator==(const Place&) const = default;
};

struct WorldState {
  WorldSpec spec;
  std::vector<int> actor_room;
  std::vector<Place> object_at;
  std::vector<int> initial_actor_room;
  std::vector<Place> initial_object_at;
  std::vector<Action> history;  // time index = position
};

enum class ActMode { kActorOnly, kActorObject };

WorldState init_world(std::uint64_t seed, int n_actors = 4, int n_objects = 3, int n_rooms = 5);
WorldState init_world(const WorldSpec& spec, std::mt19937_64& rng);

bool is_legal(const WorldState& w, const Action& a, ActMode mode = ActMode::kActorObject);
std::vector<Action> valid_actions(const WorldState& w, int actor, ActMode mode);
/// Executes a legal action and appends it to the history.
void apply(WorldState& w, const Action& a);
/// A uniformly chosen actor (among those able to act) takes a uniformly
/// chosen valid action.
Action step(WorldState& w, ActMode mode, std::mt19937_64& rng);

struct Grammar {
  double article_prob = 0.75;  // "the" before rooms and objects
  double there_prob = 0.25;    // "there" after get/drop
};

std::vector<std::string> verb_synonyms(ActionKind kind);
Tokens transcribe(const WorldSpec& spec, const Action& a, const Grammar& g, std::mt19937_64& rng);

enum class QuestionKind { kWhereIsActor, kWhereWasBefore, kWhereIsObject };
const char* question_kind_name(QuestionKind kind);

struct QuestionSpec {
  QuestionKind kind = QuestionKind::kWhereIsActor;
  int entity = 0;  // actor, or object for kWhereIsObject
  int room = -1;   // the R of "before the R"
};

/// Replays the history from the initial placement and answers from the
/// world state after `upto` actions (all of them by default).
std::string oracle_answer(const WorldState& w, const QuestionSpec& q,
                          std::optional<std::size_t> upto = std::nullopt);

/// History indices of the statements needed to derive the answer, in hop
/// order, or nullopt when some of them precede `first_visible`.
std::optional<std::vector<std::size_t>> support_chain(const WorldState& w, const QuestionSpec& q,
                                                      std::size_t first_visible = 0);

Tokens question_tokens(const WorldSpec& spec, const QuestionSpec& q, std::mt19937_64& rng);

struct Statement {
  Tokens tokens;
  Action action;
  std::size_t time = 0;  // index into the world history
};

struct Question {
  Tokens tokens;
  std::string answer;
  std::vector<int> supports;  // story-local statement indices, hop order
  int difficulty = 1;         // how far back the asked-about statement was
  QuestionKind kind = QuestionKind::kWhereIsActor;
  QuestionSpec spec;
  int position = 0;  // statements of the story preceding the question
};

struct Story {
  std::vector<Statement> statements;
  std::vector<Question> questions;
};

/// Asks about an entity of a statement 1..difficulty steps back. Returns
/// nullopt when that statement's question would need facts outside the
/// current story.
std::optional<Question> generate_question(const WorldState& w, std::size_t story_begin,
                                          int difficulty, bool with_before,
                                          std::mt19937_64& rng);

// --- joining ------------------------------------------------------------------

const std::vector<Tokens>& connectives();

struct StreamItem {
  Tokens tokens;  // leading connective included
  bool question = false;
  std::size_t end = 0;  // stream position one past the item
};

struct JoinedStream {
  Tokens tokens;
  std::vector<StreamItem> items;
};

/// Statements and questions of the story in reading order, statements
/// joined by random connectives, a "." before each question and a final
/// "." when the story ends on a statement.
JoinedStream join_story(const Story& story, std::mt19937_64& rng);
JoinedStream join_statements(std::span<const Tokens> statements, std::mt19937_64& rng);
/// Removes a leading connective, if any.
Tokens strip_connective(const Tokens& segment);

// --- datasets -----------------------------------------------------------------

struct DatasetConfig {
  int n_statements = 7000;
  int n_questions = 3000;
  int difficulty = 1;
  ActMode mode = ActMode::kActorOnly;
  bool with_before = true;
  int story_length = 50;
  Grammar grammar;
  std::uint64_t seed = 1;
};

struct Dataset {
  WorldState world;
  std::vector<Story> stories;

  std::size_t question_count() const;
  std::size_t statement_count() const;
};

Dataset generate_dataset(const DatasetConfig& cfg);

struct Split {
  Dataset train;
  Dataset test;
};
Split generate_split(const DatasetConfig& cfg, std::uint64_t train_seed, std::uint64_t test_seed);

/// Keeps a seeded random subset of n questions (stories unchanged).
Dataset subsample_questions(const Dataset& d, int n, std::uint64_t seed);

/// The six-statement kitchen/office/bathroom story with its three questions.
Story figure_story();
/// The twelve-statement story whose nouns never occur in simulated data.
Story unseen_word_story();

}  // namespace memnn::sim
