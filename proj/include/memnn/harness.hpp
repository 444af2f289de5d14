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
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "memnn/model.hpp"
#include "memnn/simulator.hpp"
#include "memnn/training.hpp"

namespace memnn::harness {

// --- dataset files ------------------------------------------------------------

/// `<id> <tokens>` per statement, `<id> <tokens>\t<answer>\t<support ids>` per
/// question. Ids are 1-based line numbers that restart with every story.
std::string serialize_dataset(const std::vector<sim::Story>& stories);
std::vector<sim::Story> parse_dataset(std::istream& in);
std::vector<sim::Story> read_dataset(const std::filesystem::path& path);
void write_dataset(const std::filesystem::path& path, const std::vector<sim::Story>& stories);

/// Question kind recovered from its wording.
sim::QuestionKind infer_kind(const Tokens& question);

/// One story per line; `.seg` separates gold segments with " | " and ends
/// with " | ." when the stream carries a closing period.
std::string serialize_streams(const std::vector<sim::JoinedStream>& streams);
std::string serialize_segments(const std::vector<sim::JoinedStream>& streams);
std::vector<sim::JoinedStream> parse_segments(std::istream& in);

// --- configuration --------------------------------------------------------------

enum class TaskMode { kActorWithoutBefore, kActor, kActorObject, kActorObjectWithoutBefore };
enum class Hashing { kNone, kWord, kCluster };
enum class InputMode { kSentence, kStream };

struct ExperimentConfig {
  int difficulty = 1;
  TaskMode mode = TaskMode::kActor;
  ModelFlags flags;
  Hashing hashing = Hashing::kNone;
  int clusters = 20;
  TrainConfig train;
  InputMode input = InputMode::kSentence;
  int n_statements = 7000;
  int n_questions = 3000;
  int train_questions = 0;  // 0 keeps all generated training questions
  int story_length = 50;
  std::uint64_t train_seed = 1;
  std::uint64_t test_seed = 2;
  int threads = 0;  // evaluation workers, 0 = hardware concurrency

  /// Sets one `key = value` option; throws on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void load(std::istream& in);
  void load_file(const std::filesystem::path& path);
  void validate() const;
  std::string to_text() const;
  sim::DatasetConfig dataset_config() const;
};

TaskMode parse_task_mode(const std::string& s);
const char* task_mode_name(TaskMode m);

// --- data conversion ------------------------------------------------------------

/// Memory stores and supervised examples of sentence-level stories.
TrainingSet to_training_set(const std::vector<sim::Story>& stories);
/// Same over gold stream segments: memories keep their leading connective.
TrainingSet to_stream_training_set(const std::vector<sim::Story>& stories,
                                   const std::vector<sim::JoinedStream>& streams);
/// Every word of statements, questions and answers, in first-seen order.
Vocab training_vocab(const TrainingSet& data);

std::vector<sim::JoinedStream> join_stories(const std::vector<sim::Story>& stories,
                                            std::uint64_t seed);
std::vector<SegmentedStream> gold_segments(const std::vector<sim::JoinedStream>& streams);

// --- train / eval ---------------------------------------------------------------

struct TrainResult {
  MemNNModel model;
  std::vector<EpochStats> curve;
  double seconds = 0.0;
};

/// Deterministic in cfg.train.seed. Writes `epoch,mean_loss,train_acc,active_fraction`
/// rows to `csv` when given.
TrainResult run_train(const ExperimentConfig& cfg, const TrainingSet& data,
                      std::ostream* csv = nullptr);
/// Same, over a fixed dictionary.
TrainResult run_train(const ExperimentConfig& cfg, const TrainingSet& data, const Vocab& vocab,
                      std::ostream* csv = nullptr);

struct QuestionRecord {
  std::string expected;
  std::string predicted;
  bool correct = false;
  bool supports_correct = false;
  sim::QuestionKind kind = sim::QuestionKind::kWhereIsActor;
  int candidates = 0;
  int memory = 0;
};

struct KindTally {
  int correct = 0;
  int total = 0;
};

struct EvalReport {
  std::vector<QuestionRecord> records;
  double seconds = 0.0;

  double accuracy() const;  // percent
  double support_accuracy() const;
  double mean_candidates() const;
  double mean_memory() const;
  std::map<std::string, KindTally> by_kind() const;
  void print(std::ostream& out) const;
};

/// Optional index over a trained model's dictionary; reused for every story.
std::optional<HashIndex> prototype_index(const MemNNModel& m, Hashing hashing, int clusters,
                                         std::uint64_t seed);

/// Answers every question against the statements that precede it.
EvalReport run_eval(const MemNNModel& m, const TrainingSet& data,
                    const HashIndex* prototype = nullptr, int threads = 0);

// --- stream mode ----------------------------------------------------------------

struct BoundaryScore {
  int true_positive = 0;
  int predicted = 0;
  int gold = 0;

  double precision() const;
  double recall() const;
  double f1() const;
};

/// Statement boundaries the segmenter emits against the gold ones.
BoundaryScore boundary_score(const MemNNModel& m, const std::vector<sim::JoinedStream>& streams);

/// Segments each stream, writes statements as they are emitted and answers
/// each question with the memory written so far.
EvalReport run_stream_eval(const MemNNModel& m, const std::vector<sim::Story>& stories,
                           const std::vector<sim::JoinedStream>& streams);

/// Attaches a segmenter trained on the gold segments of `streams`.
void attach_segmenter(MemNNModel& m, const std::vector<sim::JoinedStream>& streams,
                      const TrainConfig& cfg);

// --- experiments ----------------------------------------------------------------

struct Experiment {
  sim::Split data;
  TrainResult trained;
  EvalReport report;
  std::optional<BoundaryScore> boundaries;
};

/// Generate, train and evaluate per the config.
Experiment run_experiment(const ExperimentConfig& cfg, std::ostream* csv = nullptr);

struct CurvePoint {
  int questions = 0;
  double accuracy = 0.0;
  double seconds = 0.0;
};

/// Trains on seeded subsets of the training questions, evaluates each on the
/// full test set. Writes `questions,accuracy,seconds` rows to `csv`.
std::vector<CurvePoint> learning_curve(const ExperimentConfig& cfg, const std::vector<int>& sizes,
                                       std::ostream* csv = nullptr);

// --- hashing benchmark ----------------------------------------------------------

struct FactsConfig {
  int subjects = 100;
  int subject_synonyms = 3;
  int relations = 100;
  int relation_synonyms = 2;
  int objects = 50;
  int store_size = 10000;
  int train_questions = 20000;
  int train_store = 40;  // facts per training episode
  int test_questions = 1000;
  // Synonym columns only cluster once learned structure outweighs the
  // random start, so this task starts from a smaller init than the QA model.
  double init_stddev = 0.01;
  std::uint64_t seed = 7;
};

/// Facts "subject relation object" under synonym surface forms, queried by
/// paraphrases "subject' relation'" whose words never occur in the fact.
struct FactsTask {
  MemoryStore store;               // the large store
  std::vector<Tokens> queries;     // paraphrased test queries
  std::vector<int> targets;        // slot of the queried fact
  TrainingSet train;               // small episodes for learning U_O
  double init_stddev = 0.01;
};

FactsTask make_facts_task(const FactsConfig& cfg);

struct HashRow {
  std::string name;  // "none", "word", "cluster:K"
  double mean_candidates = 0.0;
  double accuracy = 0.0;  // percent of queries retrieving the target
  double seconds = 0.0;
  double speedup() const;
  int store_size = 0;
};

/// Retrieval accuracy and candidate counts of a k=1 model over the facts
/// store, with no index, a word index and cluster indexes of each K.
std::vector<HashRow> hash_bench(const MemNNModel& m, const FactsTask& task,
                                const std::vector<int>& clusters, std::uint64_t seed);
/// k=1 base model trained on the facts episodes; the init scale comes from
/// the task, everything else from `cfg`.
MemNNModel train_facts_model(const FactsTask& task, const TrainConfig& cfg);

// --- checkpoints / repl ---------------------------------------------------------

void save_checkpoint(const MemNNModel& m, const std::filesystem::path& dir);
MemNNModel load_checkpoint(const std::filesystem::path& dir);

/// Statements are written to memory, lines ending in "?" are answered,
/// ":reset" clears the memory. Returns the number of answered questions.
int repl(const MemNNModel& m, std::istream& in, std::ostream& out,
         const HashIndex* prototype = nullptr);

}  // namespace memnn::harness
