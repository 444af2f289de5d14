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
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "memnn/model.hpp"

namespace memnn {

struct TrainConfig {
  int dim = 100;
  double learning_rate = 0.01;
  double margin = 0.1;
  int epochs = 10;
  double init_stddev = 0.1;
  double dropout_percent = 20.0;  // unseen-word dropout d, in percent
  int segmenter_epochs = 10;
  std::uint64_t seed = 1;
};

struct SupervisedExample {
  Tokens question;
  std::string answer;
  std::vector<int> supports;  // 1 or 2 slot ids, in hop order
  int story = 0;
  int memory_size = 0;  // statements written before the question
};

struct TrainingSet {
  std::vector<MemoryStore> stories;
  std::vector<SupervisedExample> examples;

  const MemoryStore& store(const SupervisedExample& ex) const {
    return stories.at(static_cast<std::size_t>(ex.story));
  }
};

/// Marks the empty memory as a hop-2 target or negative.
inline constexpr int kNilSlot = -1;

struct NegativeSample {
  std::optional<int> hop1;  // slot != o1
  std::optional<int> hop2;  // slot or kNilSlot, != o1 and != o2
  std::optional<std::string> response;  // != answer
  std::vector<bool> dropped;  // per word id, empty when dropout is off
};

struct HingeTerm {
  std::string name;
  double raw = 0.0;  // value inside max(0, .)
  double value() const { return raw > 0.0 ? raw : 0.0; }
  bool active() const { return raw > 0.0; }
};

using ColumnGradient = std::map<int, std::vector<double>>;

struct Gradient {
  ColumnGradient output;
  ColumnGradient response;
  ColumnGradient output_time;
};

/// Adds scale * d<U a, U b>/dU into g.
void add_pair_gradient(ColumnGradient& g, const EmbeddingMatrix& u, const SparseVector& a,
                       const SparseVector& b, double scale);
void apply_gradient(MemNNModel& m, const Gradient& g, double learning_rate);

/// Hop-2 target: the second labeled support, the empty memory when the
/// model allows it, or nothing (no hop-2 terms).
std::optional<int> hop2_target(const MemNNModel& m, const SupervisedExample& ex);

/// Uniform negatives for every hinge term plus the dropout directive.
NegativeSample sample_negatives(const MemNNModel& m, const SupervisedExample& ex,
                                double dropout_percent, std::mt19937_64& rng);

/// Each word id is hidden with probability d/100 for one training step.
std::vector<bool> unseen_dropout(int vocab_size, double d_percent, std::mt19937_64& rng);

/// Plain margin ranking terms: first support, second support, response.
std::vector<HingeTerm> hinge_terms(const MemNNModel& m, const SupervisedExample& ex,
                                   const MemoryStore& store, const NegativeSample& neg,
                                   double margin, Gradient* grad = nullptr);

/// Write-time objective: two triple terms per support (the true memory on
/// either side of the scorer) plus the unchanged response term.
std::vector<HingeTerm> train_time_terms(const MemNNModel& m, const SupervisedExample& ex,
                                        const MemoryStore& store, const NegativeSample& neg,
                                        double margin, Gradient* grad = nullptr);

/// Dispatches on the model's time flag; returns the summed loss.
double example_loss(const MemNNModel& m, const SupervisedExample& ex, const MemoryStore& store,
                    const NegativeSample& neg, double margin, Gradient* grad = nullptr,
                    std::vector<HingeTerm>* terms = nullptr);

struct EpochStats {
  double mean_loss = 0.0;
  double active_fraction = 0.0;
};

/// One seeded pass of SGD over a shuffled copy of the examples.
EpochStats sgd_epoch(MemNNModel& m, const TrainingSet& data, const TrainConfig& cfg,
                     std::mt19937_64& rng);

class KinkError : public Error {
 public:
  using Error::Error;
};

struct GradientCheck {
  double max_rel_error = 0.0;
  int entries = 0;
};

/// Central differences over every entry of every column the analytic
/// gradient touches. Throws KinkError when a hinge sits near its kink.
GradientCheck finite_difference_check(const MemNNModel& m, const SupervisedExample& ex,
                                      const MemoryStore& store, const NegativeSample& neg,
                                      double margin, double eps = 1e-6);

// --- segmenter ---------------------------------------------------------------

struct GoldSegment {
  Tokens tokens;
  bool question = false;
};
using SegmentedStream = std::vector<GoldSegment>;

struct SegmenterData {
  std::vector<Tokens> positives;  // complete statements
  std::vector<Tokens> negatives;  // unfinished statements and questions
};

SegmenterData segmenter_data(const std::vector<SegmentedStream>& streams);

/// SGD on sum max(0, g - seg(f)) + sum max(0, g + seg(f_bar)).
SegmenterParams train_segmenter(const SegmenterData& data, const Vocab& seg_vocab,
                                const TrainConfig& cfg);

double segmenter_loss(const SegmenterParams& p, const Vocab& seg_vocab, const SegmenterData& data);

}  // namespace memnn
