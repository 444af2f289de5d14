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
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "memnn/harness.hpp"

namespace fs = std::filesystem;
using namespace memnn;
using namespace memnn::harness;

namespace {

struct Common {
  std::string config;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("-c,--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  app->add_option("-s,--set", c.overrides, "override a config key (key=value)");
  app->add_option("--seed", c.seed, "seed for generation and training");
}

void print_f1(double f1) {
  std::ostringstream line;
  line << std::fixed << std::setprecision(2) << "boundary_f1 " << 100.0 * f1 << "%\n";
  std::cout << line.str();
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg;
  if (!c.config.empty()) cfg.load_file(c.config);
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) {
    cfg.train.seed = *c.seed;
    cfg.train_seed = *c.seed;
    cfg.test_seed = *c.seed + 1000003;
  }
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p);
  if (!out) throw Error("cannot write " + p.string());
  out << s;
}

std::vector<sim::JoinedStream> read_segments(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return parse_segments(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Memory network question answering on simulated stories"};
  app.require_subcommand(1);

  Common gen_c, train_c, eval_c, curve_c, hash_c, repl_c;

  std::string gen_out = "data";
  auto* gen = app.add_subcommand("gen", "generate train/test stories");
  add_common(gen, gen_c);
  gen->add_option("-o,--out", gen_out, "output directory");

  std::string train_data, train_ckpt = "checkpoint", train_curve;
  auto* train = app.add_subcommand("train", "train a model");
  add_common(train, train_c);
  train->add_option("-d,--data", train_data, "directory written by gen (generated if omitted)");
  train->add_option("-o,--checkpoint", train_ckpt, "checkpoint directory");
  train->add_option("--curve", train_curve, "loss curve CSV");

  std::string eval_ckpt = "checkpoint", eval_data, eval_segments, eval_records;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint");
  add_common(eval, eval_c);
  eval->add_option("-m,--checkpoint", eval_ckpt, "checkpoint directory");
  eval->add_option("-d,--data", eval_data, "dataset file")->required();
  eval->add_option("--segments", eval_segments, "stream .seg file; evaluates from the word stream");
  eval->add_option("--records", eval_records, "per-question CSV");

  std::vector<int> curve_sizes{100, 500, 1000, 3000};
  std::string curve_out;
  auto* curve = app.add_subcommand("curve", "accuracy against number of training questions");
  add_common(curve, curve_c);
  curve->add_option("--sizes", curve_sizes, "training set sizes");
  curve->add_option("-o,--out", curve_out, "CSV output (stdout if omitted)");

  FactsConfig facts;
  std::vector<int> hash_k{1, 5, 10, 20, 50};
  auto* hash = app.add_subcommand("hash-bench", "candidate counts and accuracy of hashed lookup");
  add_common(hash, hash_c);
  hash->add_option("--store-size", facts.store_size, "facts in the store");
  hash->add_option("--train-questions", facts.train_questions, "training episodes");
  hash->add_option("--init-stddev", facts.init_stddev, "embedding init scale");
  hash->add_option("-k,--clusters", hash_k, "cluster counts");

  std::string repl_ckpt = "checkpoint";
  auto* rp = app.add_subcommand("repl", "tell the model a story and ask questions");
  add_common(rp, repl_c);
  rp->add_option("-m,--checkpoint", repl_ckpt, "checkpoint directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto cfg = resolve(gen_c);
      const auto split = sim::generate_split(cfg.dataset_config(), cfg.train_seed, cfg.test_seed);
      fs::create_directories(gen_out);
      const fs::path dir(gen_out);
      auto train_set = split.train;
      if (cfg.train_questions > 0)
        train_set = sim::subsample_questions(train_set, cfg.train_questions, cfg.train_seed);
      write_dataset(dir / "train.txt", train_set.stories);
      write_dataset(dir / "test.txt", split.test.stories);
      if (cfg.input == InputMode::kStream) {
        const auto tr = join_stories(train_set.stories, cfg.train_seed ^ 0x6A6F696EULL);
        const auto te = join_stories(split.test.stories, cfg.test_seed ^ 0x6A6F696EULL);
        write_text(dir / "train.stream", serialize_streams(tr));
        write_text(dir / "train.seg", serialize_segments(tr));
        write_text(dir / "test.stream", serialize_streams(te));
        write_text(dir / "test.seg", serialize_segments(te));
      }
      write_text(dir / "config.txt", cfg.to_text());
      std::cout << "train: " << train_set.statement_count() << " statements, "
                << train_set.question_count() << " questions\ntest: "
                << split.test.statement_count() << " statements, " << split.test.question_count()
                << " questions\n";
    } else if (*train) {
      const auto cfg = resolve(train_c);
      std::ofstream curve_file;
      if (!train_curve.empty()) curve_file.open(train_curve);
      std::ostream* csv = train_curve.empty() ? nullptr : &curve_file;
      if (train_data.empty()) {
        const auto e = run_experiment(cfg, csv);
        save_checkpoint(e.trained.model, train_ckpt);
        e.report.print(std::cout);
        if (e.boundaries) print_f1(e.boundaries->f1());
      } else {
        const fs::path dir(train_data);
        const auto stories = read_dataset(dir / "train.txt");
        TrainResult r = [&] {
          if (cfg.input == InputMode::kSentence) return run_train(cfg, to_training_set(stories), csv);
          const auto streams = read_segments(dir / "train.seg");
          auto t = run_train(cfg, to_stream_training_set(stories, streams), csv);
          attach_segmenter(t.model, streams, cfg.train);
          return t;
        }();
        save_checkpoint(r.model, train_ckpt);
        std::cout << "trained in " << r.seconds << " s, final loss "
                  << (r.curve.empty() ? 0.0 : r.curve.back().mean_loss) << '\n';
      }
    } else if (*eval) {
      const auto cfg = resolve(eval_c);
      const auto model = load_checkpoint(eval_ckpt);
      const auto stories = read_dataset(eval_data);
      EvalReport report;
      if (!eval_segments.empty()) {
        if (!model.segmenter) throw Error("checkpoint has no segmenter");
        const auto streams = read_segments(eval_segments);
        report = run_stream_eval(model, stories, streams);
        print_f1(boundary_score(model, streams).f1());
      } else {
        const auto proto = prototype_index(model, cfg.hashing, cfg.clusters, cfg.train.seed);
        report = run_eval(model, to_training_set(stories), proto ? &*proto : nullptr, cfg.threads);
      }
      report.print(std::cout);
      if (!eval_records.empty()) {
        std::ofstream out(eval_records);
        out << "index,kind,expected,predicted,correct,supports_correct,candidates\n";
        for (std::size_t i = 0; i < report.records.size(); ++i) {
          const auto& r = report.records[i];
          out << i << ',' << sim::question_kind_name(r.kind) << ',' << r.expected << ','
              << r.predicted << ',' << r.correct << ',' << r.supports_correct << ','
              << r.candidates << '\n';
        }
      }
    } else if (*curve) {
      const auto cfg = resolve(curve_c);
      std::ofstream file;
      if (!curve_out.empty()) file.open(curve_out);
      learning_curve(cfg, curve_sizes, curve_out.empty() ? &std::cout : &file);
    } else if (*hash) {
      const auto cfg = resolve(hash_c);
      facts.seed = cfg.train.seed;
      const auto task = make_facts_task(facts);
      const auto model = train_facts_model(task, cfg.train);
      std::cout << "method,mean_candidates,speedup,accuracy,seconds\n";
      for (const auto& row : hash_bench(model, task, hash_k, cfg.train.seed))
        std::cout << row.name << ',' << row.mean_candidates << ',' << row.speedup() << ','
                  << row.accuracy << ',' << row.seconds << '\n';
    } else if (*rp) {
      const auto cfg = resolve(repl_c);
      const auto model = load_checkpoint(repl_ckpt);
      const auto proto = prototype_index(model, cfg.hashing, cfg.clusters, cfg.train.seed);
      repl(model, std::cin, std::cout, proto ? &*proto : nullptr);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
