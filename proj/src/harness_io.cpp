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
// File formats, configuration and checkpoints.

#include <charconv>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "memnn/harness.hpp"

namespace memnn::harness {

namespace fs = std::filesystem;

namespace {

std::string line_error(int line, const std::string& what) {
  return "line " + std::to_string(line) + ": " + what;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

Tokens split_words(const std::string& s) {
  Tokens out;
  std::istringstream in(s);
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw Error("expected an integer for " + what + ", got '" + s + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& what) {
  std::uint64_t v = 0;
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || p != end) throw Error("expected an unsigned integer for " + what + ", got '" + s + "'");
  return v;
}

double parse_double(const std::string& s, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw Error("expected a number for " + what + ", got '" + s + "'");
  return v;
}

bool parse_bool(const std::string& s, const std::string& what) {
  if (s == "1" || s == "true" || s == "on" || s == "yes") return true;
  if (s == "0" || s == "false" || s == "off" || s == "no") return false;
  throw Error("expected a boolean for " + what + ", got '" + s + "'");
}

std::vector<const sim::Question*> ordered_questions(const sim::Story& story) {
  std::vector<const sim::Question*> qs;
  for (const auto& q : story.questions) qs.push_back(&q);
  std::stable_sort(qs.begin(), qs.end(), [](const sim::Question* a, const sim::Question* b) {
    return a->position < b->position;
  });
  return qs;
}

}  // namespace

// --- dataset files ------------------------------------------------------------

sim::QuestionKind infer_kind(const Tokens& q) {
  if (q.size() > 1 && q[1] == "was") return sim::QuestionKind::kWhereWasBefore;
  if (q.size() > 2 && q[2] == "the") return sim::QuestionKind::kWhereIsObject;
  return sim::QuestionKind::kWhereIsActor;
}

std::string serialize_dataset(const std::vector<sim::Story>& stories) {
  std::ostringstream out;
  for (const auto& story : stories) {
    const auto qs = ordered_questions(story);
    std::vector<int> line_of(story.statements.size());
    int id = 0;
    std::size_t qi = 0;
    for (std::size_t s = 0; s <= story.statements.size(); ++s) {
      for (; qi < qs.size() && qs[qi]->position == static_cast<int>(s); ++qi) {
        const auto& q = *qs[qi];
        out << ++id << ' ' << join(q.tokens) << '\t' << q.answer << '\t';
        for (std::size_t k = 0; k < q.supports.size(); ++k) {
          const auto sup = static_cast<std::size_t>(q.supports[k]);
          if (sup >= s) throw Error("serialize_dataset: support after its question");
          out << (k ? " " : "") << line_of[sup];
        }
        out << '\n';
      }
      if (s < story.statements.size()) {
        line_of[s] = ++id;
        out << id << ' ' << join(story.statements[s].tokens) << '\n';
      }
    }
  }
  return out.str();
}

std::vector<sim::Story> parse_dataset(std::istream& in) {
  std::vector<sim::Story> stories;
  std::map<int, int> statement_of;  // line id -> statement index
  int prev = 0;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (trim(line).empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos) throw Error(line_error(lineno, "missing text after id"));
    int id = 0;
    try {
      id = parse_int(line.substr(0, space), "id");
    } catch (const Error& e) {
      throw Error(line_error(lineno, e.what()));
    }
    if (id == 1) {
      stories.emplace_back();
      statement_of.clear();
    } else if (id != prev + 1 || stories.empty()) {
      throw Error(line_error(lineno, "id " + std::to_string(id) + " does not follow " + std::to_string(prev)));
    }
    prev = id;
    auto& story = stories.back();
    const auto fields = split(line.substr(space + 1), '\t');
    const Tokens tokens = split_words(fields[0]);
    if (tokens.empty()) throw Error(line_error(lineno, "empty text"));
    if (fields.size() == 1) {
      statement_of[id] = static_cast<int>(story.statements.size());
      story.statements.push_back({tokens, sim::Action{}, story.statements.size()});
      continue;
    }
    if (fields.size() != 3) throw Error(line_error(lineno, "question needs text, answer and supports"));
    if (tokens.back() != "?") throw Error(line_error(lineno, "question must end with '?'"));
    sim::Question q;
    q.tokens = tokens;
    q.answer = trim(fields[1]);
    if (q.answer.empty() || q.answer.find(' ') != std::string::npos)
      throw Error(line_error(lineno, "answer must be a single word"));
    const Tokens ids = split_words(fields[2]);
    if (ids.empty()) throw Error(line_error(lineno, "question without supports"));
    for (const auto& s : ids) {
      int sid = 0;
      try {
        sid = parse_int(s, "support id");
      } catch (const Error& e) {
        throw Error(line_error(lineno, e.what()));
      }
      auto it = statement_of.find(sid);
      if (it == statement_of.end())
        throw Error(line_error(lineno, "support id " + s + " is not an earlier statement of this story"));
      q.supports.push_back(it->second);
    }
    q.kind = infer_kind(tokens);
    q.spec.kind = q.kind;
    q.position = static_cast<int>(story.statements.size());
    story.questions.push_back(std::move(q));
  }
  return stories;
}

std::vector<sim::Story> read_dataset(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return parse_dataset(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_dataset(const fs::path& path, const std::vector<sim::Story>& stories) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << serialize_dataset(stories);
}

std::string serialize_streams(const std::vector<sim::JoinedStream>& streams) {
  std::string out;
  for (const auto& s : streams) out += join(s.tokens) + "\n";
  return out;
}

std::string serialize_segments(const std::vector<sim::JoinedStream>& streams) {
  std::string out;
  for (const auto& s : streams) {
    std::size_t end = 0;
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      out += (i ? " | " : "") + join(s.items[i].tokens);
      end = s.items[i].end;
    }
    if (end < s.tokens.size()) out += " | " + join(Tokens(s.tokens.begin() + static_cast<std::ptrdiff_t>(end), s.tokens.end()));
    out += "\n";
  }
  return out;
}

std::vector<sim::JoinedStream> parse_segments(std::istream& in) {
  std::vector<sim::JoinedStream> out;
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<Tokens> pieces(1);
    for (auto& w : split_words(line)) {
      if (w == "|")
        pieces.emplace_back();
      else
        pieces.back().push_back(std::move(w));
    }
    Tokens terminal;
    if (pieces.size() > 1 && pieces.back() == Tokens{"."}) {
      terminal = pieces.back();
      pieces.pop_back();
    }
    sim::JoinedStream s;
    for (auto& p : pieces) {
      if (p.empty()) throw Error(line_error(lineno, "empty segment"));
      s.tokens.insert(s.tokens.end(), p.begin(), p.end());
      const bool question = p.back() == "?";
      s.items.push_back({std::move(p), question, s.tokens.size()});
    }
    s.tokens.insert(s.tokens.end(), terminal.begin(), terminal.end());
    out.push_back(std::move(s));
  }
  return out;
}

// --- configuration --------------------------------------------------------------

TaskMode parse_task_mode(const std::string& s) {
  if (s == "actor_wo_before") return TaskMode::kActorWithoutBefore;
  if (s == "actor") return TaskMode::kActor;
  if (s == "actor_object") return TaskMode::kActorObject;
  if (s == "actor_wo_before_object") return TaskMode::kActorObjectWithoutBefore;
  throw Error("unknown task mode '" + s + "'");
}

const char* task_mode_name(TaskMode m) {
  switch (m) {
    case TaskMode::kActorWithoutBefore:
      return "actor_wo_before";
    case TaskMode::kActor:
      return "actor";
    case TaskMode::kActorObject:
      return "actor_object";
    case TaskMode::kActorObjectWithoutBefore:
      return "actor_wo_before_object";
  }
  return "?";
}

void ExperimentConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "difficulty") difficulty = parse_int(v, key);
  else if (key == "mode") mode = parse_task_mode(v);
  else if (key == "hops") flags.hops = parse_int(v, key);
  else if (key == "time") flags.time = parse_bool(v, key);
  else if (key == "match") flags.match = parse_bool(v, key);
  else if (key == "unseen") flags.unseen = parse_bool(v, key);
  else if (key == "lambda") flags.lambda = parse_double(v, key);
  else if (key == "nil_support") flags.nil_support = parse_bool(v, key);
  else if (key == "hashing") {
    if (v == "none") hashing = Hashing::kNone;
    else if (v == "word") hashing = Hashing::kWord;
    else if (v == "cluster") hashing = Hashing::kCluster;
    else throw Error("unknown hashing '" + v + "'");
  }
  else if (key == "clusters") clusters = parse_int(v, key);
  else if (key == "dim") train.dim = parse_int(v, key);
  else if (key == "learning_rate") train.learning_rate = parse_double(v, key);
  else if (key == "margin") train.margin = parse_double(v, key);
  else if (key == "epochs") train.epochs = parse_int(v, key);
  else if (key == "init_stddev") train.init_stddev = parse_double(v, key);
  else if (key == "dropout") train.dropout_percent = parse_double(v, key);
  else if (key == "segmenter_epochs") train.segmenter_epochs = parse_int(v, key);
  else if (key == "seed") train.seed = parse_u64(v, key);
  else if (key == "input") {
    if (v == "sentence") input = InputMode::kSentence;
    else if (v == "stream") input = InputMode::kStream;
    else throw Error("unknown input mode '" + v + "'");
  }
  else if (key == "statements") n_statements = parse_int(v, key);
  else if (key == "questions") n_questions = parse_int(v, key);
  else if (key == "train_questions") train_questions = parse_int(v, key);
  else if (key == "story_length") story_length = parse_int(v, key);
  else if (key == "train_seed") train_seed = parse_u64(v, key);
  else if (key == "test_seed") test_seed = parse_u64(v, key);
  else if (key == "threads") threads = parse_int(v, key);
  else throw Error("unknown config key '" + key + "'");
}

void ExperimentConfig::load(std::istream& in) {
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(line_error(lineno, "expected key = value"));
    try {
      set(trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const Error& e) {
      throw Error(line_error(lineno, e.what()));
    }
  }
}

void ExperimentConfig::load_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    load(in);
  } catch (const Error& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void ExperimentConfig::validate() const {
  if (difficulty < 1) throw Error("config: difficulty must be >= 1");
  if (flags.hops != 1 && flags.hops != 2) throw Error("config: hops must be 1 or 2");
  if (flags.lambda < 0.0) throw Error("config: lambda must be >= 0");
  if (clusters < 1) throw Error("config: clusters must be >= 1");
  if (train.dim < 1 || train.epochs < 0 || train.segmenter_epochs < 0)
    throw Error("config: dim, epochs and segmenter_epochs must be positive");
  if (train.learning_rate <= 0.0 || train.margin <= 0.0 || train.init_stddev <= 0.0)
    throw Error("config: learning_rate, margin and init_stddev must be > 0");
  if (train.dropout_percent < 0.0 || train.dropout_percent > 100.0)
    throw Error("config: dropout must be within [0, 100]");
  if (n_statements < 1 || n_questions < 1 || story_length < 1)
    throw Error("config: statements, questions and story_length must be >= 1");
  if (train_questions < 0 || train_questions > n_questions)
    throw Error("config: train_questions must be within [0, questions]");
  if (train_seed == test_seed) throw Error("config: train_seed and test_seed must differ");
  if (input == InputMode::kStream && hashing != Hashing::kNone)
    throw Error("config: hashing is only evaluated on sentence input");
}

std::string ExperimentConfig::to_text() const {
  // Shortest text that reads back to the same double.
  auto real = [](double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  std::ostringstream out;
  out << "difficulty = " << difficulty << "\nmode = " << task_mode_name(mode)
      << "\nhops = " << flags.hops << "\ntime = " << flags.time << "\nmatch = " << flags.match
      << "\nunseen = " << flags.unseen << "\nlambda = " << flags.lambda
      << "\nnil_support = " << flags.nil_support << "\nhashing = "
      << (hashing == Hashing::kNone ? "none" : hashing == Hashing::kWord ? "word" : "cluster")
      << "\nclusters = " << clusters << "\ndim = " << train.dim
      << "\nlearning_rate = " << real(train.learning_rate) << "\nmargin = " << train.margin
      << "\nepochs = " << train.epochs << "\ninit_stddev = " << train.init_stddev
      << "\ndropout = " << real(train.dropout_percent) << "\nsegmenter_epochs = " << train.segmenter_epochs
      << "\nseed = " << train.seed << "\ninput = " << (input == InputMode::kStream ? "stream" : "sentence")
      << "\nstatements = " << n_statements << "\nquestions = " << n_questions
      << "\ntrain_questions = " << train_questions << "\nstory_length = " << story_length
      << "\ntrain_seed = " << train_seed << "\ntest_seed = " << test_seed
      << "\nthreads = " << threads << "\n";
  return out.str();
}

sim::DatasetConfig ExperimentConfig::dataset_config() const {
  sim::DatasetConfig d;
  d.n_statements = n_statements;
  d.n_questions = n_questions;
  d.difficulty = difficulty;
  d.story_length = story_length;
  d.mode = (mode == TaskMode::kActorObject || mode == TaskMode::kActorObjectWithoutBefore)
               ? sim::ActMode::kActorObject
               : sim::ActMode::kActorOnly;
  d.with_before = mode == TaskMode::kActor || mode == TaskMode::kActorObject;
  // A trailing "there" would be cut off by a segmenter that fires on the
  // complete statement before it.
  if (input == InputMode::kStream) d.grammar.there_prob = 0.0;
  return d;
}

// --- checkpoints ----------------------------------------------------------------

namespace {

void save_matrix(const EmbeddingMatrix& u, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  u.save(out);
}

EmbeddingMatrix load_matrix(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return EmbeddingMatrix::load(in);
}

void save_vocab(const Vocab& v, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  v.save(out);
}

Vocab load_vocab(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return Vocab::load(in);
}

}  // namespace

void save_checkpoint(const MemNNModel& m, const fs::path& dir) {
  m.validate();
  fs::create_directories(dir);
  save_vocab(m.vocab, dir / "vocab.txt");
  save_matrix(m.output, dir / "U_O.bin");
  save_matrix(m.response, dir / "U_R.bin");
  if (m.output_time) save_matrix(*m.output_time, dir / "U_Ot.bin");
  {
    std::ofstream out(dir / "model.txt");
    out << std::setprecision(17) << "hops = " << m.flags.hops << "\ntime = " << m.flags.time
        << "\nmatch = " << m.flags.match << "\nunseen = " << m.flags.unseen
        << "\nlambda = " << m.flags.lambda << "\nnil_support = " << m.flags.nil_support << "\n";
  }
  if (m.segmenter && m.segmenter_vocab) {
    save_vocab(*m.segmenter_vocab, dir / "seg_vocab.txt");
    save_matrix(m.segmenter->projection, dir / "U_S.bin");
    std::ofstream out(dir / "segmenter.txt");
    out << std::setprecision(17) << m.segmenter->margin << '\n';
    for (double w : m.segmenter->classifier) out << w << '\n';
  }
}

MemNNModel load_checkpoint(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error("checkpoint directory not found: " + dir.string());
  ExperimentConfig cfg;
  cfg.load_file(dir / "model.txt");
  Vocab vocab = load_vocab(dir / "vocab.txt");
  const FeatureLayout layout(vocab.size(), cfg.flags.layout_kind(), cfg.flags.time);
  MemNNModel m{std::move(vocab), layout, cfg.flags, load_matrix(dir / "U_O.bin"),
               load_matrix(dir / "U_R.bin"), std::nullopt, std::nullopt, std::nullopt};
  if (cfg.flags.time) m.output_time = load_matrix(dir / "U_Ot.bin");
  if (fs::exists(dir / "segmenter.txt")) {
    m.segmenter_vocab = load_vocab(dir / "seg_vocab.txt");
    std::ifstream in(dir / "segmenter.txt");
    SegmenterParams p{load_matrix(dir / "U_S.bin"), {}, 0.0};
    if (!(in >> p.margin)) throw Error("segmenter.txt: missing margin");
    for (double w; in >> w;) p.classifier.push_back(w);
    if (static_cast<int>(p.classifier.size()) != p.projection.rows())
      throw Error("segmenter.txt: classifier length does not match U_S");
    m.segmenter = std::move(p);
  }
  m.validate();
  return m;
}

// --- repl -----------------------------------------------------------------------

int repl(const MemNNModel& m, std::istream& in, std::ostream& out, const HashIndex* prototype) {
  MemoryStore store;
  int answered = 0;
  auto ask = [&](const Tokens& q) {
    if (store.empty()) {
      out << "error: memory is empty, tell me something first\n";
      return;
    }
    std::optional<HashIndex> index;
    if (prototype) index = prototype->reindexed(store, m.vocab);
    const Answer a = answer(m, q, store, index ? &*index : nullptr);
    out << a.word;
    for (int s : a.supports) out << "\t[" << join(store.tokens(s)) << "]";
    out << '\n';
    ++answered;
  };
  for (std::string line; std::getline(in, line);) {
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (t == ":reset") {
      store = MemoryStore();
      out << "memory cleared\n";
      continue;
    }
    if (t == ":quit") break;
    Tokens buffer;
    for (auto& w : tokenize(t)) {
      if (w == ".") {
        if (!buffer.empty()) store.write(std::move(buffer));
        buffer.clear();
      } else if (w == "?") {
        buffer.push_back(w);
        ask(buffer);
        buffer.clear();
      } else {
        buffer.push_back(std::move(w));
      }
    }
    if (!buffer.empty()) store.write(std::move(buffer));
  }
  return answered;
}

}  // namespace memnn::harness
