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
#include "memnn/memory.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <set>

namespace memnn {

MemoryStore::MemoryStore(const std::vector<Tokens>& statements) {
  for (const auto& s : statements) write(s);
}

int MemoryStore::write(Tokens tokens) {
  if (tokens.empty()) throw Error("memory: cannot write an empty statement");
  const int id = size();
  slots_.push_back({std::move(tokens), id});
  return id;
}

const MemorySlot& MemoryStore::slot(int id) const {
  if (id < 0 || id >= size()) throw Error("memory: slot id out of range");
  return slots_[static_cast<std::size_t>(id)];
}

// --- hashing -------------------------------------------------------------------

std::vector<int> HashIndex::buckets_for(const Tokens& tokens, const Vocab& vocab) const {
  std::set<int> out;
  for (const auto& w : tokens)
    if (auto id = vocab.find(w)) out.insert(word_bucket_[static_cast<std::size_t>(*id)]);
  return {out.begin(), out.end()};
}

void HashIndex::index_store(const MemoryStore& store, const Vocab& vocab) {
  for (int s = 0; s < store.size(); ++s) {
    for (int b : buckets_for(store.tokens(s), vocab)) {
      auto& bucket = buckets_[static_cast<std::size_t>(b)];
      if (bucket.empty() || bucket.back() != s) bucket.push_back(s);
    }
  }
}

HashIndex build_word_hash(const MemoryStore& store, const Vocab& vocab) {
  if (store.empty()) throw Error("word hash: empty store");
  HashIndex h;
  h.kind_ = HashKind::kWord;
  h.buckets_.assign(static_cast<std::size_t>(vocab.size()), {});
  h.word_bucket_.resize(static_cast<std::size_t>(vocab.size()));
  std::iota(h.word_bucket_.begin(), h.word_bucket_.end(), 0);
  h.index_store(store, vocab);
  return h;
}

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest(const std::vector<std::vector<double>>& centroids, const std::vector<double>& p,
            double* dist) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = sq_dist(centroids[c], p);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  if (dist) *dist = best_d;
  return best;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int k, int iters,
                    std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1) throw Error("kmeans: K must be positive");
  if (k > n) throw Error("kmeans: K exceeds the number of points");
  if (iters < 1) throw Error("kmeans: need at least one iteration");
  const std::size_t dim = points.front().size();
  for (const auto& p : points)
    if (p.size() != dim) throw Error("kmeans: inconsistent point dimensions");

  std::mt19937_64 rng(seed);
  KMeansResult res;
  auto& cent = res.centroids;

  // k-means++ seeding
  cent.push_back(points[std::uniform_int_distribution<int>(0, n - 1)(rng)]);
  std::vector<double> d2(static_cast<std::size_t>(n));
  while (static_cast<int>(cent.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      nearest(cent, points[static_cast<std::size_t>(i)], &d2[static_cast<std::size_t>(i)]);
      total += d2[static_cast<std::size_t>(i)];
    }
    int pick = 0;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (pick = 0; pick < n - 1; ++pick) {
        r -= d2[static_cast<std::size_t>(pick)];
        if (r < 0.0) break;
      }
    } else {
      pick = std::uniform_int_distribution<int>(0, n - 1)(rng);
    }
    cent.push_back(points[static_cast<std::size_t>(pick)]);
  }

  auto& assign = res.assignment;
  assign.assign(static_cast<std::size_t>(n), 0);
  auto assign_all = [&] {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = 0.0;
      assign[static_cast<std::size_t>(i)] = nearest(cent, points[static_cast<std::size_t>(i)], &d);
      total += d;
    }
    return total;
  };
  res.distortion_history.push_back(assign_all());

  for (int it = 0; it < iters; ++it) {
    std::vector<std::vector<double>> sum(static_cast<std::size_t>(k), std::vector<double>(dim, 0.0));
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
      ++count[c];
      for (std::size_t j = 0; j < dim; ++j) sum[c][j] += points[static_cast<std::size_t>(i)][j];
    }
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (count[c] == 0) continue;
      for (std::size_t j = 0; j < dim; ++j) cent[c][j] = sum[c][j] / count[c];
    }
    // Empty clusters take over the point farthest from its own centroid.
    for (std::size_t c = 0; c < static_cast<std::size_t>(k); ++c) {
      if (count[c] != 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        const auto ai = static_cast<std::size_t>(assign[static_cast<std::size_t>(i)]);
        if (count[ai] <= 1) continue;
        const double d = sq_dist(points[static_cast<std::size_t>(i)], cent[ai]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      --count[static_cast<std::size_t>(assign[static_cast<std::size_t>(far)])];
      assign[static_cast<std::size_t>(far)] = static_cast<int>(c);
      count[c] = 1;
      cent[c] = points[static_cast<std::size_t>(far)];
    }
    const double before = res.distortion_history.back();
    const double after = assign_all();
    res.distortion_history.push_back(after);
    if (after == before) break;
  }
  res.distortion = res.distortion_history.back();
  return res;
}

HashIndex build_cluster_hash(const MemoryStore& store, const Vocab& vocab,
                             const EmbeddingMatrix& output, const FeatureLayout& layout, int k,
                             std::uint64_t seed, int iters) {
  if (store.empty()) throw Error("cluster hash: empty store");
  if (output.cols() != layout.dim()) throw Error("cluster hash: matrix does not match layout");
  std::vector<std::vector<double>> vectors;
  vectors.reserve(static_cast<std::size_t>(vocab.size()));
  for (int w = 0; w < vocab.size(); ++w) {
    auto col = output.column(layout.index(Region::kYWords, w));
    std::vector<double> v(col.begin(), col.end());
    // Direction carries the meaning; raw norms let a few outliers claim whole clusters.
    const double norm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
    if (norm > 0.0)
      for (double& x : v) x /= norm;
    vectors.push_back(std::move(v));
  }
  KMeansResult km = kmeans(vectors, k, iters, seed);

  HashIndex h;
  h.kind_ = HashKind::kCluster;
  h.buckets_.assign(static_cast<std::size_t>(k), {});
  h.word_bucket_ = std::move(km.assignment);
  h.centroids_ = std::move(km.centroids);
  h.index_store(store, vocab);
  return h;
}

HashIndex HashIndex::reindexed(const MemoryStore& store, const Vocab& vocab) const {
  if (static_cast<int>(word_bucket_.size()) != vocab.size())
    throw Error("hash index: vocabulary size changed");
  HashIndex h;
  h.kind_ = kind_;
  h.buckets_.assign(buckets_.size(), {});
  h.word_bucket_ = word_bucket_;
  h.centroids_ = centroids_;
  h.index_store(store, vocab);
  return h;
}

std::vector<int> lookup_candidates(const MemoryStore& store, const HashIndex* index,
                                   const Tokens& input, const Vocab& vocab) {
  std::vector<int> out;
  if (index == nullptr) {
    out.resize(static_cast<std::size_t>(store.size()));
    std::iota(out.begin(), out.end(), 0);
    return out;
  }
  for (int b : index->buckets_for(input, vocab)) {
    const auto& bucket = index->bucket(b);
    out.insert(out.end(), bucket.begin(), bucket.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  std::erase_if(out, [&](int s) { return s >= store.size(); });
  return out;
}

}  // namespace memnn
