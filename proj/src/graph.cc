// Copyright 2026 The privagg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "privagg/graph.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "absl/strings/str_cat.h"

namespace privagg {
namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int64_t n) : parent_(n), size_(n, 1) {
    std::iota(parent_.begin(), parent_.end(), int64_t{0});
  }

  int64_t Find(int64_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns true if x and y were in different sets.
  bool Union(int64_t x, int64_t y) {
    x = Find(x);
    y = Find(y);
    if (x == y) return false;
    if (size_[x] < size_[y]) std::swap(x, y);
    parent_[y] = x;
    size_[x] += size_[y];
    return true;
  }

 private:
  std::vector<int64_t> parent_;
  std::vector<int64_t> size_;
};

}  // namespace

absl::StatusOr<Graph> Graph::FromEdges(int64_t n,
                                       std::span<const Edge> edges) {
  if (n < 0) return absl::InvalidArgumentError("negative vertex count");
  Graph g(n);
  for (const auto& [u, v] : edges) {
    if (absl::Status s = g.AddEdge(u, v); !s.ok()) return s;
  }
  return g;
}

absl::Status Graph::AddEdge(int64_t u, int64_t v) {
  if (u < 0 || v < 0 || u >= n() || v >= n()) {
    return absl::InvalidArgumentError(
        absl::StrCat("edge (", u, ", ", v, ") outside [0, ", n(), ")"));
  }
  if (u == v) {
    return absl::InvalidArgumentError(absl::StrCat("self-loop at ", u));
  }
  auto& nu = adjacency_[u];
  auto it = std::lower_bound(nu.begin(), nu.end(), v);
  if (it != nu.end() && *it == v) {
    return absl::InvalidArgumentError(
        absl::StrCat("duplicate edge (", u, ", ", v, ")"));
  }
  nu.insert(it, v);
  auto& nv = adjacency_[v];
  nv.insert(std::lower_bound(nv.begin(), nv.end(), u), u);
  ++edge_count_;
  return absl::OkStatus();
}

bool Graph::HasEdge(int64_t u, int64_t v) const {
  if (u < 0 || u >= n()) return false;
  return std::binary_search(adjacency_[u].begin(), adjacency_[u].end(), v);
}

std::vector<Edge> Graph::Edges() const {
  std::vector<Edge> edges;
  edges.reserve(edge_count_);
  for (int64_t u = 0; u < n(); ++u) {
    for (int64_t v : adjacency_[u]) {
      if (u < v) edges.emplace_back(u, v);
    }
  }
  return edges;
}

Graph CompleteGraph(int64_t n) {
  Graph g(n);
  for (int64_t u = 0; u < n; ++u) {
    for (int64_t v = u + 1; v < n; ++v) (void)g.AddEdge(u, v);
  }
  return g;
}

Graph StarGraph(int64_t n) {
  Graph g(n);
  for (int64_t v = 1; v < n; ++v) (void)g.AddEdge(0, v);
  return g;
}

Graph PathGraph(int64_t n) {
  Graph g(n);
  for (int64_t v = 1; v < n; ++v) (void)g.AddEdge(v - 1, v);
  return g;
}

absl::StatusOr<Graph> ErGenerate(int64_t n, double p, Rng& rng) {
  if (n < 0) return absl::InvalidArgumentError("negative vertex count");
  if (!(p >= 0.0 && p <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("edge probability must lie in [0, 1], got ", p));
  }
  Graph g(n);
  for (int64_t u = 0; u < n; ++u) {
    for (int64_t v = u + 1; v < n; ++v) {
      if (Bernoulli(rng, p)) (void)g.AddEdge(u, v);
    }
  }
  return g;
}

absl::StatusOr<InducedGraph> InducedSubgraph(const Graph& g,
                                             std::span<const int64_t> subset) {
  for (size_t i = 0; i < subset.size(); ++i) {
    if (subset[i] < 0 || subset[i] >= g.n()) {
      return absl::InvalidArgumentError(
          absl::StrCat("vertex ", subset[i], " outside [0, ", g.n(), ")"));
    }
    if (i > 0 && subset[i] <= subset[i - 1]) {
      return absl::InvalidArgumentError(
          "subset must be strictly increasing");
    }
  }
  InducedGraph induced{Graph(static_cast<int64_t>(subset.size())),
                       std::vector<int64_t>(subset.begin(), subset.end())};
  for (size_t i = 0; i < subset.size(); ++i) {
    // Both adjacency lists are sorted: merge to find kept neighbors.
    const std::vector<int64_t>& neighbors = g.Neighbors(subset[i]);
    auto it = std::upper_bound(subset.begin(), subset.end(), subset[i]);
    auto nb = std::upper_bound(neighbors.begin(), neighbors.end(), subset[i]);
    while (it != subset.end() && nb != neighbors.end()) {
      if (*it < *nb) {
        ++it;
      } else if (*nb < *it) {
        ++nb;
      } else {
        (void)induced.graph.AddEdge(static_cast<int64_t>(i),
                                    it - subset.begin());
        ++it;
        ++nb;
      }
    }
  }
  return induced;
}

bool IsConnected(const Graph& g) {
  if (g.n() <= 1) return true;
  DisjointSets sets(g.n());
  int64_t components = g.n();
  for (int64_t u = 0; u < g.n(); ++u) {
    for (int64_t v : g.Neighbors(u)) {
      if (u < v && sets.Union(u, v) && --components == 1) return true;
    }
  }
  return components == 1;
}

bool IsConnectedBfs(const Graph& g) {
  if (g.n() <= 1) return true;
  std::vector<bool> seen(g.n(), false);
  std::deque<int64_t> frontier{0};
  seen[0] = true;
  int64_t reached = 1;
  while (!frontier.empty()) {
    const int64_t u = frontier.front();
    frontier.pop_front();
    for (int64_t v : g.Neighbors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        frontier.push_back(v);
      }
    }
  }
  return reached == g.n();
}

std::vector<int64_t> ComponentLabels(const Graph& g) {
  DisjointSets sets(g.n());
  for (const auto& [u, v] : g.Edges()) sets.Union(u, v);
  std::vector<int64_t> smallest(g.n(), -1);
  std::vector<int64_t> labels(g.n());
  for (int64_t v = 0; v < g.n(); ++v) {
    const int64_t root = sets.Find(v);
    if (smallest[root] < 0) smallest[root] = v;
    labels[v] = smallest[root];
  }
  return labels;
}

std::vector<int64_t> SampleSubset(int64_t n, int64_t m, Rng& rng) {
  std::vector<int64_t> pool(n);
  std::iota(pool.begin(), pool.end(), int64_t{0});
  for (int64_t i = 0; i < m; ++i) {
    const int64_t j =
        i + static_cast<int64_t>(UniformBelow(rng, static_cast<uint64_t>(n - i)));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

double ConnectivityThreshold(int64_t n) {
  if (n <= 1) return 1.0;
  const double nd = static_cast<double>(n);
  return std::min(1.0, 8.0 * std::log(nd) / nd);
}

absl::StatusOr<ConnectivityResult> ConnectivityExperiment(int64_t n, double p,
                                                          int64_t m,
                                                          int64_t trials,
                                                          uint64_t seed) {
  if (n < 1) return absl::InvalidArgumentError("n must be positive");
  if (m < 0 || m > n) {
    return absl::InvalidArgumentError(
        absl::StrCat("subset size ", m, " outside [0, ", n, "]"));
  }
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  ConnectivityResult result;
  result.trials = trials;
  for (int64_t t = 0; t < trials; ++t) {
    Rng rng = DeriveStream(seed, static_cast<uint64_t>(t));
    auto g = ErGenerate(n, p, rng);
    if (!g.ok()) return g.status();
    const std::vector<int64_t> subset = SampleSubset(n, m, rng);
    auto induced = InducedSubgraph(*g, subset);
    if (!induced.ok()) return induced.status();
    if (!IsConnected(induced->graph)) ++result.disconnected;
  }
  return result;
}

}  // namespace privagg
