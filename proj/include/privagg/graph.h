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

// Simple undirected graphs for the communication network between users,
// Erdos-Renyi generation, and connectivity of induced subgraphs.

#ifndef PRIVAGG_GRAPH_H_
#define PRIVAGG_GRAPH_H_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "privagg/random.h"

namespace privagg {

using Edge = std::pair<int64_t, int64_t>;

// Vertices 0 .. n-1; no self-loops or parallel edges.
class Graph {
 public:
  explicit Graph(int64_t n = 0) : adjacency_(n) {}

  static absl::StatusOr<Graph> FromEdges(int64_t n,
                                         std::span<const Edge> edges);

  int64_t n() const { return static_cast<int64_t>(adjacency_.size()); }
  int64_t edge_count() const { return edge_count_; }

  // Rejects out-of-range endpoints, self-loops and duplicates.
  absl::Status AddEdge(int64_t u, int64_t v);
  bool HasEdge(int64_t u, int64_t v) const;

  // Sorted ascending.
  const std::vector<int64_t>& Neighbors(int64_t v) const {
    return adjacency_[v];
  }

  // Every edge once as (u, v) with u < v, in lexicographic order.
  std::vector<Edge> Edges() const;

 private:
  std::vector<std::vector<int64_t>> adjacency_;
  int64_t edge_count_ = 0;
};

Graph CompleteGraph(int64_t n);
// Vertex 0 joined to every other vertex.
Graph StarGraph(int64_t n);
Graph PathGraph(int64_t n);

// G(n, p): each of the n(n-1)/2 pairs, in lexicographic order, is kept when a
// fresh uniform draw falls below p. Two calls on equal streams with p1 <= p2
// therefore give nested edge sets.
absl::StatusOr<Graph> ErGenerate(int64_t n, double p, Rng& rng);

// The subgraph on `vertices` (strictly increasing original ids), relabelled
// so that local vertex i is vertices[i].
struct InducedGraph {
  Graph graph;
  std::vector<int64_t> vertices;
};

absl::StatusOr<InducedGraph> InducedSubgraph(const Graph& g,
                                             std::span<const int64_t> subset);

// Union-find. Graphs with at most one vertex count as connected.
bool IsConnected(const Graph& g);
// Breadth-first search; kept as an independent check of IsConnected.
bool IsConnectedBfs(const Graph& g);

// Component id per vertex: the smallest vertex id in its component.
std::vector<int64_t> ComponentLabels(const Graph& g);

// Uniform m-subset of {0, .., n-1}, sorted.
std::vector<int64_t> SampleSubset(int64_t n, int64_t m, Rng& rng);

// 8 ln(n) / n, capped at 1: the edge probability at which a random half of
// the vertices induces a connected subgraph with probability >= 1 - 1/n.
double ConnectivityThreshold(int64_t n);

struct ConnectivityResult {
  int64_t trials = 0;
  int64_t disconnected = 0;
  double frequency() const {
    return static_cast<double>(disconnected) / static_cast<double>(trials);
  }
};

// Over `trials` independent draws of G(n, p) and a uniform m-subset S,
// counts how often the subgraph induced by S is disconnected. Trial t uses
// DeriveStream(seed, t).
absl::StatusOr<ConnectivityResult> ConnectivityExperiment(int64_t n, double p,
                                                          int64_t m,
                                                          int64_t trials,
                                                          uint64_t seed);

}  // namespace privagg

#endif  // PRIVAGG_GRAPH_H_
