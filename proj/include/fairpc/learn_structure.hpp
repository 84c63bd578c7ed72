// Copyright 2026 The fairpc Authors
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

#ifndef FAIRPC_LEARN_STRUCTURE_HPP_
#define FAIRPC_LEARN_STRUCTURE_HPP_

#include <cstdint>
#include <utility>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"

namespace fairpc {

/// Symmetric pairwise mutual information in nats.
class MiMatrix {
 public:
  MiMatrix() = default;
  explicit MiMatrix(int n) : n_(n), v_(static_cast<std::size_t>(n) * n, 0.0) {}

  int size() const { return n_; }
  double operator()(int i, int j) const { return v_[static_cast<std::size_t>(i) * n_ + j]; }
  void set(int i, int j, double x) {
    v_[static_cast<std::size_t>(i) * n_ + j] = x;
    v_[static_cast<std::size_t>(j) * n_ + i] = x;
  }

 private:
  int n_ = 0;
  std::vector<double> v_;
};

/// MI from alpha-smoothed joint counts; a row contributes to a pair only
/// when both cells are observed.
MiMatrix pairwise_mi(const DataTable& data, double alpha);

/// Maximum spanning tree (Kruskal; ties go to the lexicographically smaller
/// (min id, max id) edge) rooted at variable 0. Returns parent ids, -1 for
/// the root.
std::vector<int> max_spanning_tree(const MiMatrix& mi);

/// Undirected edges (min, max) of a parent array, sorted.
std::vector<std::pair<int, int>> tree_edges(const std::vector<int>& parent);

/// Compiles a tree-shaped Bayesian network into a smooth, decomposable,
/// deterministic circuit. cpt[u] is row-major: one row per value of
/// parent[u] (a single row for the root) with one column per value of u.
/// A single variable compiles to one categorical leaf.
Circuit compile_tree(const std::vector<Variable>& vars, const std::vector<int>& parent,
                     const std::vector<std::vector<double>>& cpt);

/// CPTs along a tree from smoothed observed pairwise counts.
std::vector<std::vector<double>> tree_cpts(const DataTable& data, const std::vector<int>& parent,
                                           double alpha);

Circuit chow_liu(const DataTable& data, double alpha);

/// Log Pr_n(var = value) for every node n (log 1 when var is outside the
/// node's scope).
std::vector<double> value_marginals(const Circuit& c, int var, int value);

/// True when the child of the edge gives positive probability to at least
/// two values of var.
bool splittable(const Circuit& c, int sum_node, int ordinal, int var);

/// Replaces edge (sum_node, ordinal) by one edge per value of `var`. The new
/// child for value j is the old child conditioned on var = j, with edge
/// weight w * Pr_child(var = j). Values with zero probability get no edge.
/// The represented distribution is unchanged.
Circuit split(const Circuit& c, int sum_node, int ordinal, int var);

struct StructureConfig {
  int max_splits = 200;
  double validation_fraction = 0.1;
  int patience = 3;
  double alpha = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct StructureResult {
  Circuit circuit;
  /// Mean per-row log-likelihoods; entry 0 is the Chow-Liu start.
  std::vector<double> train_ll;
  std::vector<double> validation_ll;
  int splits_applied = 0;
  /// Index into the traces of the returned circuit.
  int best_step = 0;
};

StructureResult strudel_learn(const DataTable& data, const StructureConfig& config);

}  // namespace fairpc

#endif  // FAIRPC_LEARN_STRUCTURE_HPP_
