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

#ifndef FAIRPC_SYNTHGEN_HPP_
#define FAIRPC_SYNTHGEN_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"
#include "fairpc/fairmodel.hpp"

namespace fairpc {

struct SynthConfig {
  int n_features = 15;
  std::size_t n_samples = 100000;
  /// Test rows; 0 means the same as n_samples.
  std::size_t n_test = 0;
  std::uint64_t seed = 0;
  FairHeadParams head;
  /// Lifts the 10..30 feature range.
  bool allow_any_features = false;

  void validate() const;
};

struct SynthBundle {
  FairModel true_model;
  /// Columns S, D, X0.. with D_f declared latent.
  Schema schema;
  DataTable train;
  /// As train plus the true D_f column.
  DataTable test;
  /// Tree parent arrays over the features, one per head context.
  std::array<std::vector<int>, 4> trees;
};

/// Uniform random labelled tree over vars (decoded from a random Pruefer
/// sequence, rooted at variable 0); parent ids, -1 for the root.
std::vector<int> random_tree(int n, std::uint64_t seed);

/// Random tree-shaped distribution: each CPT row is a Dirichlet(1) draw p
/// smoothed as (p + 1) / (1 + k). parent_out receives the tree.
Circuit random_tree_subcircuit(const std::vector<Variable>& vars, std::uint64_t seed,
                               std::vector<int>* parent_out = nullptr);

SynthBundle generate(const SynthConfig& config);

/// Writes train.csv, test.csv, schema.json and true_circuit.pc into dir
/// (created if needed).
void write_bundle(const SynthBundle& bundle, const std::string& dir);

}  // namespace fairpc

#endif  // FAIRPC_SYNTHGEN_HPP_
