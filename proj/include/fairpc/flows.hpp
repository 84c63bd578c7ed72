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

#ifndef FAIRPC_FLOWS_HPP_
#define FAIRPC_FLOWS_HPP_

#include <span>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"

namespace fairpc {

/// Per-edge (expected) activation counts. `edge` is indexed like the
/// circuit's edge arrays (edge_begin(n) + ordinal). `leaf` holds the
/// expected value counts reaching each categorical leaf, indexed by
/// leaf_begin(n) + value. `node` is the total flow into each node.
struct FlowTable {
  std::vector<double> edge;
  std::vector<double> leaf;
  std::vector<double> node;
  /// Total row weight covered.
  double rows = 0.0;
  /// Sum of w_i * log Pr(row_i) over the covered rows.
  double loglik = 0.0;

  static FlowTable zeros(const Circuit& c);
  void add(const FlowTable& other);
  void scale(double w);
};

using ExpectedFlowTable = FlowTable;

/// 0/1 flows of a complete assignment. Requires a smooth, decomposable,
/// deterministic circuit.
FlowTable circuit_flow(const Circuit& c, std::span<const int> x);

/// Posterior expected flows given partial evidence (one bottom-up and one
/// top-down pass).
ExpectedFlowTable expected_flow(const Circuit& c, std::span<const int> e);

struct FlowOptions {
  /// Skip the determinism check when the caller has already established it
  /// (EM loops over a fixed structure).
  bool verify_structure = true;
};

/// Weighted sum of per-row expected flows. Table columns must match the
/// circuit variables by name and arity, in order (see align()). Rows are
/// processed in fixed chunks and reduced pairwise, so the result does not
/// depend on the thread count.
ExpectedFlowTable aggregate_flows(const Circuit& c, const DataTable& data,
                                  const FlowOptions& opts = {});

/// Error unless `data` columns match the circuit variables.
void check_table_matches(const Circuit& c, const DataTable& data);

}  // namespace fairpc

#endif  // FAIRPC_FLOWS_HPP_
