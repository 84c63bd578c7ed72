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

#include "fairpc/flows.hpp"

#include <algorithm>
#include <cmath>

#include "fairpc/error.hpp"
#include "fairpc/parallel.hpp"
#include "logmath.hpp"

namespace fairpc {

FlowTable FlowTable::zeros(const Circuit& c) {
  FlowTable t;
  t.edge.assign(c.num_edges(), 0.0);
  t.leaf.assign(c.num_leaf_params(), 0.0);
  t.node.assign(c.num_nodes(), 0.0);
  return t;
}

void FlowTable::add(const FlowTable& o) {
  for (std::size_t i = 0; i < edge.size(); ++i) edge[i] += o.edge[i];
  for (std::size_t i = 0; i < leaf.size(); ++i) leaf[i] += o.leaf[i];
  for (std::size_t i = 0; i < node.size(); ++i) node[i] += o.node[i];
  rows += o.rows;
  loglik += o.loglik;
}

void FlowTable::scale(double w) {
  for (double& v : edge) v *= w;
  for (double& v : leaf) v *= w;
  for (double& v : node) v *= w;
  rows *= w;
  loglik *= w;
}

namespace {

void require_flow_structure(const Circuit& c) {
  if (c.empty()) fail(ErrorCode::kStructure, "circuit has no root");
  if (!c.smooth() || !c.decomposable()) {
    fail(ErrorCode::kUnsupported, "flows need a smooth and decomposable circuit");
  }
  if (determinism(c) != Determinism::kYes) {
    fail(ErrorCode::kUnsupported, "flows need a deterministic circuit");
  }
}

void check_row(const Circuit& c, std::span<const int> x) {
  if (static_cast<int>(x.size()) != c.num_variables()) {
    fail(ErrorCode::kSchema, "assignment has " + std::to_string(x.size()) + " entries, circuit has " +
                                 std::to_string(c.num_variables()) + " variables");
  }
  for (int v = 0; v < c.num_variables(); ++v) {
    if (x[v] != kMissing && (x[v] < 0 || x[v] >= c.variables()[v].arity)) {
      fail(ErrorCode::kSchema, "value out of range for '" + c.variables()[v].name + "'");
    }
  }
}

// Scratch for one row: node log-values from the bottom-up pass and incoming
// expected flow per node for the top-down pass.
struct Scratch {
  std::vector<double> value;
  std::vector<double> flow;
  explicit Scratch(const Circuit& c) : value(c.num_nodes()), flow(c.num_nodes()) {}
};

// Adds w * EF(row) into out. Returns false when the row has zero probability.
bool accumulate(const Circuit& c, std::span<const int> x, double w, Scratch& s, FlowTable& out) {
  forward(c, x, s.value);
  const int root = c.root();
  const double log_root = s.value[root];
  if (log_root == kNegInf) return false;
  std::fill(s.flow.begin(), s.flow.end(), 0.0);
  s.flow[root] = 1.0;
  for (int n = root; n >= 0; --n) {
    const double f = s.flow[n];
    if (f == 0.0) continue;
    out.node[n] += w * f;
    switch (c.kind(n)) {
      case NodeKind::kIndicator:
        break;
      case NodeKind::kCategorical: {
        const std::size_t b = c.leaf_begin(n);
        const int v = x[c.leaf_variable(n)];
        if (v != kMissing) {
          out.leaf[b + v] += w * f;
        } else {
          auto p = c.pmf(n);
          for (std::size_t k = 0; k < p.size(); ++k) out.leaf[b + k] += w * f * p[k];
        }
        break;
      }
      case NodeKind::kProduct: {
        auto ch = c.children(n);
        const std::size_t b = c.edge_begin(n);
        for (std::size_t k = 0; k < ch.size(); ++k) {
          out.edge[b + k] += w * f;
          s.flow[ch[k]] += f;
        }
        break;
      }
      case NodeKind::kSum: {
        auto ch = c.children(n);
        auto lw = c.log_weights(n);
        const std::size_t b = c.edge_begin(n);
        const double vn = s.value[n];
        for (std::size_t k = 0; k < ch.size(); ++k) {
          const double vc = s.value[ch[k]];
          if (vc == kNegInf || lw[k] == kNegInf) continue;
          const double ef = f * std::exp(lw[k] + vc - vn);
          out.edge[b + k] += w * ef;
          s.flow[ch[k]] += ef;
        }
        break;
      }
    }
  }
  out.rows += w;
  out.loglik += w * log_root;
  return true;
}

}  // namespace

FlowTable circuit_flow(const Circuit& c, std::span<const int> x) {
  require_flow_structure(c);
  check_row(c, x);
  for (int v : c.scope(c.root())) {
    if (x[v] == kMissing) {
      fail(ErrorCode::kIncompleteAssignment, "variable '" + c.variables()[v].name + "' has no value");
    }
  }
  std::vector<double> value(c.num_nodes());
  forward(c, x, value);
  const int root = c.root();
  if (value[root] == kNegInf) fail(ErrorCode::kRowImpossible, "assignment has zero probability");

  // Under determinism the active sub-circuit of a complete input is a tree:
  // a node is active when some active parent reaches it through a nonzero
  // edge, and each active sum has exactly one nonzero child.
  FlowTable t = FlowTable::zeros(c);
  std::vector<char> active(c.num_nodes(), 0);
  active[root] = 1;
  for (int n = root; n >= 0; --n) {
    if (!active[n]) continue;
    t.node[n] = 1.0;
    if (c.kind(n) == NodeKind::kCategorical) {
      t.leaf[c.leaf_begin(n) + x[c.leaf_variable(n)]] = 1.0;
      continue;
    }
    if (c.is_leaf(n)) continue;
    auto ch = c.children(n);
    auto lw = c.log_weights(n);
    const bool is_sum = c.kind(n) == NodeKind::kSum;
    for (std::size_t k = 0; k < ch.size(); ++k) {
      if (value[ch[k]] == kNegInf) continue;
      if (is_sum && lw[k] == kNegInf) continue;
      t.edge[c.edge_begin(n) + k] = 1.0;
      active[ch[k]] = 1;
    }
  }
  t.rows = 1.0;
  t.loglik = value[root];
  return t;
}

ExpectedFlowTable expected_flow(const Circuit& c, std::span<const int> e) {
  require_flow_structure(c);
  check_row(c, e);
  FlowTable t = FlowTable::zeros(c);
  Scratch s(c);
  if (!accumulate(c, e, 1.0, s, t)) {
    fail(ErrorCode::kNullEvidence, "expected flows conditioned on zero-probability evidence");
  }
  return t;
}

void check_table_matches(const Circuit& c, const DataTable& data) {
  const auto& cols = data.schema().columns;
  if (static_cast<int>(cols.size()) != c.num_variables()) {
    fail(ErrorCode::kSchema, "table has " + std::to_string(cols.size()) + " columns, circuit has " +
                                 std::to_string(c.num_variables()) + " variables");
  }
  for (int v = 0; v < c.num_variables(); ++v) {
    const auto& var = c.variables()[v];
    if (cols[v].name != var.name || cols[v].arity != var.arity) {
      fail(ErrorCode::kSchema, "column " + std::to_string(v) + " ('" + cols[v].name +
                                   "') does not match circuit variable '" + var.name + "'");
    }
  }
}

ExpectedFlowTable aggregate_flows(const Circuit& c, const DataTable& data, const FlowOptions& opts) {
  if (opts.verify_structure) {
    require_flow_structure(c);
  } else if (c.empty()) {
    fail(ErrorCode::kStructure, "circuit has no root");
  }
  check_table_matches(c, data);
  const std::size_t n = data.num_rows();
  const BlockPlan plan = plan_blocks(n);
  const std::size_t chunks = plan.blocks;
  if (chunks == 0) return FlowTable::zeros(c);

  std::vector<FlowTable> partial(chunks);
  parallel_for(chunks, [&](std::size_t chunk) {
    FlowTable t = FlowTable::zeros(c);
    Scratch s(c);
    const std::size_t end = std::min(n, plan.begin(chunk + 1));
    for (std::size_t r = plan.begin(chunk); r < end; ++r) {
      const double w = data.weight(r);
      if (w == 0.0) continue;
      if (!accumulate(c, data.row(r), w, s, t)) {
        fail(ErrorCode::kRowImpossible, "row " + std::to_string(r) + " has zero probability");
      }
    }
    partial[chunk] = std::move(t);
  });
  // Pairwise tree reduction in chunk order.
  for (std::size_t stride = 1; stride < chunks; stride *= 2) {
    for (std::size_t i = 0; i + stride < chunks; i += 2 * stride) {
      partial[i].add(partial[i + stride]);
      partial[i + stride] = FlowTable();
    }
  }
  return std::move(partial[0]);
}

}  // namespace fairpc
