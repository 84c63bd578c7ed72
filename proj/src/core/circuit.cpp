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

#include "fairpc/circuit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "fairpc/error.hpp"
#include "fairpc/random.hpp"
#include "logmath.hpp"

namespace fairpc {

// ---------------------------------------------------------------------------
// Circuit

bool Circuit::scope_contains(int n, int var) const {
  auto s = scope(n);
  return std::binary_search(s.begin(), s.end(), var);
}

void Circuit::add_tied_group(TiedProductGroup group) {
  if (group.node < 0 || group.node >= num_nodes() || kind(group.node) != NodeKind::kSum) {
    fail(ErrorCode::kStructure, "tied group must reference a sum node");
  }
  const auto k = children(group.node).size();
  if (group.rows * group.cols != static_cast<int>(k) ||
      group.ordinal.size() != k) {
    fail(ErrorCode::kStructure, "tied group shape does not match the sum node's children");
  }
  std::vector<int> sorted = group.ordinal;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < k; ++i) {
    if (sorted[i] != static_cast<int>(i)) {
      fail(ErrorCode::kStructure, "tied group ordinals must be a permutation");
    }
  }
  tied_.push_back(std::move(group));
}

void Circuit::set_log_weights(int n, std::span<const double> log_weights) {
  if (kind(n) != NodeKind::kSum || log_weights.size() != children(n).size()) {
    fail(ErrorCode::kStructure, "weight write does not match sum node " + std::to_string(n));
  }
  std::copy(log_weights.begin(), log_weights.end(), log_weight_.begin() + child_begin_[n]);
}

void Circuit::set_weights(int n, std::span<const double> weights) {
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) lw[i] = safe_log(weights[i]);
  set_log_weights(n, lw);
}

void Circuit::set_pmf(int n, std::span<const double> pmf) {
  if (kind(n) != NodeKind::kCategorical || pmf.size() != this->pmf(n).size()) {
    fail(ErrorCode::kStructure, "pmf write does not match categorical leaf " + std::to_string(n));
  }
  for (std::size_t i = 0; i < pmf.size(); ++i) {
    pmf_[leaf_begin_[n] + i] = pmf[i];
    log_pmf_[leaf_begin_[n] + i] = safe_log(pmf[i]);
  }
}

// ---------------------------------------------------------------------------
// CircuitBuilder

CircuitBuilder::CircuitBuilder(std::vector<Variable> vars) : vars_(std::move(vars)) {
  for (std::size_t i = 0; i < vars_.size(); ++i) {
    if (vars_[i].id != static_cast<int>(i)) {
      fail(ErrorCode::kSchema, "variable ids must be contiguous from 0");
    }
    if (vars_[i].arity < 2) {
      fail(ErrorCode::kSchema, "variable '" + vars_[i].name + "' has arity < 2");
    }
  }
}

void CircuitBuilder::check_var(int var) const {
  if (var < 0 || var >= static_cast<int>(vars_.size())) {
    fail(ErrorCode::kSchema, "unknown variable id " + std::to_string(var));
  }
}

void CircuitBuilder::check_children(const std::vector<int>& children) const {
  for (int c : children) {
    if (c < 0 || c >= num_nodes()) {
      fail(ErrorCode::kStructure, "child id " + std::to_string(c) + " does not exist");
    }
  }
}

int CircuitBuilder::indicator(int var, int value) {
  check_var(var);
  if (value < 0 || value >= vars_[var].arity) {
    fail(ErrorCode::kSchema, "indicator value out of range for '" + vars_[var].name + "'");
  }
  nodes_.push_back(Node{NodeKind::kIndicator, var, value, {}, {}, {}});
  return num_nodes() - 1;
}

int CircuitBuilder::categorical(int var, std::vector<double> pmf) {
  check_var(var);
  if (static_cast<int>(pmf.size()) != vars_[var].arity) {
    fail(ErrorCode::kSchema, "pmf size does not match arity of '" + vars_[var].name + "'");
  }
  double total = 0.0;
  for (double p : pmf) {
    if (!(p >= 0.0)) fail(ErrorCode::kStructure, "negative or NaN pmf entry");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    fail(ErrorCode::kStructure, "pmf does not sum to 1");
  }
  for (double& p : pmf) p /= total;
  nodes_.push_back(Node{NodeKind::kCategorical, var, -1, {}, {}, std::move(pmf)});
  return num_nodes() - 1;
}

int CircuitBuilder::product(std::vector<int> children) {
  check_children(children);
  if (children.size() < 2) {
    fail(ErrorCode::kStructure, "product node needs at least two children");
  }
  nodes_.push_back(Node{NodeKind::kProduct, -1, -1, std::move(children), {}, {}});
  return num_nodes() - 1;
}

int CircuitBuilder::sum(std::vector<int> children, std::vector<double> weights) {
  if (weights.size() != children.size()) {
    fail(ErrorCode::kStructure, "sum node needs one weight per child");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) fail(ErrorCode::kStructure, "negative or NaN sum weight");
    total += w;
  }
  if (!(total > 0.0)) fail(ErrorCode::kStructure, "sum weights are all zero");
  std::vector<double> lw(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) lw[i] = safe_log(weights[i] / total);
  return sum_log(std::move(children), std::move(lw));
}

int CircuitBuilder::sum_log(std::vector<int> children, std::vector<double> log_weights) {
  check_children(children);
  if (children.empty()) fail(ErrorCode::kStructure, "sum node needs at least one child");
  if (log_weights.size() != children.size()) {
    fail(ErrorCode::kStructure, "sum node needs one weight per child");
  }
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      fail(ErrorCode::kStructure, "invalid log weight");
    }
  }
  nodes_.push_back(
      Node{NodeKind::kSum, -1, -1, std::move(children), std::move(log_weights), {}});
  return num_nodes() - 1;
}

std::vector<int> CircuitBuilder::import(const Circuit& c, std::span<const int> var_map) {
  if (!var_map.empty() && static_cast<int>(var_map.size()) != c.num_variables()) {
    fail(ErrorCode::kSchema, "variable map size does not match the imported circuit");
  }
  auto map_var = [&](int v) { return var_map.empty() ? v : var_map[v]; };
  std::vector<int> id(c.num_nodes());
  for (int n = 0; n < c.num_nodes(); ++n) {
    Node node{c.kind(n), -1, -1, {}, {}, {}};
    switch (c.kind(n)) {
      case NodeKind::kIndicator:
        node.var = map_var(c.leaf_variable(n));
        node.value = c.indicator_value(n);
        break;
      case NodeKind::kCategorical:
        node.var = map_var(c.leaf_variable(n));
        node.pmf.assign(c.pmf(n).begin(), c.pmf(n).end());
        break;
      case NodeKind::kSum:
        node.log_weights.assign(c.log_weights(n).begin(), c.log_weights(n).end());
        [[fallthrough]];
      case NodeKind::kProduct:
        for (int ch : c.children(n)) node.children.push_back(id[ch]);
        break;
    }
    if (node.var >= 0) {
      check_var(node.var);
      if (vars_[node.var].arity != c.variables()[c.leaf_variable(n)].arity) {
        fail(ErrorCode::kSchema, "imported variable arity mismatch");
      }
    }
    nodes_.push_back(std::move(node));
    id[n] = num_nodes() - 1;
  }
  for (const auto& g : c.tied_groups()) {
    TiedProductGroup t = g;
    t.node = id[g.node];
    tied_.push_back(std::move(t));
  }
  return id;
}

void CircuitBuilder::replace_children(int sum_node, std::vector<int> children,
                                      std::vector<double> log_weights) {
  if (sum_node < 0 || sum_node >= num_nodes() || nodes_[sum_node].kind != NodeKind::kSum) {
    fail(ErrorCode::kStructure, "replace_children expects a sum node");
  }
  check_children(children);
  if (children.empty() || children.size() != log_weights.size()) {
    fail(ErrorCode::kStructure, "replace_children needs matching children and weights");
  }
  // Any tie on this node no longer matches its children.
  std::erase_if(tied_, [&](const TiedProductGroup& g) { return g.node == sum_node; });
  nodes_[sum_node].children = std::move(children);
  nodes_[sum_node].log_weights = std::move(log_weights);
}

void CircuitBuilder::tie(TiedProductGroup group) { tied_.push_back(std::move(group)); }

Circuit CircuitBuilder::build(int root) const {
  if (root < 0 || root >= num_nodes()) fail(ErrorCode::kStructure, "root does not exist");

  // Iterative post-order DFS; state 1 = on stack, 2 = emitted.
  std::vector<char> state(nodes_.size(), 0);
  std::vector<int> order;
  std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
  state[root] = 1;
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    const auto& ch = nodes_[n].children;
    if (next < ch.size()) {
      int c = ch[next++];
      if (state[c] == 1) fail(ErrorCode::kStructure, "circuit contains a cycle");
      if (state[c] == 0) {
        state[c] = 1;
        stack.emplace_back(c, 0);
      }
    } else {
      state[n] = 2;
      order.push_back(n);
      stack.pop_back();
    }
  }

  // Keep builder order when it is already topological so ids stay stable
  // (file round trips, node ids in diagnostics).
  bool ascending = true;
  for (int n : order) {
    for (int ch : nodes_[n].children) {
      if (ch >= n) ascending = false;
    }
  }
  if (ascending) std::sort(order.begin(), order.end());

  std::vector<int> new_id(nodes_.size(), -1);
  for (std::size_t i = 0; i < order.size(); ++i) new_id[order[i]] = static_cast<int>(i);

  Circuit c;
  c.vars_ = vars_;
  const std::size_t n_nodes = order.size();
  c.kind_.reserve(n_nodes);
  c.var_.reserve(n_nodes);
  c.value_.reserve(n_nodes);
  std::vector<std::vector<int>> scopes(n_nodes);
  for (std::size_t i = 0; i < n_nodes; ++i) {
    const Node& node = nodes_[order[i]];
    c.kind_.push_back(node.kind);
    c.var_.push_back(node.var);
    c.value_.push_back(node.value);
    for (std::size_t k = 0; k < node.children.size(); ++k) {
      c.children_.push_back(new_id[node.children[k]]);
      c.log_weight_.push_back(node.kind == NodeKind::kSum ? node.log_weights[k] : 0.0);
    }
    c.child_begin_.push_back(c.children_.size());
    for (double p : node.pmf) {
      c.pmf_.push_back(p);
      c.log_pmf_.push_back(safe_log(p));
    }
    c.leaf_begin_.push_back(c.pmf_.size());

    auto& sc = scopes[i];
    if (node.var >= 0) {
      sc.push_back(node.var);
    } else {
      std::size_t total = 0;
      for (int ch : node.children) {
        const auto& cs = scopes[new_id[ch]];
        total += cs.size();
        std::vector<int> merged;
        merged.reserve(sc.size() + cs.size());
        std::set_union(sc.begin(), sc.end(), cs.begin(), cs.end(), std::back_inserter(merged));
        sc = std::move(merged);
      }
      if (node.kind == NodeKind::kProduct && total != sc.size()) c.decomposable_ = false;
      if (node.kind == NodeKind::kSum) {
        for (int ch : node.children) {
          if (scopes[new_id[ch]].size() != sc.size()) c.smooth_ = false;
        }
      }
    }
    c.scope_vars_.insert(c.scope_vars_.end(), sc.begin(), sc.end());
    c.scope_begin_.push_back(c.scope_vars_.size());
  }
  c.root_ = new_id[root];
  for (const auto& g : tied_) {
    if (g.node < 0 || g.node >= num_nodes() || new_id[g.node] < 0) continue;
    TiedProductGroup t = g;
    t.node = new_id[g.node];
    c.add_tied_group(std::move(t));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Inference

namespace {

void check_assignment(const Circuit& c, std::span<const int> x) {
  if (static_cast<int>(x.size()) != c.num_variables()) {
    fail(ErrorCode::kSchema, "assignment has " + std::to_string(x.size()) +
                                 " entries, circuit has " +
                                 std::to_string(c.num_variables()) + " variables");
  }
  for (int v = 0; v < c.num_variables(); ++v) {
    if (x[v] != kMissing && (x[v] < 0 || x[v] >= c.variables()[v].arity)) {
      fail(ErrorCode::kSchema, "value " + std::to_string(x[v]) + " out of range for '" +
                                   c.variables()[v].name + "'");
    }
  }
}

void check_nonempty(const Circuit& c) {
  if (c.empty()) fail(ErrorCode::kStructure, "circuit has no root");
}

}  // namespace

void forward(const Circuit& c, std::span<const int> x, std::span<double> out) {
  const int n_nodes = c.num_nodes();
  for (int n = 0; n < n_nodes; ++n) {
    switch (c.kind(n)) {
      case NodeKind::kIndicator: {
        const int v = x[c.leaf_variable(n)];
        out[n] = (v == kMissing || v == c.indicator_value(n)) ? 0.0 : kNegInf;
        break;
      }
      case NodeKind::kCategorical: {
        const int v = x[c.leaf_variable(n)];
        out[n] = v == kMissing ? 0.0 : c.log_pmf(n)[v];
        break;
      }
      case NodeKind::kProduct: {
        double s = 0.0;
        for (int ch : c.children(n)) s += out[ch];
        out[n] = s;
        break;
      }
      case NodeKind::kSum: {
        auto ch = c.children(n);
        auto lw = c.log_weights(n);
        double m = kNegInf;
        for (std::size_t k = 0; k < ch.size(); ++k) m = std::max(m, lw[k] + out[ch[k]]);
        if (m == kNegInf) {
          out[n] = kNegInf;
          break;
        }
        double s = 0.0;
        for (std::size_t k = 0; k < ch.size(); ++k) s += std::exp(lw[k] + out[ch[k]] - m);
        out[n] = m + std::log(s);
        break;
      }
    }
  }
}

double log_evaluate_complete(const Circuit& c, std::span<const int> x) {
  check_nonempty(c);
  check_assignment(c, x);
  for (int v : c.scope(c.root())) {
    if (x[v] == kMissing) {
      fail(ErrorCode::kIncompleteAssignment,
           "variable '" + c.variables()[v].name + "' has no value");
    }
  }
  std::vector<double> buf(c.num_nodes());
  forward(c, x, buf);
  return buf[c.root()];
}

double evaluate_complete(const Circuit& c, std::span<const int> x) {
  return std::exp(log_evaluate_complete(c, x));
}

double log_marginal(const Circuit& c, std::span<const int> e) {
  check_nonempty(c);
  check_assignment(c, e);
  if (!c.smooth() || !c.decomposable()) {
    fail(ErrorCode::kUnsupported, "marginal queries need a smooth and decomposable circuit");
  }
  std::vector<double> buf(c.num_nodes());
  forward(c, e, buf);
  return buf[c.root()];
}

double evaluate_marginal(const Circuit& c, std::span<const int> e) {
  return std::exp(log_marginal(c, e));
}

double conditional(const Circuit& c, std::span<const int> q, std::span<const int> e) {
  check_assignment(c, q);
  const double log_e = log_marginal(c, e);
  if (log_e == kNegInf) {
    fail(ErrorCode::kNullEvidence, "conditioning on zero-probability evidence");
  }
  Assignment joint(e.begin(), e.end());
  for (std::size_t v = 0; v < joint.size(); ++v) {
    if (q[v] == kMissing) continue;
    if (joint[v] != kMissing && joint[v] != q[v]) return 0.0;
    joint[v] = q[v];
  }
  return std::exp(log_marginal(c, joint) - log_e);
}

bool check_smooth(const Circuit& c) { return c.smooth(); }
bool check_decomposable(const Circuit& c) { return c.decomposable(); }

namespace {

// Over-approximation of each node's support projected onto one variable, as
// a bitmask over its values. Disjoint projections imply disjoint supports.
class SupportMasks {
 public:
  explicit SupportMasks(const Circuit& c) : c_(c), masks_(c.num_variables()) {}

  // Empty span when the variable is too wide for a 64-bit mask.
  std::span<const std::uint64_t> of(int var) {
    auto& m = masks_[var];
    if (!m.empty() || c_.variables()[var].arity > 64) return m;
    const int arity = c_.variables()[var].arity;
    const std::uint64_t full = arity == 64 ? ~0ULL : ((1ULL << arity) - 1);
    m.assign(c_.num_nodes(), full);
    for (int n = 0; n < c_.num_nodes(); ++n) {
      if (!c_.scope_contains(n, var)) continue;
      switch (c_.kind(n)) {
        case NodeKind::kIndicator:
          m[n] = 1ULL << c_.indicator_value(n);
          break;
        case NodeKind::kCategorical: {
          std::uint64_t bits = 0;
          auto p = c_.pmf(n);
          for (int v = 0; v < arity; ++v) {
            if (p[v] > 0.0) bits |= 1ULL << v;
          }
          m[n] = bits;
          break;
        }
        case NodeKind::kProduct: {
          std::uint64_t bits = full;
          for (int ch : c_.children(n)) bits &= m[ch];
          m[n] = bits;
          break;
        }
        case NodeKind::kSum: {
          std::uint64_t bits = 0;
          auto ch = c_.children(n);
          auto lw = c_.log_weights(n);
          for (std::size_t k = 0; k < ch.size(); ++k) {
            if (lw[k] != kNegInf) bits |= m[ch[k]];
          }
          m[n] = bits;
          break;
        }
      }
    }
    return m;
  }

 private:
  const Circuit& c_;
  std::vector<std::vector<std::uint64_t>> masks_;
};

bool structurally_deterministic(const Circuit& c, int n, SupportMasks& masks) {
  auto ch = c.children(n);
  auto sc = c.scope(n);
  int hint = -1;
  for (std::size_t i = 0; i < ch.size(); ++i) {
    for (std::size_t j = i + 1; j < ch.size(); ++j) {
      auto disjoint_on = [&](int v) {
        auto m = masks.of(v);
        return !m.empty() && (m[ch[i]] & m[ch[j]]) == 0;
      };
      if (hint >= 0 && disjoint_on(hint)) continue;
      bool found = false;
      for (int v : sc) {
        if (disjoint_on(v)) {
          hint = v;
          found = true;
          break;
        }
      }
      if (!found) return false;
    }
  }
  return true;
}

constexpr double kExhaustiveLimit = 1 << 20;

// Enumerates every assignment of the node's scope and checks that at most
// one child is nonzero.
Determinism exhaustive_deterministic(const Circuit& c, int n) {
  auto sc = c.scope(n);
  double combos = 1.0;
  for (int v : sc) combos *= c.variables()[v].arity;
  if (combos > kExhaustiveLimit) return Determinism::kUnverifiable;

  // Descendants of n in topological order.
  std::vector<char> in_sub(c.num_nodes(), 0);
  in_sub[n] = 1;
  for (int m = n; m >= 0; --m) {
    if (!in_sub[m]) continue;
    for (int ch : c.children(m)) in_sub[ch] = 1;
  }
  std::vector<int> sub;
  for (int m = 0; m <= n; ++m) {
    if (in_sub[m]) sub.push_back(m);
  }

  Assignment x(c.num_variables(), kMissing);
  for (int v : sc) x[v] = 0;
  std::vector<double> out(c.num_nodes(), 0.0);
  for (;;) {
    for (int m : sub) {
      switch (c.kind(m)) {
        case NodeKind::kIndicator:
          out[m] = x[c.leaf_variable(m)] == c.indicator_value(m) ? 0.0 : kNegInf;
          break;
        case NodeKind::kCategorical:
          out[m] = c.log_pmf(m)[x[c.leaf_variable(m)]];
          break;
        case NodeKind::kProduct: {
          double s = 0.0;
          for (int ch : c.children(m)) s += out[ch];
          out[m] = s;
          break;
        }
        case NodeKind::kSum: {
          auto ch = c.children(m);
          auto lw = c.log_weights(m);
          double acc = kNegInf;
          for (std::size_t k = 0; k < ch.size(); ++k) acc = log_add(acc, lw[k] + out[ch[k]]);
          out[m] = acc;
          break;
        }
      }
    }
    int nonzero = 0;
    for (int ch : c.children(n)) {
      if (out[ch] != kNegInf) ++nonzero;
    }
    if (nonzero > 1) return Determinism::kNo;

    std::size_t k = 0;
    for (; k < sc.size(); ++k) {
      int v = sc[k];
      if (++x[v] < c.variables()[v].arity) break;
      x[v] = 0;
    }
    if (k == sc.size()) break;
  }
  return Determinism::kYes;
}

}  // namespace

Determinism determinism(const Circuit& c) {
  if (c.empty()) return Determinism::kYes;
  SupportMasks masks(c);
  Determinism result = Determinism::kYes;
  for (int n = 0; n < c.num_nodes(); ++n) {
    if (c.kind(n) != NodeKind::kSum || c.children(n).size() < 2) continue;
    if (structurally_deterministic(c, n, masks)) continue;
    Determinism d = exhaustive_deterministic(c, n);
    if (d == Determinism::kNo) return d;
    if (d == Determinism::kUnverifiable) result = d;
  }
  return result;
}

bool check_deterministic(const Circuit& c) { return determinism(c) == Determinism::kYes; }

std::vector<NormalizationIssue> normalization_issues(const Circuit& c, double tol) {
  std::vector<NormalizationIssue> issues;
  for (int n = 0; n < c.num_nodes(); ++n) {
    if (c.kind(n) != NodeKind::kSum) continue;
    double total = 0.0;
    for (double lw : c.log_weights(n)) total += std::exp(lw);
    if (!(std::abs(total - 1.0) <= tol)) issues.push_back({n, total});
  }
  return issues;
}

std::vector<Assignment> sample(const Circuit& c, std::size_t count, std::uint64_t seed) {
  std::vector<Assignment> out;
  if (count == 0) return out;
  check_nonempty(c);
  out.reserve(count);
  Rng rng = make_rng(seed, 0x5a3b1e);
  std::vector<int> stack;
  std::vector<double> w;
  for (std::size_t s = 0; s < count; ++s) {
    Assignment x(c.num_variables(), kMissing);
    stack.assign(1, c.root());
    while (!stack.empty()) {
      int n = stack.back();
      stack.pop_back();
      switch (c.kind(n)) {
        case NodeKind::kIndicator:
          x[c.leaf_variable(n)] = c.indicator_value(n);
          break;
        case NodeKind::kCategorical:
          x[c.leaf_variable(n)] = static_cast<int>(sample_index(rng, c.pmf(n)));
          break;
        case NodeKind::kProduct: {
          auto ch = c.children(n);
          for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
          break;
        }
        case NodeKind::kSum: {
          auto lw = c.log_weights(n);
          w.resize(lw.size());
          for (std::size_t k = 0; k < lw.size(); ++k) w[k] = std::exp(lw[k]);
          stack.push_back(c.children(n)[sample_index(rng, w)]);
          break;
        }
      }
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace fairpc
