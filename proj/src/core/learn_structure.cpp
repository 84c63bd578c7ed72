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

#include "fairpc/learn_structure.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "fairpc/error.hpp"
#include "fairpc/flows.hpp"
#include "fairpc/learn_params.hpp"
#include "logmath.hpp"

namespace fairpc {

MiMatrix pairwise_mi(const DataTable& data, double alpha) {
  if (!(alpha >= 0.0)) fail(ErrorCode::kUsage, "alpha must be nonnegative");
  const int n = static_cast<int>(data.num_columns());
  const auto& cols = data.schema().columns;
  for (int v = 0; v < n; ++v) {
    bool seen = false;
    for (std::size_t r = 0; r < data.num_rows() && !seen; ++r) {
      seen = data.at(r, v) != kMissing && data.weight(r) > 0.0;
    }
    if (!seen) fail(ErrorCode::kInsufficientData, "variable '" + cols[v].name + "' is never observed");
  }
  MiMatrix mi(n);
  std::vector<double> joint, pu, pv;
  for (int i = 0; i < n; ++i) {
    const int ki = cols[i].arity;
    for (int j = i + 1; j < n; ++j) {
      const int kj = cols[j].arity;
      joint.assign(static_cast<std::size_t>(ki) * kj, 0.0);
      double total = 0.0;
      for (std::size_t r = 0; r < data.num_rows(); ++r) {
        const int a = data.at(r, i);
        const int b = data.at(r, j);
        if (a == kMissing || b == kMissing) continue;
        joint[static_cast<std::size_t>(a) * kj + b] += data.weight(r);
        total += data.weight(r);
      }
      const double denom = total + alpha * static_cast<double>(ki * kj);
      if (!(denom > 0.0)) continue;
      for (double& p : joint) p = (p + alpha) / denom;
      pu.assign(ki, 0.0);
      pv.assign(kj, 0.0);
      for (int a = 0; a < ki; ++a) {
        for (int b = 0; b < kj; ++b) {
          pu[a] += joint[static_cast<std::size_t>(a) * kj + b];
          pv[b] += joint[static_cast<std::size_t>(a) * kj + b];
        }
      }
      double m = 0.0;
      for (int a = 0; a < ki; ++a) {
        for (int b = 0; b < kj; ++b) {
          const double p = joint[static_cast<std::size_t>(a) * kj + b];
          if (p > 0.0) m += p * std::log(p / (pu[a] * pv[b]));
        }
      }
      mi.set(i, j, std::max(0.0, m));
    }
  }
  return mi;
}

std::vector<int> max_spanning_tree(const MiMatrix& mi) {
  const int n = mi.size();
  std::vector<std::tuple<double, int, int>> edges;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) edges.emplace_back(mi(i, j), i, j);
  }
  std::stable_sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    if (std::get<0>(x) != std::get<0>(y)) return std::get<0>(x) > std::get<0>(y);
    return std::make_pair(std::get<1>(x), std::get<2>(x)) <
           std::make_pair(std::get<1>(y), std::get<2>(y));
  });
  std::vector<int> uf(n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<std::vector<int>> adj(n);
  for (const auto& [w, a, b] : edges) {
    const int ra = find(a), rb = find(b);
    if (ra == rb) continue;
    uf[ra] = rb;
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  std::vector<int> parent(n, -2);
  if (n == 0) return parent;
  parent[0] = -1;
  std::vector<int> queue{0};
  for (std::size_t q = 0; q < queue.size(); ++q) {
    const int u = queue[q];
    std::sort(adj[u].begin(), adj[u].end());
    for (int w : adj[u]) {
      if (parent[w] != -2) continue;
      parent[w] = u;
      queue.push_back(w);
    }
  }
  return parent;
}

std::vector<std::pair<int, int>> tree_edges(const std::vector<int>& parent) {
  std::vector<std::pair<int, int>> out;
  for (int u = 0; u < static_cast<int>(parent.size()); ++u) {
    if (parent[u] >= 0) out.emplace_back(std::min(u, parent[u]), std::max(u, parent[u]));
  }
  std::sort(out.begin(), out.end());
  return out;
}

Circuit compile_tree(const std::vector<Variable>& vars, const std::vector<int>& parent,
                     const std::vector<std::vector<double>>& cpt) {
  const int n = static_cast<int>(vars.size());
  if (n == 0) fail(ErrorCode::kStructure, "tree needs at least one variable");
  if (static_cast<int>(parent.size()) != n || static_cast<int>(cpt.size()) != n) {
    fail(ErrorCode::kStructure, "tree arrays do not match the variable count");
  }
  int root = -1;
  std::vector<std::vector<int>> kids(n);
  for (int u = 0; u < n; ++u) {
    if (parent[u] < 0) {
      if (root >= 0) fail(ErrorCode::kStructure, "tree has more than one root");
      root = u;
    } else {
      if (parent[u] >= n) fail(ErrorCode::kStructure, "tree parent out of range");
      kids[parent[u]].push_back(u);
    }
    const std::size_t rows = parent[u] < 0 ? 1 : vars[parent[u]].arity;
    if (cpt[u].size() != rows * vars[u].arity) {
      fail(ErrorCode::kStructure, "CPT of '" + vars[u].name + "' has the wrong size");
    }
  }
  if (root < 0) fail(ErrorCode::kStructure, "tree has no root");

  CircuitBuilder b(vars);
  if (n == 1) return b.build(b.categorical(root, cpt[root]));

  // Post-order so every node is created after its children.
  std::vector<int> order;
  std::vector<std::pair<int, std::size_t>> stack{{root, 0}};
  std::vector<char> seen(n, 0);
  seen[root] = 1;
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    if (next < kids[u].size()) {
      int w = kids[u][next++];
      if (seen[w]) fail(ErrorCode::kStructure, "tree contains a cycle");
      seen[w] = 1;
      stack.emplace_back(w, 0);
    } else {
      order.push_back(u);
      stack.pop_back();
    }
  }
  if (static_cast<int>(order.size()) != n) fail(ErrorCode::kStructure, "tree is not connected");

  // prod[u][j]: [u=j] times the sums of u's children for parent value j.
  // sums[u][i]: distribution of u's subtree given parent value i.
  std::vector<std::vector<int>> prod(n), sums(n);
  for (int u : order) {
    const int k = vars[u].arity;
    prod[u].resize(k);
    for (int j = 0; j < k; ++j) {
      const int ind = b.indicator(u, j);
      if (kids[u].empty()) {
        prod[u][j] = ind;
      } else {
        std::vector<int> ch{ind};
        for (int w : kids[u]) ch.push_back(sums[w][j]);
        prod[u][j] = b.product(std::move(ch));
      }
    }
    const int rows = parent[u] < 0 ? 1 : vars[parent[u]].arity;
    sums[u].resize(rows);
    for (int i = 0; i < rows; ++i) {
      std::vector<double> w(cpt[u].begin() + static_cast<std::ptrdiff_t>(i) * k,
                            cpt[u].begin() + static_cast<std::ptrdiff_t>(i + 1) * k);
      sums[u][i] = b.sum(prod[u], std::move(w));
    }
  }
  return b.build(sums[root][0]);
}

std::vector<std::vector<double>> tree_cpts(const DataTable& data, const std::vector<int>& parent,
                                           double alpha) {
  const auto& cols = data.schema().columns;
  const int n = static_cast<int>(cols.size());
  std::vector<std::vector<double>> cpt(n);
  for (int u = 0; u < n; ++u) {
    const int k = cols[u].arity;
    const int p = parent[u];
    const int rows = p < 0 ? 1 : cols[p].arity;
    std::vector<double> counts(static_cast<std::size_t>(rows) * k, 0.0);
    for (std::size_t r = 0; r < data.num_rows(); ++r) {
      const int x = data.at(r, u);
      if (x == kMissing) continue;
      int i = 0;
      if (p >= 0) {
        i = data.at(r, p);
        if (i == kMissing) continue;
      }
      counts[static_cast<std::size_t>(i) * k + x] += data.weight(r);
    }
    cpt[u].resize(counts.size());
    for (int i = 0; i < rows; ++i) {
      double total = 0.0;
      for (int j = 0; j < k; ++j) total += counts[static_cast<std::size_t>(i) * k + j];
      const double denom = total + alpha * k;
      for (int j = 0; j < k; ++j) {
        const std::size_t at = static_cast<std::size_t>(i) * k + j;
        cpt[u][at] = denom > 0.0 ? (counts[at] + alpha) / denom : 1.0 / k;
      }
    }
  }
  return cpt;
}

Circuit chow_liu(const DataTable& data, double alpha) {
  if (data.num_columns() == 0) fail(ErrorCode::kSchema, "Chow-Liu needs at least one variable");
  const MiMatrix mi = pairwise_mi(data, alpha);
  const auto parent = max_spanning_tree(mi);
  return compile_tree(to_variables(data.schema(), false), parent, tree_cpts(data, parent, alpha));
}

std::vector<double> value_marginals(const Circuit& c, int var, int value) {
  Assignment e(c.num_variables(), kMissing);
  e[var] = value;
  std::vector<double> out(c.num_nodes());
  forward(c, e, out);
  return out;
}

bool splittable(const Circuit& c, int sum_node, int ordinal, int var) {
  if (c.kind(sum_node) != NodeKind::kSum) return false;
  const int child = c.children(sum_node)[ordinal];
  if (!c.scope_contains(child, var)) return false;
  int feasible = 0;
  for (int j = 0; j < c.variables()[var].arity; ++j) {
    if (value_marginals(c, var, j)[child] > kNegInf) ++feasible;
  }
  return feasible >= 2;
}

namespace {

// Copies the part of the circuit that depends on `var`, conditioned on
// var = value. Nodes outside var's scope are shared with the original.
class Conditioner {
 public:
  Conditioner(const Circuit& c, CircuitBuilder& b, const std::vector<int>& id, int var, int value)
      : c_(c), b_(b), id_(id), var_(var), value_(value),
        z_(value_marginals(c, var, value)), memo_(c.num_nodes(), -1) {}

  double log_mass(int n) const { return z_[n]; }

  int operator()(int n) {
    if (!c_.scope_contains(n, var_)) return id_[n];
    if (memo_[n] >= 0) return memo_[n];
    int out = -1;
    switch (c_.kind(n)) {
      case NodeKind::kIndicator:
        out = id_[n];  // only reached for the matching value
        break;
      case NodeKind::kCategorical:
        out = b_.indicator(var_, value_);
        break;
      case NodeKind::kProduct: {
        std::vector<int> ch;
        for (int k : c_.children(n)) ch.push_back((*this)(k));
        out = b_.product(std::move(ch));
        break;
      }
      case NodeKind::kSum: {
        auto ch = c_.children(n);
        auto lw = c_.log_weights(n);
        std::vector<int> keep;
        std::vector<double> w;
        for (std::size_t k = 0; k < ch.size(); ++k) {
          const double lz = lw[k] + z_[ch[k]];
          if (lz == kNegInf) continue;
          keep.push_back(ch[k]);
          w.push_back(std::exp(lz - z_[n]));
        }
        if (keep.size() == 1) {
          out = (*this)(keep[0]);
        } else {
          std::vector<int> mapped;
          for (int k : keep) mapped.push_back((*this)(k));
          out = b_.sum(std::move(mapped), std::move(w));
        }
        break;
      }
    }
    memo_[n] = out;
    return out;
  }

 private:
  const Circuit& c_;
  CircuitBuilder& b_;
  const std::vector<int>& id_;
  int var_;
  int value_;
  std::vector<double> z_;
  std::vector<int> memo_;
};

}  // namespace

Circuit split(const Circuit& c, int sum_node, int ordinal, int var) {
  if (sum_node < 0 || sum_node >= c.num_nodes() || c.kind(sum_node) != NodeKind::kSum) {
    fail(ErrorCode::kStructure, "split needs a sum node");
  }
  auto ch = c.children(sum_node);
  if (ordinal < 0 || ordinal >= static_cast<int>(ch.size())) {
    fail(ErrorCode::kStructure, "split edge ordinal out of range");
  }
  if (var < 0 || var >= c.num_variables()) fail(ErrorCode::kStructure, "split variable out of range");
  const int child = ch[ordinal];
  if (!c.scope_contains(child, var)) {
    fail(ErrorCode::kStructure, "variable '" + c.variables()[var].name +
                                    "' is not in the scope of the split edge's child");
  }
  CircuitBuilder b(c.variables());
  const std::vector<int> id = b.import(c);

  std::vector<int> new_ch;
  std::vector<double> new_lw;
  auto lw = c.log_weights(sum_node);
  for (std::size_t k = 0; k < ch.size(); ++k) {
    if (static_cast<int>(k) != ordinal) {
      new_ch.push_back(id[ch[k]]);
      new_lw.push_back(lw[k]);
      continue;
    }
    for (int j = 0; j < c.variables()[var].arity; ++j) {
      Conditioner cond(c, b, id, var, j);
      const double lz = cond.log_mass(child);
      if (lz == kNegInf) continue;
      new_ch.push_back(cond(child));
      new_lw.push_back(lw[k] + lz);
    }
  }
  b.replace_children(id[sum_node], std::move(new_ch), std::move(new_lw));
  return b.build(id[c.root()]);
}

void StructureConfig::validate() const {
  if (max_splits < 0) fail(ErrorCode::kUsage, "max_splits must be nonnegative");
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    fail(ErrorCode::kUsage, "validation_fraction must be in [0, 1)");
  }
  if (patience < 1) fail(ErrorCode::kUsage, "patience must be at least 1");
  if (!(alpha >= 0.0)) fail(ErrorCode::kUsage, "alpha must be nonnegative");
}

namespace {

double mean_loglik(const Circuit& c, const DataTable& t) {
  const double w = t.total_weight();
  if (w == 0.0) return 0.0;
  try {
    return train_loglik(c, t) / w;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kRowImpossible) return kNegInf;
    throw;
  }
}

void assert_structure(const Circuit& c) {
  if (!c.smooth() || !c.decomposable() || determinism(c) != Determinism::kYes) {
    fail(ErrorCode::kInternal, "structure search produced a circuit failing a structural check");
  }
}

}  // namespace

StructureResult strudel_learn(const DataTable& data, const StructureConfig& config) {
  config.validate();
  DataTable train = data;
  DataTable valid;
  bool has_valid = false;
  if (config.validation_fraction > 0.0 && data.num_rows() >= 2) {
    const auto n_valid = static_cast<std::size_t>(
        std::llround(config.validation_fraction * static_cast<double>(data.num_rows())));
    if (n_valid >= 1 && n_valid < data.num_rows()) {
      auto parts = train_test_split(data, config.validation_fraction, config.seed);
      train = std::move(parts.first);
      valid = std::move(parts.second);
      has_valid = true;
    }
  }
  train = train.compress();
  if (has_valid) valid = valid.compress();
  const double alpha = config.alpha;
  const MiMatrix mi = pairwise_mi(train, alpha);

  StructureResult result;
  Circuit cur = chow_liu(train, alpha);
  assert_structure(cur);
  result.train_ll.push_back(mean_loglik(cur, train));
  if (has_valid) result.validation_ll.push_back(mean_loglik(cur, valid));
  Circuit best = cur;
  double best_valid = has_valid ? result.validation_ll.back() : 0.0;
  int since_best = 0;
  const FlowOptions opts{false};

  for (int step = 1; step <= config.max_splits; ++step) {
    FlowTable flows = aggregate_flows(cur, train, opts);

    std::vector<std::size_t> edges;
    std::vector<int> edge_node(cur.num_edges(), -1);
    for (int n = 0; n < cur.num_nodes(); ++n) {
      if (cur.kind(n) != NodeKind::kSum) continue;
      for (std::size_t k = 0; k < cur.children(n).size(); ++k) {
        const std::size_t e = cur.edge_begin(n) + k;
        edge_node[e] = n;
        if (flows.edge[e] > 0.0) edges.push_back(e);
      }
    }
    std::stable_sort(edges.begin(), edges.end(), [&](std::size_t a, std::size_t b) {
      if (flows.edge[a] != flows.edge[b]) return flows.edge[a] > flows.edge[b];
      return a < b;
    });

    std::map<std::pair<int, int>, std::vector<double>> marg;
    auto feasible = [&](int child, int var) {
      int count = 0;
      for (int j = 0; j < cur.variables()[var].arity; ++j) {
        auto it = marg.find({var, j});
        if (it == marg.end()) it = marg.emplace(std::make_pair(var, j), value_marginals(cur, var, j)).first;
        if (it->second[child] > kNegInf) ++count;
      }
      return count >= 2;
    };

    int pick_node = -1, pick_ord = -1, pick_var = -1;
    for (std::size_t e : edges) {
      const int n = edge_node[e];
      const int ord = static_cast<int>(e - cur.edge_begin(n));
      const int child = cur.children(n)[ord];
      auto scope = cur.scope(child);
      std::vector<std::pair<double, int>> ranked;
      for (int v : scope) {
        double s = 0.0;
        for (int u : scope) {
          if (u != v) s += mi(v, u);
        }
        ranked.emplace_back(s, v);
      }
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
      });
      for (const auto& [score, v] : ranked) {
        if (feasible(child, v)) {
          pick_var = v;
          break;
        }
      }
      if (pick_var >= 0) {
        pick_node = n;
        pick_ord = ord;
        break;
      }
    }
    if (pick_var < 0) break;

    Circuit next = split(cur, pick_node, pick_ord, pick_var);
    // Flows then M-step: the closed form on complete data, one EM step
    // otherwise.
    apply_flows(next, aggregate_flows(next, train, opts), alpha);
    assert_structure(next);
    cur = std::move(next);
    result.splits_applied = step;
    result.train_ll.push_back(mean_loglik(cur, train));
    if (has_valid) {
      const double v = mean_loglik(cur, valid);
      result.validation_ll.push_back(v);
      if (v > best_valid) {
        best_valid = v;
        best = cur;
        result.best_step = step;
        since_best = 0;
      } else if (++since_best >= config.patience) {
        break;
      }
    }
  }
  if (has_valid) {
    result.circuit = std::move(best);
  } else {
    result.circuit = std::move(cur);
    result.best_step = result.splits_applied;
  }
  return result;
}

}  // namespace fairpc
