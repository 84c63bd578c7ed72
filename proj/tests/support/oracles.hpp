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


// Brute-force reference implementations used by the unit and acceptance
// tests. Everything here evaluates circuits independently of the library's
// inference code: values are computed in linear space by direct recursion
// and flows are read off node contexts, one completion at a time.

#ifndef FAIRPC_TESTS_ORACLES_HPP_
#define FAIRPC_TESTS_ORACLES_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/flows.hpp"

namespace oracle {

using fairpc::Assignment;
using fairpc::Circuit;
using fairpc::kMissing;
using fairpc::NodeKind;

/// Linear-space value of every node on a complete (or partial, with
/// unobserved leaves giving 1) assignment.
inline std::vector<double> node_values(const Circuit& c, const Assignment& z) {
  std::vector<double> v(c.num_nodes(), 0.0);
  for (int n = 0; n < c.num_nodes(); ++n) {
    switch (c.kind(n)) {
      case NodeKind::kIndicator: {
        const int x = z[c.leaf_variable(n)];
        v[n] = (x == kMissing || x == c.indicator_value(n)) ? 1.0 : 0.0;
        break;
      }
      case NodeKind::kCategorical: {
        const int x = z[c.leaf_variable(n)];
        v[n] = x == kMissing ? 1.0 : c.pmf(n)[x];
        break;
      }
      case NodeKind::kProduct: {
        double p = 1.0;
        for (int ch : c.children(n)) p *= v[ch];
        v[n] = p;
        break;
      }
      case NodeKind::kSum: {
        double s = 0.0;
        const auto ch = c.children(n);
        const auto lw = c.log_weights(n);
        for (std::size_t i = 0; i < ch.size(); ++i) s += std::exp(lw[i]) * v[ch[i]];
        v[n] = s;
        break;
      }
    }
  }
  return v;
}

inline double value(const Circuit& c, const Assignment& z) { return node_values(c, z)[c.root()]; }

/// Calls fn(z) for every completion z of e over all circuit variables.
template <typename F>
void for_each_completion(const Circuit& c, const Assignment& e, F&& fn) {
  const int nv = c.num_variables();
  Assignment z(nv);
  std::vector<int> free;
  for (int i = 0; i < nv; ++i) {
    z[i] = e[i];
    if (e[i] == kMissing) {
      free.push_back(i);
      z[i] = 0;
    }
  }
  while (true) {
    fn(static_cast<const Assignment&>(z));
    std::size_t k = 0;
    for (; k < free.size(); ++k) {
      const int var = free[k];
      if (++z[var] < c.variables()[var].arity) break;
      z[var] = 0;
    }
    if (k == free.size()) return;
  }
}

/// All complete assignments over the variables.
inline std::vector<Assignment> all_assignments(const Circuit& c) {
  std::vector<Assignment> out;
  for_each_completion(c, Assignment(c.num_variables(), kMissing),
                      [&](const Assignment& z) { out.push_back(z); });
  return out;
}

/// Sum of complete-assignment probabilities over the completions of e.
inline double marginal(const Circuit& c, const Assignment& e) {
  double s = 0.0;
  for_each_completion(c, e, [&](const Assignment& z) { s += value(c, z); });
  return s;
}

/// Merges q into e (q's observed entries win).
inline Assignment join(const Assignment& q, const Assignment& e) {
  Assignment out = e;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] != kMissing) out[i] = q[i];
  }
  return out;
}

/// Expected flows by enumerating completions z of e with weights Pr(z | e).
/// For each completion, node n is active when some root-to-n path has
/// nonzero value on z (z lies in the context of n); edge (n, c) flows when n
/// is active and c is nonzero; leaf slot v flows when the leaf is active and
/// z assigns v.
class CompletionOracle {
 public:
  CompletionOracle(const Circuit& c, const Assignment& e) : c_(c) {
    for_each_completion(c, e, [&](const Assignment& z) {
      const double p = value(c, z);
      if (p > 0.0) {
        completions_.push_back(z);
        weights_.push_back(p);
        total_ += p;
      }
    });
    for (double& w : weights_) w /= total_;
  }

  double evidence() const { return total_; }
  const std::vector<Assignment>& completions() const { return completions_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Single-completion 0/1 flows.
  fairpc::FlowTable flows_of(const Assignment& z) const {
    fairpc::FlowTable t = fairpc::FlowTable::zeros(c_);
    const auto v = node_values(c_, z);
    std::vector<char> active(c_.num_nodes(), 0);
    active[c_.root()] = v[c_.root()] > 0.0;
    if (active[c_.root()]) t.node[c_.root()] = 1.0;
    for (int n = c_.num_nodes() - 1; n >= 0; --n) {
      if (!active[n]) continue;
      if (c_.kind(n) == NodeKind::kCategorical) {
        t.leaf[c_.leaf_begin(n) + z[c_.leaf_variable(n)]] = 1.0;
        continue;
      }
      if (c_.is_leaf(n)) continue;
      const auto ch = c_.children(n);
      for (std::size_t i = 0; i < ch.size(); ++i) {
        if (v[ch[i]] <= 0.0) continue;
        t.edge[c_.edge_begin(n) + i] = 1.0;
        active[ch[i]] = 1;
        t.node[ch[i]] = 1.0;
      }
    }
    t.rows = 1.0;
    return t;
  }

  fairpc::FlowTable expected() const {
    fairpc::FlowTable t = fairpc::FlowTable::zeros(c_);
    for (std::size_t k = 0; k < completions_.size(); ++k) {
      const auto f = flows_of(completions_[k]);
      for (std::size_t i = 0; i < t.edge.size(); ++i) t.edge[i] += weights_[k] * f.edge[i];
      for (std::size_t i = 0; i < t.leaf.size(); ++i) t.leaf[i] += weights_[k] * f.leaf[i];
      for (std::size_t i = 0; i < t.node.size(); ++i) t.node[i] += weights_[k] * f.node[i];
    }
    t.rows = 1.0;
    return t;
  }

 private:
  const Circuit& c_;
  std::vector<Assignment> completions_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

struct RandomCircuitOptions {
  int min_vars = 1;
  int max_vars = 12;
  int max_arity = 2;
  /// Probability that a deterministic sum drops some values from its support.
  double drop_value = 0.15;
  /// Probability of reusing an earlier node with the same scope.
  double reuse = 0.3;
};

/// Random smooth, decomposable, deterministic circuit. Sum nodes split on a
/// variable with one indicator-guarded product per value; product nodes
/// partition the scope; sub-circuits with equal scope are shared at random,
/// so the result is a DAG.
class RandomCircuitGenerator {
 public:
  explicit RandomCircuitGenerator(std::uint64_t seed, RandomCircuitOptions opts = {})
      : rng_(seed), opts_(opts) {}

  Circuit operator()() {
    const int n = uniform(opts_.min_vars, opts_.max_vars);
    std::vector<fairpc::Variable> vars;
    for (int i = 0; i < n; ++i) vars.push_back({i, uniform(2, opts_.max_arity), "V" + std::to_string(i)});
    fairpc::CircuitBuilder b(vars);
    cache_.clear();
    std::vector<int> scope(n);
    for (int i = 0; i < n; ++i) scope[i] = i;
    const int root = build(b, vars, scope, 0);
    return b.build(root);
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  double unit() { return std::uniform_real_distribution<double>(0.0, 1.0)(rng_); }

  std::vector<double> simplex(int k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (double& x : p) {
      x = 0.05 + unit();
      s += x;
    }
    for (double& x : p) x /= s;
    return p;
  }

  int build(fairpc::CircuitBuilder& b, const std::vector<fairpc::Variable>& vars,
            const std::vector<int>& scope, int depth) {
    auto it = cache_.find(scope);
    if (it != cache_.end() && !it->second.empty() && unit() < opts_.reuse) {
      return it->second[uniform(0, static_cast<int>(it->second.size()) - 1)];
    }
    int node;
    if (scope.size() == 1) {
      const int v = scope[0];
      const int k = vars[v].arity;
      if (unit() < 0.5) {
        node = b.categorical(v, simplex(k));
      } else {
        std::vector<int> ch;
        for (int j = 0; j < k; ++j) ch.push_back(b.indicator(v, j));
        node = b.sum(ch, simplex(k));
      }
    } else if (depth > 0 && unit() < 0.4) {
      // Product over a random partition into 2 or 3 blocks.
      const int parts = std::min<int>(uniform(2, 3), static_cast<int>(scope.size()));
      std::vector<std::vector<int>> blocks(parts);
      std::vector<int> order = scope;
      std::shuffle(order.begin(), order.end(), rng_);
      for (int i = 0; i < parts; ++i) blocks[i].push_back(order[i]);
      for (std::size_t i = parts; i < order.size(); ++i) blocks[uniform(0, parts - 1)].push_back(order[i]);
      std::vector<int> ch;
      for (auto& blk : blocks) {
        std::sort(blk.begin(), blk.end());
        ch.push_back(build(b, vars, blk, depth + 1));
      }
      node = b.product(ch);
    } else {
      const int v = scope[uniform(0, static_cast<int>(scope.size()) - 1)];
      std::vector<int> rest;
      for (int u : scope) {
        if (u != v) rest.push_back(u);
      }
      std::vector<int> values;
      for (int j = 0; j < vars[v].arity; ++j) values.push_back(j);
      if (values.size() > 1 && unit() < opts_.drop_value) {
        values.erase(values.begin() + uniform(0, static_cast<int>(values.size()) - 1));
      }
      std::vector<int> ch;
      for (int j : values) ch.push_back(b.product({b.indicator(v, j), build(b, vars, rest, depth + 1)}));
      node = b.sum(ch, simplex(static_cast<int>(ch.size())));
    }
    cache_[scope].push_back(node);
    return node;
  }

  std::mt19937_64 rng_;
  RandomCircuitOptions opts_;
  std::map<std::vector<int>, std::vector<int>> cache_;
};

/// Random partial assignment: each variable observed with probability p_obs.
inline Assignment random_evidence(const Circuit& c, std::mt19937_64& rng, double p_obs) {
  Assignment e(c.num_variables(), kMissing);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < c.num_variables(); ++i) {
    if (u(rng) < p_obs) {
      e[i] = std::uniform_int_distribution<int>(0, c.variables()[i].arity - 1)(rng);
    }
  }
  return e;
}

}  // namespace oracle

#endif  // FAIRPC_TESTS_ORACLES_HPP_
