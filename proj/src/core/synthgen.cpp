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

#include "fairpc/synthgen.hpp"

#include <filesystem>
#include <functional>
#include <queue>

#include "fairpc/error.hpp"
#include "fairpc/learn_structure.hpp"
#include "fairpc/random.hpp"

namespace fairpc {

void SynthConfig::validate() const {
  if (n_features < 1) fail(ErrorCode::kUsage, "need at least one feature");
  if (!allow_any_features && (n_features < 10 || n_features > 30)) {
    fail(ErrorCode::kUsage, "feature count must be within 10..30 (got " +
                                std::to_string(n_features) + ")");
  }
  head.validate();
}

std::vector<int> random_tree(int n, std::uint64_t seed) {
  if (n < 1) fail(ErrorCode::kUsage, "tree needs at least one node");
  std::vector<std::vector<int>> adj(n);
  if (n == 2) {
    adj[0].push_back(1);
    adj[1].push_back(0);
  } else if (n > 2) {
    Rng rng = make_rng(seed, 0x7ee);
    std::vector<int> code(n - 2);
    for (int& c : code) c = static_cast<int>(uniform_index(rng, n));
    std::vector<int> degree(n, 1);
    for (int c : code) ++degree[c];
    std::priority_queue<int, std::vector<int>, std::greater<int>> leaves;
    for (int v = 0; v < n; ++v) {
      if (degree[v] == 1) leaves.push(v);
    }
    auto link = [&](int a, int b) {
      adj[a].push_back(b);
      adj[b].push_back(a);
    };
    for (int c : code) {
      const int leaf = leaves.top();
      leaves.pop();
      link(leaf, c);
      if (--degree[c] == 1) leaves.push(c);
    }
    const int a = leaves.top();
    leaves.pop();
    link(a, leaves.top());
  }
  std::vector<int> parent(n, -2);
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

Circuit random_tree_subcircuit(const std::vector<Variable>& vars, std::uint64_t seed,
                               std::vector<int>* parent_out) {
  const int n = static_cast<int>(vars.size());
  const auto parent = random_tree(n, seed);
  Rng rng = make_rng(seed, 0xc97);
  std::vector<std::vector<double>> cpt(n);
  for (int u = 0; u < n; ++u) {
    const int k = vars[u].arity;
    const int rows = parent[u] < 0 ? 1 : vars[parent[u]].arity;
    for (int i = 0; i < rows; ++i) {
      for (double p : dirichlet1(rng, k)) cpt[u].push_back((p + 1.0) / (1.0 + k));
    }
  }
  if (parent_out) *parent_out = parent;
  return compile_tree(vars, parent, cpt);
}

SynthBundle generate(const SynthConfig& config) {
  config.validate();
  SynthBundle out;
  FairSchema fs;
  fs.sensitive = "S";
  fs.label = "D";
  fs.latent = "Df";
  for (int i = 0; i < config.n_features; ++i) {
    fs.features.push_back({i, 2, "X" + std::to_string(i)});
  }
  out.true_model = build_fair_pc(
      fs,
      [&](int s, int d) {
        const int k = context_ordinal(s, d);
        return random_tree_subcircuit(fs.features, mix_seed(config.seed, 100 + k), &out.trees[k]);
      },
      config.head);

  const std::vector<std::string> binary{"0", "1"};
  Column s{"S", 2, Role::kSensitive, binary, {}};
  Column d{"D", 2, Role::kLabel, binary, {}};
  out.schema.columns = {s, d};
  for (const auto& f : fs.features) out.schema.columns.push_back({f.name, 2, Role::kFeature, binary, {}});
  out.schema.latent = {{"Df", 2, Role::kLatent, binary, {}}};

  Schema test_schema = out.schema;
  test_schema.columns.push_back(out.schema.latent.front());

  // Circuit variables are [S, D, X..., Df]; train drops the last column.
  const std::size_t n_test = config.n_test ? config.n_test : config.n_samples;
  const auto train_rows = sample(out.true_model.circuit, config.n_samples, mix_seed(config.seed, 1));
  const auto test_rows = sample(out.true_model.circuit, n_test, mix_seed(config.seed, 2));
  out.train = DataTable(out.schema);
  for (const auto& r : train_rows) out.train.add_row(std::span<const int>(r.data(), r.size() - 1));
  out.test = DataTable(test_schema);
  for (const auto& r : test_rows) out.test.add_row(r);
  return out;
}

void write_bundle(const SynthBundle& bundle, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory '" + dir + "': " + ec.message());
  const std::filesystem::path p(dir);
  save_csv((p / "train.csv").string(), bundle.train);
  save_csv((p / "test.csv").string(), bundle.test);
  bundle.schema.save((p / "schema.json").string());
  save_model((p / "true_circuit.pc").string(), bundle.true_model);
}

}  // namespace fairpc
