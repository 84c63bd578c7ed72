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


#include <cmath>
#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "fairpc/error.hpp"
#include "fairpc/synthgen.hpp"
#include "support/fixtures.hpp"

using namespace fairpc;

namespace {

std::string text_of(const Circuit& c) {
  std::ostringstream o;
  write_circuit(o, c);
  return o.str();
}

bool sound(const Circuit& c) {
  return check_smooth(c) && check_decomposable(c) && check_deterministic(c);
}

}  // namespace

TEST_CASE("random trees") {
  for (int n : {1, 2, 3, 8, 20}) {
    const auto parent = random_tree(n, 5);
    REQUIRE(parent.size() == static_cast<std::size_t>(n));
    CHECK(parent[0] == -1);
    // Every node reaches the root.
    for (int v = 1; v < n; ++v) {
      int u = v, steps = 0;
      while (u != 0 && steps <= n) {
        REQUIRE(parent[u] >= 0);
        u = parent[u];
        ++steps;
      }
      CHECK(u == 0);
    }
    CHECK(random_tree(n, 5) == parent);
  }
  // Different seeds give different shapes on 8 nodes.
  CHECK(random_tree(8, 1) != random_tree(8, 2));
  CHECK_THROWS_AS(random_tree(0, 1), Error);
}

TEST_CASE("random tree sub-circuits") {
  const Circuit one = random_tree_subcircuit(fixtures::binary_vars(1, "X"), 3);
  CHECK(one.num_nodes() == 1);
  CHECK(one.kind(0) == NodeKind::kCategorical);
  const auto pmf = one.pmf(0);
  CHECK(std::abs(pmf[0] + pmf[1] - 1.0) < 1e-12);
  // Smoothed Dirichlet draws stay in [1/3, 2/3] for binary variables.
  CHECK(pmf[0] >= 1.0 / 3.0);
  CHECK(pmf[0] <= 2.0 / 3.0);

  std::vector<int> parent;
  const Circuit c = random_tree_subcircuit(fixtures::binary_vars(10, "X"), 4, &parent);
  CHECK(sound(c));
  CHECK(parent == random_tree(10, 4));
  CHECK(text_of(c) == text_of(random_tree_subcircuit(fixtures::binary_vars(10, "X"), 4)));
  CHECK(text_of(c) != text_of(random_tree_subcircuit(fixtures::binary_vars(10, "X"), 5)));
}

TEST_CASE("generate reproduces the head statistics") {
  SynthConfig cfg;
  cfg.seed = 7;
  const SynthBundle b = generate(cfg);
  CHECK(b.train.num_rows() == 100000);
  CHECK(b.test.num_rows() == 100000);
  CHECK(b.train.num_columns() == 17);
  CHECK(b.test.num_columns() == 18);
  CHECK(b.test.schema().columns.back().name == "Df");
  CHECK(b.test.schema().columns.back().role == Role::kLatent);
  CHECK(b.schema.latent.size() == 1);
  CHECK(sound(b.true_model.circuit));
  CHECK(tying_residual(b.true_model, std::make_pair(0.3, 0.5)) < 1e-12);

  const int s_col = 0, d_col = 1, df_col = 17;
  double n = 0, s1 = 0, df1 = 0, c11 = 0, d11 = 0;
  double n_s0 = 0, d_s0 = 0, n_s1 = 0, d_s1 = 0;
  for (std::size_t r = 0; r < b.test.num_rows(); ++r) {
    const int s = b.test.at(r, s_col), d = b.test.at(r, d_col), df = b.test.at(r, df_col);
    n += 1;
    s1 += s;
    df1 += df;
    if (s == 1 && df == 1) {
      c11 += 1;
      d11 += d;
    }
    if (s == 0) {
      n_s0 += 1;
      d_s0 += d;
    } else {
      n_s1 += 1;
      d_s1 += d;
    }
  }
  CHECK(std::abs(d11 / c11 - 0.8) <= 0.01);
  CHECK(std::abs(df1 / n - 0.5) <= 0.01);
  CHECK(std::abs(s1 / n - 0.3) <= 0.01);
  const double disc = d_s0 / n_s0 - d_s1 / n_s1;
  CHECK(disc > 0.0);
  CHECK(std::abs(disc - 0.20) <= 0.02);

  // Train rows carry no latent column and share the test distribution.
  double train_s1 = 0;
  for (std::size_t r = 0; r < b.train.num_rows(); ++r) train_s1 += b.train.at(r, s_col);
  CHECK(std::abs(train_s1 / 1e5 - 0.3) <= 0.01);
}

TEST_CASE("train and test use separate streams") {
  SynthConfig a;
  a.seed = 3;
  a.n_features = 10;
  a.n_samples = 500;
  a.n_test = 300;
  SynthConfig b = a;
  b.n_samples = 800;
  const SynthBundle x = generate(a), y = generate(b);
  CHECK(x.test == y.test);
  std::vector<std::size_t> first(500);
  for (std::size_t i = 0; i < 500; ++i) first[i] = i;
  CHECK(y.train.subset(first) == x.train);
  CHECK(text_of(x.true_model.circuit) == text_of(y.true_model.circuit));
  CHECK(x.trees == y.trees);

  SynthConfig c = a;
  c.seed = 4;
  CHECK_FALSE(generate(c).test == x.test);
  // n_test = 0 mirrors n_samples.
  a.n_test = 0;
  CHECK(generate(a).test.num_rows() == 500);
}

TEST_CASE("config validation") {
  SynthConfig cfg;
  cfg.n_features = 9;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.n_features = 31;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.allow_any_features = true;
  CHECK_NOTHROW(cfg.validate());
  cfg.head.d_mech[2] = -0.1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("bundle files") {
  SynthConfig cfg;
  cfg.n_features = 10;
  cfg.n_samples = 50;
  cfg.n_test = 20;
  cfg.seed = 9;
  const SynthBundle b = generate(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "fairpc_test_synth";
  std::filesystem::remove_all(dir);
  write_bundle(b, dir.string());
  for (const char* f : {"train.csv", "test.csv", "schema.json", "true_circuit.pc"}) {
    CHECK(std::filesystem::exists(dir / f));
  }
  const Schema s = Schema::load((dir / "schema.json").string());
  CHECK(load_csv((dir / "train.csv").string(), s) == b.train);
  const DataTable test = load_csv((dir / "test.csv").string(), s);
  CHECK(test == b.test);
  CHECK(test.schema().columns.back().role == Role::kLatent);
  const FairModel m = load_model((dir / "true_circuit.pc").string());
  CHECK(text_of(m.circuit) == text_of(b.true_model.circuit));
  std::filesystem::remove_all(dir);
}
