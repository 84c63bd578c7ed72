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

#include "doctest.h"
#include "fairpc/dataset.hpp"
#include "fairpc/error.hpp"
#include "fairpc/learn_params.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace fairpc;

namespace {

DataTable table_for(const Circuit& c) {
  Schema s;
  for (const auto& v : c.variables()) {
    Column col{v.name, v.arity, Role::kFeature, {}, {}};
    for (int k = 0; k < v.arity; ++k) col.vocabulary.push_back(std::to_string(k));
    s.columns.push_back(col);
  }
  return DataTable(s);
}

std::vector<double> root_weights(const Circuit& c) {
  std::vector<double> w;
  for (double lw : c.log_weights(c.root())) w.push_back(std::exp(lw));
  return w;
}

// A 3:1 split over the two root branches of C1.
DataTable c1_counts(const Circuit& c) {
  DataTable t = table_for(c);
  t.add_row(Assignment{1, 1});
  t.add_row(Assignment{1, 0});
  t.add_row(Assignment{1, 1});
  t.add_row(Assignment{0, 0});
  return t;
}

double max_param_diff(const Circuit& a, const Circuit& b) {
  double m = 0.0;
  for (int n = 0; n < a.num_nodes(); ++n) {
    const auto x = a.log_weights(n), y = b.log_weights(n);
    for (std::size_t k = 0; k < x.size(); ++k) m = std::max(m, std::abs(std::exp(x[k]) - std::exp(y[k])));
    const auto p = a.pmf(n), q = b.pmf(n);
    for (std::size_t k = 0; k < p.size(); ++k) m = std::max(m, std::abs(p[k] - q[k]));
  }
  return m;
}

// Head over S and a binary latent H with tied root, plus one feature X per
// context: variables [S, X, H].
Circuit tied_head() {
  CircuitBuilder b({{0, 2, "S"}, {1, 2, "X"}, {2, 2, "H"}});
  std::vector<int> ctx;
  const double px[4] = {0.2, 0.7, 0.4, 0.9};
  int k = 0;
  for (int s = 1; s >= 0; --s) {
    for (int h = 1; h >= 0; --h, ++k) {
      ctx.push_back(b.product({b.indicator(0, s), b.indicator(2, h), b.categorical(1, {1 - px[k], px[k]})}));
    }
  }
  const double ps = 0.4, ph = 0.3;
  const int root = b.sum(ctx, {ps * ph, ps * (1 - ph), (1 - ps) * ph, (1 - ps) * (1 - ph)});
  b.tie({root, 2, 2, {0, 1, 2, 3}});
  return b.build(root);
}

}  // namespace

TEST_CASE("mle_complete on counted flows") {
  Circuit c = fixtures::c1();
  const DataTable t = c1_counts(c);
  mle_complete(c, t, 0.0);
  auto w = root_weights(c);
  CHECK(std::abs(w[0] - 0.75) < 1e-12);
  CHECK(std::abs(w[1] - 0.25) < 1e-12);
  // Leaf under p1 saw B=1 twice, B=0 once.
  const int leaf = c.children(c.children(c.root())[0])[1];
  CHECK(std::abs(c.pmf(leaf)[1] - 2.0 / 3.0) < 1e-12);

  Circuit d = fixtures::c1();
  mle_complete(d, t, 1.0);
  w = root_weights(d);
  CHECK(std::abs(w[0] - 4.0 / 6.0) < 1e-12);
  CHECK(std::abs(w[1] - 2.0 / 6.0) < 1e-12);
}

TEST_CASE("mle_complete is consistent") {
  const Circuit truth = fixtures::c1();
  Circuit c = fixtures::c1(0, 0.5);
  DataTable t = table_for(c);
  for (const auto& z : sample(truth, 100000, 3)) t.add_row(z);
  mle_complete(c, t, 0.0);
  const auto w = root_weights(c);
  CHECK(std::abs(w[0] - 0.6) < 0.01);
  CHECK(std::abs(w[1] - 0.4) < 0.01);
}

TEST_CASE("mle_complete rejects missing cells") {
  Circuit c = fixtures::c1();
  DataTable t = table_for(c);
  t.add_row(Assignment{1, kMissing});
  try {
    mle_complete(c, t, 1.0);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kIncompleteAssignment);
  }
}

TEST_CASE("em_step on a partial row") {
  Circuit c = fixtures::c1();
  DataTable t = table_for(c);
  t.add_row(Assignment{kMissing, 1});
  const EmStepResult r = em_step(c, t, 0.0);
  CHECK(std::abs(r.loglik - std::log(0.5)) < 1e-12);
  const auto w = root_weights(c);
  CHECK(std::abs(w[0] - 0.84) < 1e-12);
  CHECK(std::abs(w[1] - 0.16) < 1e-12);
}

TEST_CASE("em_step on complete data equals mle_complete") {
  oracle::RandomCircuitGenerator gen(5, {3, 8, 3, 0.0, 0.3});
  for (int t = 0; t < 10; ++t) {
    const Circuit truth = gen();
    DataTable data = table_for(truth);
    for (const auto& z : sample(truth, 500, t)) data.add_row(z);
    for (double alpha : {0.0, 1.0}) {
      Circuit a = truth, b = truth;
      em_step(a, data, alpha);
      mle_complete(b, data, alpha);
      CHECK(max_param_diff(a, b) < 1e-12);
    }
  }
}

TEST_CASE("EM fixed point leaves parameters unchanged") {
  Circuit c = fixtures::c1();
  const DataTable t = c1_counts(c);
  mle_complete(c, t, 0.0);
  const Circuit before = c;
  em_step(c, t, 0.0);
  CHECK(max_param_diff(before, c) < 1e-12);
}

TEST_CASE("alpha zero reproduces empirical frequencies") {
  const Circuit truth = fixtures::c1();
  Circuit c = truth;
  DataTable t = table_for(c);
  // Every A=1 row pattern: counts (B=0: 2, B=1: 5); A=0: (B=0: 3, B=1: 1).
  for (int i = 0; i < 2; ++i) t.add_row(Assignment{1, 0});
  for (int i = 0; i < 5; ++i) t.add_row(Assignment{1, 1});
  for (int i = 0; i < 3; ++i) t.add_row(Assignment{0, 0});
  t.add_row(Assignment{0, 1});
  mle_complete(c, t, 0.0);
  CHECK(std::abs(evaluate_complete(c, Assignment{1, 1}) - 5.0 / 11.0) < 1e-12);
  CHECK(std::abs(evaluate_complete(c, Assignment{0, 1}) - 1.0 / 11.0) < 1e-12);
}

TEST_CASE("degenerate nodes keep their parameters") {
  Circuit c = fixtures::c1();
  DataTable t = table_for(c);
  t.add_row(Assignment{1, 1});
  const MStepReport r = mle_complete(c, t, 0.0);
  // The B leaf under [A=0] receives no flow.
  const int leaf = c.children(c.children(c.root())[1])[1];
  CHECK(std::find(r.degenerate_nodes.begin(), r.degenerate_nodes.end(), leaf) != r.degenerate_nodes.end());
  CHECK(std::abs(c.pmf(leaf)[1] - 0.2) < 1e-15);
}

TEST_CASE("tied groups keep the product form") {
  Circuit c = tied_head();
  DataTable t = table_for(c);
  std::mt19937_64 rng(8);
  for (const auto& z : sample(c, 3000, 4)) {
    Assignment e = z;
    e[2] = kMissing;
    if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.2) e[1] = kMissing;
    t.add_row(e);
  }
  for (double alpha : {0.0, 1.0}) {
    Circuit d = c;
    em_step(d, t, alpha);
    const auto w = root_weights(d);
    const double ps = w[0] + w[1], ph = w[0] + w[2];
    CHECK(std::abs(w[0] - ps * ph) < 1e-12);
    CHECK(std::abs(w[1] - ps * (1 - ph)) < 1e-12);
    CHECK(std::abs(w[2] - (1 - ps) * ph) < 1e-12);
    CHECK(std::abs(w[3] - (1 - ps) * (1 - ph)) < 1e-12);
    if (alpha == 0.0) {
      double s1 = 0;
      for (std::size_t r = 0; r < t.num_rows(); ++r) s1 += t.at(r, 0) == 1;
      CHECK(std::abs(ps - s1 / static_cast<double>(t.num_rows())) < 1e-12);
    }
  }
}

TEST_CASE("em_fit traces are monotone, including under missingness") {
  Circuit truth = tied_head();
  DataTable t = table_for(truth);
  std::mt19937_64 rng(12);
  for (const auto& z : sample(truth, 4000, 6)) {
    Assignment e = z;
    e[2] = kMissing;
    if (std::uniform_real_distribution<double>(0, 1)(rng) < 0.5) e[1] = kMissing;
    t.add_row(e);
  }
  for (EmInit init : {EmInit::kRandom, EmInit::kKeep}) {
    Circuit c = truth;
    EmConfig cfg;
    cfg.ll_tolerance = 1e-12;
    cfg.max_iterations = 200;
    cfg.seed = 3;
    const EmTrace tr = em_fit(c, t, init, cfg);
    REQUIRE(!tr.loglik.empty());
    double prev = tr.initial_loglik;
    for (double ll : tr.loglik) {
      CHECK(ll >= prev - 1e-8);
      prev = ll;
    }
    for (std::size_t i = 1; i < tr.objective.size(); ++i) CHECK(tr.objective[i] >= tr.objective[i - 1] - 1e-8);
    CHECK(static_cast<int>(tr.loglik.size()) <= cfg.max_iterations);
  }
}

TEST_CASE("em_fit with random init is reproducible") {
  Circuit truth = tied_head();
  DataTable t = table_for(truth);
  for (const auto& z : sample(truth, 1000, 2)) {
    Assignment e = z;
    e[2] = kMissing;
    t.add_row(e);
  }
  EmConfig cfg;
  cfg.seed = 21;
  Circuit a = truth, b = truth;
  const EmTrace ta = em_fit(a, t, EmInit::kRandom, cfg);
  const EmTrace tb = em_fit(b, t, EmInit::kRandom, cfg);
  CHECK(ta.loglik == tb.loglik);
  CHECK(max_param_diff(a, b) == 0.0);
  Circuit d = truth;
  cfg.seed = 22;
  CHECK(em_fit(d, t, EmInit::kRandom, cfg).initial_loglik != ta.initial_loglik);
}

TEST_CASE("em_fit on complete data converges at iteration 2") {
  oracle::RandomCircuitGenerator gen(31, {3, 8, 2, 0.0, 0.3});
  for (int k = 0; k < 5; ++k) {
    Circuit truth = gen();
    DataTable data = table_for(truth);
    for (const auto& z : sample(truth, 2000, k)) data.add_row(z);
    for (EmInit init : {EmInit::kRandom, EmInit::kKeep}) {
      Circuit c = truth;
      EmConfig cfg;
      cfg.seed = 4;
      const EmTrace tr = em_fit(c, data, init, cfg);
      CHECK(tr.converged);
      CHECK(tr.iterations == 2);
      Circuit m = truth;
      mle_complete(m, data, cfg.laplace_alpha);
      CHECK(max_param_diff(c, m) < 1e-12);
    }
  }
}

TEST_CASE("em_fit reports impossible rows and bad configs") {
  CircuitBuilder b({{0, 2, "A"}, {1, 2, "B"}});
  const int p = b.product({b.indicator(0, 1), b.categorical(1, {0.5, 0.5})});
  Circuit c = b.build(b.sum({p}, {1.0}));
  DataTable t = table_for(c);
  t.add_row(Assignment{1, 0});
  t.add_row(Assignment{1, 1});
  t.add_row(Assignment{0, 1});
  try {
    em_fit(c, t, EmInit::kKeep, {});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kRowImpossible);
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  EmConfig bad;
  bad.max_iterations = 0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.ll_tolerance = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  CHECK(parse_em_init("random") == EmInit::kRandom);
  CHECK_THROWS_AS(parse_em_init("warm"), Error);
}

TEST_CASE("em_fit prior init without a hook warns") {
  Circuit c = fixtures::c1();
  const DataTable t = c1_counts(c);
  const EmTrace tr = em_fit(c, t, EmInit::kPrior, {});
  REQUIRE(!tr.warnings.empty());
  CHECK(tr.warnings[0].find("prior") != std::string::npos);
}
