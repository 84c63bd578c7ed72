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

#include "fairpc/eval.hpp"

#include <cmath>
#include <fstream>

#include "fairpc/error.hpp"
#include "fairpc/flows.hpp"
#include "fairpc/parallel.hpp"
#include "json.hpp"
#include "logmath.hpp"

namespace fairpc {

double log_likelihood(const Circuit& c, const DataTable& t) {
  check_table_matches(c, t);
  if (!c.smooth() || !c.decomposable()) {
    fail(ErrorCode::kUnsupported, "marginal queries need a smooth and decomposable circuit");
  }
  const std::size_t n = t.num_rows();
  std::vector<double> partial(num_chunks(n), 0.0);
  for_each_chunk(n, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
    std::vector<double> buf(c.num_nodes());
    double s = 0.0;
    for (std::size_t r = begin; r < end; ++r) {
      if (t.weight(r) == 0.0) continue;
      forward(c, t.row(r), buf);
      const double lp = buf[c.root()];
      if (lp == kNegInf) {
        fail(ErrorCode::kRowImpossible, "row " + std::to_string(r) + " has zero probability");
      }
      s += t.weight(r) * lp;
    }
    partial[chunk] = s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  const double w = t.total_weight();
  return w > 0.0 ? total / w : 0.0;
}

double log_likelihood(const FairModel& m, const DataTable& t) {
  return log_likelihood(m.circuit, model_table(m, t));
}

Classification classify(const FairModel& m, const DataTable& t, double threshold) {
  const DataTable ev = model_table(m, t, true);
  const Circuit& c = m.circuit;
  const int target = m.layout.df_var >= 0 ? m.layout.df_var : m.layout.d_var;
  const std::size_t n = ev.num_rows();
  Classification out;
  out.probability.resize(n);
  out.label.resize(n);
  for_each_chunk(n, [&](std::size_t, std::size_t begin, std::size_t end) {
    std::vector<double> buf(c.num_nodes());
    Assignment x(c.num_variables());
    for (std::size_t r = begin; r < end; ++r) {
      auto row = ev.row(r);
      x.assign(row.begin(), row.end());
      forward(c, x, buf);
      const double le = buf[c.root()];
      if (le == kNegInf) {
        fail(ErrorCode::kNullEvidence, "row " + std::to_string(r) + ": evidence has zero probability");
      }
      x[target] = 1;
      forward(c, x, buf);
      const double p = std::exp(buf[c.root()] - le);
      out.probability[r] = p;
      out.label[r] = p >= threshold ? 1 : 0;
    }
  });
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) fail(ErrorCode::kUsage, "prediction and truth lengths differ");
  if (predicted.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hit += predicted[i] == truth[i];
  return static_cast<double>(hit) / static_cast<double>(predicted.size());
}

double f1_score(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size()) fail(ErrorCode::kUsage, "prediction and truth lengths differ");
  double tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] == 1 && truth[i] == 1) ++tp;
    if (predicted[i] == 1 && truth[i] != 1) ++fp;
    if (predicted[i] != 1 && truth[i] == 1) ++fn;
  }
  if (tp + fp == 0 || tp + fn == 0) return 0.0;
  const double p = tp / (tp + fp);
  const double r = tp / (tp + fn);
  if (p + r == 0.0) return 0.0;
  return 2.0 * p * r / (p + r);
}

double discrimination_score(std::span<const double> probability, std::span<const int> sensitive) {
  if (probability.size() != sensitive.size()) {
    fail(ErrorCode::kUsage, "probability and sensitive lengths differ");
  }
  double sum0 = 0, sum1 = 0;
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < probability.size(); ++i) {
    if (sensitive[i] == 0) {
      sum0 += probability[i];
      ++n0;
    } else if (sensitive[i] == 1) {
      sum1 += probability[i];
      ++n1;
    }
  }
  if (n0 == 0 || n1 == 0) fail(ErrorCode::kGroup, "discrimination needs both sensitive groups");
  return sum0 / static_cast<double>(n0) - sum1 / static_cast<double>(n1);
}

MotivationReport motivation_check() {
  // f(X, S) indexed [s][x].
  const double f[2][2] = {{0.4, 0.7}, {0.3, 0.8}};
  const std::vector<Variable> vars{{0, 2, "S"}, {1, 2, "X"}};
  // Pr(S) is irrelevant to E[f | S]; Pr(X=1 | S=1) = 0.7, Pr(X=1 | S=0) = 0.4.
  auto two_group = [&](double px1_s1, double px1_s0) {
    CircuitBuilder b(vars);
    const int p1 = b.product({b.indicator(0, 1), b.categorical(1, {1.0 - px1_s1, px1_s1})});
    const int p0 = b.product({b.indicator(0, 0), b.categorical(1, {1.0 - px1_s0, px1_s0})});
    return b.build(b.sum({p1, p0}, {0.5, 0.5}));
  };
  auto expected_f = [&](const Circuit& c, int s) {
    double e = 0.0;
    for (int x = 0; x <= 1; ++x) {
      const int q[2] = {kMissing, x};
      const int ev[2] = {s, kMissing};
      e += f[s][x] * conditional(c, q, ev);
    }
    return e;
  };
  const Circuit data = two_group(0.7, 0.4);
  const Circuit q = two_group(0.5, 0.5);
  return {expected_f(data, 1), expected_f(data, 0), expected_f(q, 1), expected_f(q, 0)};
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["fold"] = fold;
  j["n_test"] = n_test;
  j["loglik"] = loglik;
  j["accuracy"] = accuracy;
  j["f1"] = f1;
  j["discrimination"] = discrimination;
  j["em_iterations"] = em_iterations;
  j["phi_s"] = phi_s;
  j["phi_df"] = phi_df;
  j["d_mech"] = d_mech;
  j["seed"] = seed;
  nlohmann::ordered_json cfg;
  try {
    cfg = nlohmann::ordered_json::parse(config.empty() ? "{}" : config);
  } catch (const nlohmann::json::exception&) {
    cfg = config;
  }
  j["config"] = cfg;
  return j.dump();
}

EvalReport evaluate(const FairModel& m, const DataTable& test, const std::string& truth_column) {
  const int truth_col = test.schema().index_of(truth_column);
  if (truth_col < 0) fail(ErrorCode::kUsage, "test table has no truth column '" + truth_column + "'");
  const int s_col = test.schema().index_of(m.circuit.variables()[m.layout.s_var].name);
  if (s_col < 0) fail(ErrorCode::kSchema, "test table has no sensitive column");

  EvalReport r;
  r.model = model_kind_name(m.kind);
  r.n_test = test.num_rows();
  r.loglik = log_likelihood(m, test);
  const Classification cls = classify(m, test);
  std::vector<int> pred, truth;
  for (std::size_t i = 0; i < test.num_rows(); ++i) {
    const int t = test.at(i, truth_col);
    if (t == kMissing) continue;
    pred.push_back(cls.label[i]);
    truth.push_back(t);
  }
  r.accuracy = accuracy(pred, truth);
  r.f1 = f1_score(pred, truth);
  std::vector<int> s(test.num_rows());
  for (std::size_t i = 0; i < test.num_rows(); ++i) s[i] = test.at(i, s_col);
  r.discrimination = discrimination_score(cls.probability, s);
  const FairHeadParams h = m.head();
  r.phi_s = h.phi_s;
  r.phi_df = h.phi_df;
  r.d_mech = h.d_mech;
  return r;
}

void append_report(const std::string& path, const EvalReport& r) {
  std::ofstream out(path, std::ios::app);
  if (!out) fail(ErrorCode::kIo, "cannot open report file '" + path + "'");
  out << r.to_json() << '\n';
}

}  // namespace fairpc
