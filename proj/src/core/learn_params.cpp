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

#include "fairpc/learn_params.hpp"

#include <cmath>

#include "fairpc/error.hpp"
#include "fairpc/random.hpp"
#include "logmath.hpp"

namespace fairpc {

void EmConfig::validate() const {
  if (max_iterations < 1) fail(ErrorCode::kUsage, "max_iterations must be at least 1");
  if (!(ll_tolerance > 0.0)) fail(ErrorCode::kUsage, "ll_tolerance must be positive");
  if (!(laplace_alpha >= 0.0)) fail(ErrorCode::kUsage, "laplace_alpha must be nonnegative");
}

const char* em_init_name(EmInit init) {
  switch (init) {
    case EmInit::kPrior: return "prior";
    case EmInit::kRandom: return "random";
    case EmInit::kKeep: return "keep";
  }
  return "keep";
}

EmInit parse_em_init(const std::string& s) {
  if (s == "prior") return EmInit::kPrior;
  if (s == "random") return EmInit::kRandom;
  if (s == "keep") return EmInit::kKeep;
  fail(ErrorCode::kUsage, "unknown initialization '" + s + "' (expected prior, random or keep)");
}

namespace {

std::vector<char> tied_mask(const Circuit& c) {
  std::vector<char> tied(c.num_nodes(), 0);
  for (const auto& g : c.tied_groups()) tied[g.node] = 1;
  return tied;
}

// Smoothed ratios; false when there is nothing to normalize.
bool smoothed(std::span<const double> counts, double alpha, std::vector<double>& out) {
  double total = 0.0;
  for (double f : counts) total += f;
  const double denom = total + alpha * static_cast<double>(counts.size());
  if (!(denom > 0.0)) return false;
  out.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k) out[k] = (counts[k] + alpha) / denom;
  return true;
}

void set_tied_weights(Circuit& c, const TiedProductGroup& g, std::span<const double> a,
                      std::span<const double> b) {
  std::vector<double> w(c.children(g.node).size());
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) w[g.ordinal[i * g.cols + j]] = a[i] * b[j];
  }
  c.set_weights(g.node, w);
}

}  // namespace

MStepReport apply_flows(Circuit& c, const FlowTable& flows, double alpha) {
  if (flows.edge.size() != c.num_edges() || flows.leaf.size() != c.num_leaf_params()) {
    fail(ErrorCode::kInternal, "flow table does not match circuit");
  }
  MStepReport report;
  const auto tied = tied_mask(c);
  std::vector<double> w;
  for (int n = 0; n < c.num_nodes(); ++n) {
    if (c.kind(n) == NodeKind::kSum && !tied[n]) {
      std::span<const double> f(flows.edge.data() + c.edge_begin(n), c.children(n).size());
      if (smoothed(f, alpha, w)) {
        c.set_weights(n, w);
      } else {
        report.degenerate_nodes.push_back(n);
      }
    } else if (c.kind(n) == NodeKind::kCategorical) {
      std::span<const double> f(flows.leaf.data() + c.leaf_begin(n), c.pmf(n).size());
      if (smoothed(f, alpha, w)) {
        c.set_pmf(n, w);
      } else {
        report.degenerate_nodes.push_back(n);
      }
    }
  }
  for (const auto& g : c.tied_groups()) {
    const std::size_t b = c.edge_begin(g.node);
    std::vector<double> rows(g.rows, 0.0), cols(g.cols, 0.0);
    for (int i = 0; i < g.rows; ++i) {
      for (int j = 0; j < g.cols; ++j) {
        const double f = flows.edge[b + g.ordinal[i * g.cols + j]];
        rows[i] += f;
        cols[j] += f;
      }
    }
    std::vector<double> a, bb;
    if (smoothed(rows, alpha, a) && smoothed(cols, alpha, bb)) {
      set_tied_weights(c, g, a, bb);
    } else {
      report.degenerate_nodes.push_back(g.node);
    }
  }
  return report;
}

MStepReport mle_complete(Circuit& c, const DataTable& data, double alpha) {
  check_table_matches(c, data);
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    for (int v : c.scope(c.root())) {
      if (data.at(r, v) == kMissing) {
        fail(ErrorCode::kIncompleteAssignment,
             "row " + std::to_string(r) + " has no value for '" + c.variables()[v].name + "'");
      }
    }
  }
  FlowTable f = aggregate_flows(c, data);
  return apply_flows(c, f, alpha);
}

EmStepResult em_step(Circuit& c, const DataTable& data, double alpha) {
  FlowTable f = aggregate_flows(c, data);
  EmStepResult r;
  r.loglik = f.loglik;
  r.report = apply_flows(c, f, alpha);
  return r;
}

void randomize_parameters(Circuit& c, std::uint64_t seed) {
  Rng rng = make_rng(seed, 0xe1);
  const auto tied = tied_mask(c);
  for (int n = 0; n < c.num_nodes(); ++n) {
    if (c.kind(n) == NodeKind::kSum && !tied[n]) {
      c.set_weights(n, dirichlet1(rng, c.children(n).size()));
    } else if (c.kind(n) == NodeKind::kCategorical) {
      c.set_pmf(n, dirichlet1(rng, c.pmf(n).size()));
    }
  }
  for (const auto& g : c.tied_groups()) {
    auto a = dirichlet1(rng, g.rows);
    auto b = dirichlet1(rng, g.cols);
    set_tied_weights(c, g, a, b);
  }
}

double log_smoothing_prior(const Circuit& c, double alpha) {
  if (alpha == 0.0) return 0.0;
  const auto tied = tied_mask(c);
  double s = 0.0;
  for (int n = 0; n < c.num_nodes(); ++n) {
    if (c.kind(n) == NodeKind::kSum && !tied[n]) {
      for (double lw : c.log_weights(n)) s += lw;
    } else if (c.kind(n) == NodeKind::kCategorical) {
      for (double lp : c.log_pmf(n)) s += lp;
    }
  }
  for (const auto& g : c.tied_groups()) {
    auto lw = c.log_weights(g.node);
    for (int i = 0; i < g.rows; ++i) {
      double a = 0.0;
      for (int j = 0; j < g.cols; ++j) a += std::exp(lw[g.ordinal[i * g.cols + j]]);
      s += safe_log(a);
    }
    for (int j = 0; j < g.cols; ++j) {
      double b = 0.0;
      for (int i = 0; i < g.rows; ++i) b += std::exp(lw[g.ordinal[i * g.cols + j]]);
      s += safe_log(b);
    }
  }
  return alpha * s;
}

double train_loglik(const Circuit& c, const DataTable& data) {
  check_table_matches(c, data);
  std::vector<double> buf(c.num_nodes());
  double total = 0.0;
  for (std::size_t r = 0; r < data.num_rows(); ++r) {
    forward(c, data.row(r), buf);
    const double lp = buf[c.root()];
    if (lp == kNegInf) {
      fail(ErrorCode::kRowImpossible, "row " + std::to_string(r) + " has zero probability");
    }
    total += data.weight(r) * lp;
  }
  return total;
}

EmTrace em_fit(Circuit& c, const DataTable& data, EmInit init, const EmConfig& config,
               const EmHooks& hooks) {
  config.validate();
  check_table_matches(c, data);
  if (!c.smooth() || !c.decomposable() || determinism(c) != Determinism::kYes) {
    fail(ErrorCode::kUnsupported, "EM needs a smooth, decomposable, deterministic circuit");
  }
  EmTrace trace;
  switch (init) {
    case EmInit::kPrior:
      if (hooks.prior_init) {
        hooks.prior_init(c);
      } else {
        trace.warnings.push_back("no prior available for this circuit; keeping current parameters");
      }
      break;
    case EmInit::kRandom:
      randomize_parameters(c, config.seed);
      break;
    case EmInit::kKeep:
      break;
  }

  // Duplicate rows share their flows; merging them is exact.
  const DataTable rows = data.compress();
  const FlowOptions opts{false};
  const double alpha = config.laplace_alpha;
  auto e_step = [&]() {
    try {
      return aggregate_flows(c, rows, opts);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kRowImpossible) throw;
      train_loglik(c, data);  // rethrows naming the original row
      throw;
    }
  };

  FlowTable flows = e_step();
  trace.initial_loglik = flows.loglik;
  double prev = flows.loglik;
  std::vector<int> degenerate;
  for (int it = 1; it <= config.max_iterations; ++it) {
    MStepReport rep = apply_flows(c, flows, alpha);
    if (it == 1) degenerate = rep.degenerate_nodes;
    flows = e_step();
    const double ll = flows.loglik;
    trace.loglik.push_back(ll);
    trace.objective.push_back(ll + log_smoothing_prior(c, alpha));
    if (hooks.d_mech) trace.d_mech.push_back(hooks.d_mech(c));
    trace.iterations = it;
    if (ll - prev <= config.ll_tolerance * std::abs(prev)) {
      trace.converged = true;
      break;
    }
    prev = ll;
  }
  if (!degenerate.empty()) {
    trace.warnings.push_back(std::to_string(degenerate.size()) +
                             " node(s) received no flow and kept their parameters (first: node " +
                             std::to_string(degenerate.front()) + ")");
  }
  return trace;
}

}  // namespace fairpc
