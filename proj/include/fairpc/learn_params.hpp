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

#ifndef FAIRPC_LEARN_PARAMS_HPP_
#define FAIRPC_LEARN_PARAMS_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"
#include "fairpc/flows.hpp"

namespace fairpc {

struct EmConfig {
  int max_iterations = 500;
  /// Stop once (LL_t - LL_{t-1}) <= ll_tolerance * |LL_{t-1}|.
  double ll_tolerance = 1e-6;
  double laplace_alpha = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

enum class EmInit { kPrior, kRandom, kKeep };

const char* em_init_name(EmInit init);
EmInit parse_em_init(const std::string& s);

struct MStepReport {
  /// Sum nodes and categorical leaves that received no flow with alpha = 0
  /// and kept their previous parameters.
  std::vector<int> degenerate_nodes;
};

/// M-step: smoothed flow ratios (F + alpha) / (sum F + alpha * |ch|) for
/// every sum node and categorical leaf; tied groups are updated jointly
/// from their row and column flow marginals.
MStepReport apply_flows(Circuit& c, const FlowTable& flows, double alpha);

/// Closed-form estimate from complete data.
MStepReport mle_complete(Circuit& c, const DataTable& data, double alpha);

struct EmStepResult {
  /// Training log-likelihood under the parameters before the update.
  double loglik = 0.0;
  MStepReport report;
};

EmStepResult em_step(Circuit& c, const DataTable& data, double alpha);

struct EmTrace {
  /// Training log-likelihood of the starting parameters.
  double initial_loglik = 0.0;
  /// Training log-likelihood after each iteration.
  std::vector<double> loglik;
  /// loglik plus the Dirichlet smoothing term, the quantity EM with
  /// alpha > 0 provably never decreases.
  std::vector<double> objective;
  /// Pr(D=1 | D_f, S) after each iteration, when a fair head is present.
  std::vector<std::array<double, 4>> d_mech;
  int iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

struct EmHooks {
  /// Model-specific prior initialization; without it `prior` keeps the
  /// current parameters.
  std::function<void(Circuit&)> prior_init;
  std::function<std::array<double, 4>(const Circuit&)> d_mech;
};

EmTrace em_fit(Circuit& c, const DataTable& data, EmInit init, const EmConfig& config,
               const EmHooks& hooks = {});

/// Symmetric Dirichlet(1) draw for every sum node, categorical leaf and
/// tied-group factor.
void randomize_parameters(Circuit& c, std::uint64_t seed);

/// alpha * sum of log parameters over the free parameters touched by the
/// M-step (the log of the unnormalized Dirichlet(alpha + 1) prior).
double log_smoothing_prior(const Circuit& c, double alpha);

/// Total training log-likelihood; names the first impossible row.
double train_loglik(const Circuit& c, const DataTable& data);

}  // namespace fairpc

#endif  // FAIRPC_LEARN_PARAMS_HPP_
