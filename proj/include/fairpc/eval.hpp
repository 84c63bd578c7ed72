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

#ifndef FAIRPC_EVAL_HPP_
#define FAIRPC_EVAL_HPP_

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"
#include "fairpc/fairmodel.hpp"

namespace fairpc {

/// Weighted mean log Pr(row) in nats; `t` must match the circuit variables.
double log_likelihood(const Circuit& c, const DataTable& t);
/// As above after aligning the table to the model (D_f marginalized).
double log_likelihood(const FairModel& m, const DataTable& t);

struct Classification {
  std::vector<double> probability;
  std::vector<int> label;
};

/// Per-row Pr(D_f=1 | x, s) (Pr(D=1 | x, s) for non-latent kinds) from the
/// observed feature and sensitive cells; label = probability >= threshold.
Classification classify(const FairModel& m, const DataTable& t, double threshold = 0.5);

double accuracy(std::span<const int> predicted, std::span<const int> truth);
/// Positive class 1; 0 when precision or recall has a zero denominator.
double f1_score(std::span<const int> predicted, std::span<const int> truth);
/// Mean probability over S=0 rows minus the mean over S=1 rows.
double discrimination_score(std::span<const double> probability, std::span<const int> sensitive);

struct MotivationReport {
  double data_s1 = 0.0;  // E_Pdata[f | S=1]
  double data_s0 = 0.0;  // E_Pdata[f | S=0]
  double q_s1 = 0.0;     // E_Q[f | S=1]
  double q_s0 = 0.0;     // E_Q[f | S=0]
};

/// Expected predictions of the two-attribute example classifier under the
/// data distribution and under a uniform, S-independent Q, computed by
/// conditional queries on small circuits.
MotivationReport motivation_check();

struct EvalReport {
  std::string model;
  int fold = 0;
  std::size_t n_test = 0;
  double loglik = 0.0;
  double accuracy = 0.0;
  double f1 = 0.0;
  double discrimination = 0.0;
  int em_iterations = 0;
  double phi_s = 0.0;
  double phi_df = 0.0;
  std::array<double, 4> d_mech{};
  std::uint64_t seed = 0;
  /// Serialized JSON object echoing the run configuration.
  std::string config = "{}";

  /// One JSON object, no trailing newline.
  std::string to_json() const;
};

/// Scores a model on a test table. truth_column names the column used as
/// ground truth for accuracy and F1 (the latent D_f column of a synthetic
/// test split, or the observed label).
EvalReport evaluate(const FairModel& m, const DataTable& test, const std::string& truth_column);

/// Appends one line to a JSON-lines report file.
void append_report(const std::string& path, const EvalReport& r);

}  // namespace fairpc

#endif  // FAIRPC_EVAL_HPP_
