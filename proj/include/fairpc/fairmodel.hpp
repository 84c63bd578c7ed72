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

#ifndef FAIRPC_FAIRMODEL_HPP_
#define FAIRPC_FAIRMODEL_HPP_

#include <array>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"
#include "fairpc/learn_params.hpp"
#include "fairpc/learn_structure.hpp"

namespace fairpc {

enum class ModelKind { kFairPC, kNLatPC, kTwoNB, kLatNB };

/// "FairPC", "NLatPC", "2NB", "LatNB".
const char* model_kind_name(ModelKind k);
/// Accepts the names above in any case.
ModelKind parse_model_kind(const std::string& s);
/// Models with the hidden fair decision D_f.
bool is_latent(ModelKind k);

/// Index of a (d_f, s) cell in d_mech: (1,1), (1,0), (0,1), (0,0).
inline int dmech_index(int df, int s) { return 2 * (1 - df) + (1 - s); }

struct FairHeadParams {
  double phi_s = 0.3;   // Pr(S=1)
  double phi_df = 0.5;  // Pr(D_f=1); Pr(D=1) for non-latent heads
  /// Pr(D=1 | D_f, S) in dmech_index order. Non-latent heads report the
  /// identity mechanism (1, 1, 0, 0).
  std::array<double, 4> d_mech{0.8, 0.9, 0.1, 0.4};

  void validate() const;
};

/// Variable roles of a fair model. Features carry their own ids 0..n-1,
/// the ids used by feature sub-circuits.
struct FairSchema {
  std::string sensitive = "S";
  std::string label = "D";
  std::string latent = "Df";
  std::vector<Variable> features;

  /// From a data schema: the sensitive and label columns (both binary) and
  /// every feature column in order. The latent name is the first declared
  /// latent variable, or "Df".
  static FairSchema from_schema(const Schema& s);
  void validate() const;
};

/// Node ids of the head. Root children follow the context order
/// (s, d_f) = (1,1), (1,0), (0,1), (0,0); for non-latent heads the second
/// coordinate is D.
struct FairLayout {
  int s_var = 0;
  int d_var = 1;
  int df_var = -1;
  std::vector<int> feature_vars;
  int root = -1;
  std::array<int, 4> context{-1, -1, -1, -1};
  std::array<int, 4> d_leaf{-1, -1, -1, -1};
  std::array<int, 4> feature_root{-1, -1, -1, -1};
};

inline int context_ordinal(int s, int d) { return 2 * (1 - s) + (1 - d); }

/// Circuit variables are ordered [S, D, X..., D_f] (D_f only for latent
/// kinds).
struct FairModel {
  ModelKind kind = ModelKind::kFairPC;
  Circuit circuit;
  FairLayout layout;
  /// Extra comment lines kept through save and load.
  std::vector<std::string> notes;

  FairSchema schema() const;
  FairHeadParams head() const;
  /// Writes the tied root weights and, for latent kinds, the D leaves.
  /// Non-latent kinds ignore d_mech.
  void set_head(const FairHeadParams& h);
  int num_features() const { return static_cast<int>(layout.feature_vars.size()); }
};

/// Builds the sub-circuit over the schema's features for context (s, d).
using FeatureFactory = std::function<Circuit(int s, int d)>;

FairModel build_fair_pc(const FairSchema& schema, const FeatureFactory& features,
                        const FairHeadParams& head = {});
FairModel build_nlat_pc(const FairSchema& schema, const FeatureFactory& features,
                        const FairHeadParams& head = {});
FairModel build_two_nb(const FairSchema& schema, const FairHeadParams& head = {});
FairModel build_lat_nb(const FairSchema& schema, const FairHeadParams& head = {});
FairModel build_model(ModelKind kind, const FairSchema& schema, const FeatureFactory& features,
                      const FairHeadParams& head = {});

/// Fully factorized circuit over the features (a single leaf for one
/// feature), uniform leaves.
Circuit factorized_features(const std::vector<Variable>& features);

/// Recovers the head layout of a circuit with the fair-model shape.
FairLayout analyze_layout(const Circuit& c, ModelKind kind, const std::string& sensitive,
                          const std::string& label, const std::string& latent);

/// Largest deviation of the root weights from a product form, plus the
/// deviation from (phi_s, phi_df) when given.
double tying_residual(const FairModel& m, std::optional<std::pair<double, double>> phis = {});

/// Pr(D_f=1 | e) for latent kinds, Pr(D=1 | e) otherwise. Entries of e for
/// D and D_f are ignored.
double predict_fair(const FairModel& m, std::span<const int> e);

/// Re-indexes a data table into the model's variable order; the latent
/// variable (and the label when hide_label) become missing.
DataTable model_table(const FairModel& m, const DataTable& t, bool hide_label = false);

// Serialization: circuit text format plus a `fair-head` comment line.
std::string head_comment(const FairModel& m);
void write_model(std::ostream& out, const FairModel& m);
FairModel read_model(std::istream& in);
void save_model(const std::string& path, const FairModel& m);
FairModel load_model(const std::string& path);

struct HeadComment {
  FairHeadParams head;
  ModelKind kind = ModelKind::kFairPC;
  std::string sensitive, label, latent;
};
/// Parses a `fair-head ...` comment (without the leading "# ").
HeadComment parse_head_comment(const std::string& line);

/// How FairPC and NLatPC obtain their feature sub-circuits. kPerContext
/// learns one structure per (s, d) context from the rows with S = s and
/// D = d (the observed label stands in for D_f); kShared learns one
/// structure from all rows and copies it into every context.
enum class StructureSharing { kPerContext, kShared };

struct LearnConfig {
  ModelKind kind = ModelKind::kFairPC;
  StructureSharing sharing = StructureSharing::kPerContext;
  EmInit init = EmInit::kPrior;
  EmConfig em;
  StructureConfig structure;
  /// Soft start for the D mechanism: Pr(D = d_f) = 1 - prior_epsilon.
  double prior_epsilon = 0.1;
};

struct LearnResult {
  FairModel model;
  EmTrace trace;
  /// Empty for the naive Bayes kinds; one entry when shared, otherwise one
  /// per context in root-child order.
  std::vector<StructureResult> structures;
};

/// Structure learning of the feature sub-circuits (FairPC, NLatPC),
/// then EM over the whole model.
LearnResult learn_model(const DataTable& train, const LearnConfig& config);

}  // namespace fairpc

#endif  // FAIRPC_FAIRMODEL_HPP_
