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

#include "fairpc/fairmodel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fairpc/error.hpp"
#include "fairpc/flows.hpp"
#include "fairpc/random.hpp"
#include "logmath.hpp"

namespace fairpc {

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::kFairPC: return "FairPC";
    case ModelKind::kNLatPC: return "NLatPC";
    case ModelKind::kTwoNB: return "2NB";
    case ModelKind::kLatNB: return "LatNB";
  }
  return "FairPC";
}

ModelKind parse_model_kind(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char ch) { return std::tolower(ch); });
  if (l == "fairpc") return ModelKind::kFairPC;
  if (l == "nlatpc") return ModelKind::kNLatPC;
  if (l == "2nb" || l == "twonb") return ModelKind::kTwoNB;
  if (l == "latnb") return ModelKind::kLatNB;
  fail(ErrorCode::kUsage, "unknown model kind '" + s + "' (expected fairpc, nlatpc, 2nb or latnb)");
}

bool is_latent(ModelKind k) { return k == ModelKind::kFairPC || k == ModelKind::kLatNB; }

void FairHeadParams::validate() const {
  auto ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (!ok(phi_s) || !ok(phi_df)) fail(ErrorCode::kUsage, "head probabilities must lie in [0, 1]");
  for (double p : d_mech) {
    if (!ok(p)) fail(ErrorCode::kUsage, "d_mech entries must lie in [0, 1]");
  }
}

FairSchema FairSchema::from_schema(const Schema& s) {
  FairSchema f;
  const int si = s.role_index(Role::kSensitive);
  const int li = s.role_index(Role::kLabel);
  if (si < 0) fail(ErrorCode::kSchema, "schema has no sensitive column");
  if (li < 0) fail(ErrorCode::kSchema, "schema has no label column");
  f.sensitive = s.columns[si].name;
  f.label = s.columns[li].name;
  if (s.columns[si].arity != 2) fail(ErrorCode::kSchema, "sensitive column must be binary");
  if (s.columns[li].arity != 2) fail(ErrorCode::kSchema, "label column must be binary");
  f.latent = s.latent.empty() ? "Df" : s.latent.front().name;
  for (const auto& c : s.columns) {
    if (c.role != Role::kFeature) continue;
    f.features.push_back({static_cast<int>(f.features.size()), c.arity, c.name});
  }
  f.validate();
  return f;
}

void FairSchema::validate() const {
  if (features.empty()) fail(ErrorCode::kSchema, "fair model needs at least one feature");
  std::map<std::string, int> seen;
  for (const auto* n : {&sensitive, &label, &latent}) ++seen[*n];
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].id != static_cast<int>(i)) fail(ErrorCode::kSchema, "feature ids must be 0..n-1");
    if (features[i].arity < 2) {
      fail(ErrorCode::kSchema, "feature '" + features[i].name + "' has fewer than two values");
    }
    ++seen[features[i].name];
  }
  for (const auto& [name, count] : seen) {
    if (count > 1) fail(ErrorCode::kSchema, "variable name '" + name + "' is used twice");
  }
}

namespace {

std::vector<Variable> model_variables(const FairSchema& fs, bool latent) {
  std::vector<Variable> vars;
  vars.push_back({0, 2, fs.sensitive});
  vars.push_back({1, 2, fs.label});
  for (const auto& f : fs.features) vars.push_back({static_cast<int>(vars.size()), f.arity, f.name});
  if (latent) vars.push_back({static_cast<int>(vars.size()), 2, fs.latent});
  return vars;
}

std::array<double, 4> root_weights(double phi_s, double phi_d) {
  std::array<double, 4> w{};
  for (int s = 0; s <= 1; ++s) {
    for (int d = 0; d <= 1; ++d) {
      w[context_ordinal(s, d)] = (s ? phi_s : 1.0 - phi_s) * (d ? phi_d : 1.0 - phi_d);
    }
  }
  return w;
}

FairModel assemble(ModelKind kind, const FairSchema& fs, const FeatureFactory& factory,
                   const FairHeadParams& head) {
  fs.validate();
  head.validate();
  const bool latent = is_latent(kind);
  const auto vars = model_variables(fs, latent);
  const int n_feat = static_cast<int>(fs.features.size());
  const int s_var = 0, d_var = 1, df_var = latent ? n_feat + 2 : -1;
  std::vector<int> var_map(n_feat);
  for (int i = 0; i < n_feat; ++i) var_map[i] = i + 2;

  CircuitBuilder b(vars);
  std::vector<int> contexts(4);
  for (int k = 0; k < 4; ++k) {
    const int s = k < 2 ? 1 : 0;
    const int d = k % 2 == 0 ? 1 : 0;
    Circuit fc = factory(s, d);
    if (fc.empty() || fc.num_variables() != n_feat ||
        static_cast<int>(fc.scope(fc.root()).size()) != n_feat) {
      fail(ErrorCode::kStructure, "feature sub-circuit scope does not equal the feature set");
    }
    for (int i = 0; i < n_feat; ++i) {
      if (fc.variables()[i].arity != fs.features[i].arity) {
        fail(ErrorCode::kSchema, "feature sub-circuit arity mismatch for '" + fs.features[i].name + "'");
      }
    }
    const auto ids = b.import(fc, var_map);
    const int froot = ids[fc.root()];
    if (latent) {
      const double p = head.d_mech[dmech_index(d, s)];
      contexts[k] = b.product({b.indicator(s_var, s), b.indicator(df_var, d),
                               b.categorical(d_var, {1.0 - p, p}), froot});
    } else {
      contexts[k] = b.product({b.indicator(s_var, s), b.indicator(d_var, d), froot});
    }
  }
  const auto w = root_weights(head.phi_s, head.phi_df);
  std::vector<double> lw(4);
  for (int k = 0; k < 4; ++k) lw[k] = safe_log(w[k]);
  const int root = b.sum_log(contexts, lw);
  b.tie({root, 2, 2, {0, 1, 2, 3}});

  FairModel m;
  m.kind = kind;
  m.circuit = b.build(root);
  m.layout = analyze_layout(m.circuit, kind, fs.sensitive, fs.label, fs.latent);
  return m;
}

}  // namespace

FairModel build_fair_pc(const FairSchema& schema, const FeatureFactory& features,
                        const FairHeadParams& head) {
  return assemble(ModelKind::kFairPC, schema, features, head);
}

FairModel build_nlat_pc(const FairSchema& schema, const FeatureFactory& features,
                        const FairHeadParams& head) {
  return assemble(ModelKind::kNLatPC, schema, features, head);
}

Circuit factorized_features(const std::vector<Variable>& features) {
  if (features.empty()) fail(ErrorCode::kSchema, "no features");
  CircuitBuilder b(features);
  std::vector<int> leaves;
  for (const auto& v : features) {
    leaves.push_back(b.categorical(v.id, std::vector<double>(v.arity, 1.0 / v.arity)));
  }
  if (leaves.size() == 1) return b.build(leaves[0]);
  return b.build(b.product(std::move(leaves)));
}

FairModel build_two_nb(const FairSchema& schema, const FairHeadParams& head) {
  const Circuit f = factorized_features(schema.features);
  return assemble(ModelKind::kTwoNB, schema, [&](int, int) { return f; }, head);
}

FairModel build_lat_nb(const FairSchema& schema, const FairHeadParams& head) {
  const Circuit f = factorized_features(schema.features);
  return assemble(ModelKind::kLatNB, schema, [&](int, int) { return f; }, head);
}

FairModel build_model(ModelKind kind, const FairSchema& schema, const FeatureFactory& features,
                      const FairHeadParams& head) {
  return assemble(kind, schema, features, head);
}

FairLayout analyze_layout(const Circuit& c, ModelKind kind, const std::string& sensitive,
                          const std::string& label, const std::string& latent) {
  auto bad = [](const std::string& why) -> void {
    fail(ErrorCode::kStructure, "circuit does not have the fair-model head shape: " + why);
  };
  const bool lat = is_latent(kind);
  FairLayout l;
  l.s_var = l.d_var = l.df_var = -1;
  for (const auto& v : c.variables()) {
    if (v.name == sensitive) {
      l.s_var = v.id;
    } else if (v.name == label) {
      l.d_var = v.id;
    } else if (lat && v.name == latent) {
      l.df_var = v.id;
    } else {
      l.feature_vars.push_back(v.id);
    }
  }
  if (l.s_var < 0 || l.d_var < 0 || (lat && l.df_var < 0)) bad("head variables not found");
  if (c.variables()[l.s_var].arity != 2 || c.variables()[l.d_var].arity != 2 ||
      (lat && c.variables()[l.df_var].arity != 2)) {
    bad("head variables must be binary");
  }
  if (l.feature_vars.empty()) bad("no feature variables");
  l.root = c.root();
  if (c.kind(l.root) != NodeKind::kSum || c.children(l.root).size() != 4) {
    bad("root must be a sum with four children");
  }
  const int key_var = lat ? l.df_var : l.d_var;
  for (int k = 0; k < 4; ++k) {
    const int p = c.children(l.root)[k];
    if (c.kind(p) != NodeKind::kProduct) bad("context " + std::to_string(k) + " is not a product");
    int s = -1, d = -1, d_leaf = -1, feat = -1;
    for (int ch : c.children(p)) {
      if (c.kind(ch) == NodeKind::kIndicator && c.leaf_variable(ch) == l.s_var) {
        s = c.indicator_value(ch);
      } else if (c.kind(ch) == NodeKind::kIndicator && c.leaf_variable(ch) == key_var) {
        d = c.indicator_value(ch);
      } else if (lat && c.kind(ch) == NodeKind::kCategorical && c.leaf_variable(ch) == l.d_var) {
        d_leaf = ch;
      } else {
        if (feat >= 0) bad("context " + std::to_string(k) + " has more than one feature block");
        feat = ch;
      }
    }
    if (s < 0 || d < 0 || feat < 0 || (lat && d_leaf < 0)) {
      bad("context " + std::to_string(k) + " lacks a head factor");
    }
    if (context_ordinal(s, d) != k) bad("contexts are out of order");
    if (static_cast<int>(c.scope(feat).size()) != static_cast<int>(l.feature_vars.size())) {
      bad("feature block of context " + std::to_string(k) + " does not cover every feature");
    }
    l.context[k] = p;
    l.d_leaf[k] = d_leaf;
    l.feature_root[k] = feat;
  }
  return l;
}

FairSchema FairModel::schema() const {
  FairSchema fs;
  const auto& vars = circuit.variables();
  fs.sensitive = vars[layout.s_var].name;
  fs.label = vars[layout.d_var].name;
  fs.latent = layout.df_var >= 0 ? vars[layout.df_var].name : "Df";
  for (int v : layout.feature_vars) {
    fs.features.push_back({static_cast<int>(fs.features.size()), vars[v].arity, vars[v].name});
  }
  return fs;
}

FairHeadParams FairModel::head() const {
  FairHeadParams h;
  auto lw = circuit.log_weights(layout.root);
  std::array<double, 4> w{};
  for (int k = 0; k < 4; ++k) w[k] = std::exp(lw[k]);
  h.phi_s = w[0] + w[1];
  h.phi_df = w[0] + w[2];
  if (is_latent(kind)) {
    for (int k = 0; k < 4; ++k) {
      const int s = k < 2 ? 1 : 0;
      const int d = k % 2 == 0 ? 1 : 0;
      h.d_mech[dmech_index(d, s)] = circuit.pmf(layout.d_leaf[k])[1];
    }
  } else {
    h.d_mech = {1.0, 1.0, 0.0, 0.0};
  }
  return h;
}

void FairModel::set_head(const FairHeadParams& h) {
  h.validate();
  const auto w = root_weights(h.phi_s, h.phi_df);
  circuit.set_weights(layout.root, w);
  if (!is_latent(kind)) return;
  for (int k = 0; k < 4; ++k) {
    const int s = k < 2 ? 1 : 0;
    const int d = k % 2 == 0 ? 1 : 0;
    const double p = h.d_mech[dmech_index(d, s)];
    const double pmf[2] = {1.0 - p, p};
    circuit.set_pmf(layout.d_leaf[k], pmf);
  }
}

double tying_residual(const FairModel& m, std::optional<std::pair<double, double>> phis) {
  auto lw = m.circuit.log_weights(m.layout.root);
  std::array<double, 4> w{};
  for (int k = 0; k < 4; ++k) w[k] = std::exp(lw[k]);
  const double a = w[0] + w[1];
  const double b = w[0] + w[2];
  double r = 0.0;
  const auto fit = root_weights(a, b);
  for (int k = 0; k < 4; ++k) r = std::max(r, std::abs(w[k] - fit[k]));
  if (phis) {
    const auto meta = root_weights(phis->first, phis->second);
    for (int k = 0; k < 4; ++k) r = std::max(r, std::abs(w[k] - meta[k]));
  }
  return r;
}

double predict_fair(const FairModel& m, std::span<const int> e) {
  const int n = m.circuit.num_variables();
  if (static_cast<int>(e.size()) != n) {
    fail(ErrorCode::kSchema, "evidence has " + std::to_string(e.size()) + " entries, model has " +
                                 std::to_string(n) + " variables");
  }
  Assignment ev(e.begin(), e.end());
  Assignment q(n, kMissing);
  ev[m.layout.d_var] = kMissing;
  if (m.layout.df_var >= 0) {
    ev[m.layout.df_var] = kMissing;
    q[m.layout.df_var] = 1;
  } else {
    q[m.layout.d_var] = 1;
  }
  return conditional(m.circuit, q, ev);
}

DataTable model_table(const FairModel& m, const DataTable& t, bool hide_label) {
  std::set<std::string> hidden;
  const auto& vars = m.circuit.variables();
  if (m.layout.df_var >= 0) hidden.insert(vars[m.layout.df_var].name);
  if (hide_label) hidden.insert(vars[m.layout.d_var].name);
  for (const auto& c : t.schema().columns) {
    if (c.role == Role::kLatent) hidden.insert(c.name);
  }
  for (const auto& c : t.schema().latent) hidden.insert(c.name);
  return align(t, vars, hidden);
}

// ---------------------------------------------------------------------------
// Serialization

std::string head_comment(const FairModel& m) {
  const FairHeadParams h = m.head();
  const auto& vars = m.circuit.variables();
  std::string s = "fair-head phi_s=" + format_double(h.phi_s) + " phi_df=" + format_double(h.phi_df) +
                  " dmech=";
  for (int i = 0; i < 4; ++i) {
    if (i) s += ',';
    s += format_double(h.d_mech[i]);
  }
  s += std::string(" kind=") + model_kind_name(m.kind);
  s += " sensitive=" + vars[m.layout.s_var].name;
  s += " label=" + vars[m.layout.d_var].name;
  s += " latent=" + (m.layout.df_var >= 0 ? vars[m.layout.df_var].name : std::string("-"));
  return s;
}

namespace {

double parse_prob(const std::string& s) {
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    fail(ErrorCode::kParse, "fair-head: bad number '" + s + "'");
  }
  return v;
}

}  // namespace

HeadComment parse_head_comment(const std::string& line) {
  std::istringstream in(line);
  std::string tok;
  in >> tok;
  if (tok != "fair-head") fail(ErrorCode::kParse, "not a fair-head comment");
  std::map<std::string, std::string> kv;
  while (in >> tok) {
    auto eq = tok.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kParse, "fair-head: expected key=value, got '" + tok + "'");
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  for (const char* key : {"phi_s", "phi_df", "dmech", "kind", "sensitive", "label", "latent"}) {
    if (!kv.count(key)) fail(ErrorCode::kParse, std::string("fair-head: missing ") + key);
  }
  HeadComment h;
  h.head.phi_s = parse_prob(kv["phi_s"]);
  h.head.phi_df = parse_prob(kv["phi_df"]);
  std::stringstream dm(kv["dmech"]);
  std::string cell;
  int i = 0;
  while (std::getline(dm, cell, ',')) {
    if (i >= 4) fail(ErrorCode::kParse, "fair-head: dmech needs four values");
    h.head.d_mech[i++] = parse_prob(cell);
  }
  if (i != 4) fail(ErrorCode::kParse, "fair-head: dmech needs four values");
  try {
    h.kind = parse_model_kind(kv["kind"]);
  } catch (const Error& e) {
    fail(ErrorCode::kParse, std::string("fair-head: ") + e.what());
  }
  h.sensitive = kv["sensitive"];
  h.label = kv["label"];
  h.latent = kv["latent"];
  return h;
}

void write_model(std::ostream& out, const FairModel& m) {
  std::vector<std::string> comments{head_comment(m)};
  comments.insert(comments.end(), m.notes.begin(), m.notes.end());
  write_circuit(out, m.circuit, comments);
}

FairModel read_model(std::istream& in) {
  CircuitText text = read_circuit(in);
  const std::string* line = nullptr;
  FairModel m;
  for (const auto& c : text.comments) {
    if (c.rfind("fair-head", 0) == 0) {
      if (line) fail(ErrorCode::kParse, "model file has more than one fair-head comment");
      line = &c;
    } else {
      m.notes.push_back(c);
    }
  }
  if (!line) fail(ErrorCode::kParse, "model file has no fair-head comment");
  const HeadComment h = parse_head_comment(*line);
  m.kind = h.kind;
  m.circuit = std::move(text.circuit);
  m.layout = analyze_layout(m.circuit, h.kind, h.sensitive, h.label, h.latent);
  m.circuit.add_tied_group({m.layout.root, 2, 2, {0, 1, 2, 3}});
  return m;
}

void save_model(const std::string& path, const FairModel& m) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write model file '" + path + "'");
  write_model(out, m);
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

FairModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open model file '" + path + "'");
  return read_model(in);
}

// ---------------------------------------------------------------------------
// Learning

namespace {

double empirical_one(const DataTable& t, int col) {
  double ones = 0.0, total = 0.0;
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    const int v = t.at(r, col);
    if (v == kMissing) continue;
    total += t.weight(r);
    if (v == 1) ones += t.weight(r);
  }
  return total > 0.0 ? ones / total : 0.5;
}

}  // namespace

LearnResult learn_model(const DataTable& train, const LearnConfig& config) {
  config.em.validate();
  config.structure.validate();
  if (!(config.prior_epsilon > 0.0 && config.prior_epsilon < 0.5)) {
    fail(ErrorCode::kUsage, "prior_epsilon must be in (0, 0.5)");
  }
  const FairSchema fs = FairSchema::from_schema(train.schema());
  std::vector<std::string> feature_names;
  for (const auto& f : fs.features) feature_names.push_back(f.name);
  const DataTable feat = train.select(feature_names);

  LearnResult result;
  std::array<Circuit, 4> subs;
  const bool structured = config.kind == ModelKind::kFairPC || config.kind == ModelKind::kNLatPC;
  if (structured && config.sharing == StructureSharing::kPerContext) {
    const int s_col = train.schema().index_of(fs.sensitive);
    const int d_col = train.schema().index_of(fs.label);
    std::array<std::vector<std::size_t>, 4> rows;
    for (std::size_t r = 0; r < train.num_rows(); ++r) {
      const int s = train.at(r, s_col), d = train.at(r, d_col);
      if (s == kMissing || d == kMissing) continue;
      rows[context_ordinal(s, d)].push_back(r);
    }
    for (int k = 0; k < 4; ++k) {
      if (rows[k].size() < 2) {
        fail(ErrorCode::kInsufficientData, "context " + std::to_string(k) + " has " +
                                               std::to_string(rows[k].size()) +
                                               " training rows; use shared structure");
      }
      StructureConfig sc = config.structure;
      sc.seed = mix_seed(config.structure.seed, 0x5c + k);
      StructureResult sr = strudel_learn(feat.subset(rows[k]), sc);
      subs[k] = sr.circuit;
      result.structures.push_back(std::move(sr));
    }
  } else if (structured) {
    StructureResult sr = strudel_learn(feat, config.structure);
    subs.fill(sr.circuit);
    result.structures.push_back(std::move(sr));
  } else {
    Circuit sub = factorized_features(to_variables(feat.schema(), false));
    apply_flows(sub, aggregate_flows(sub, feat.compress()), config.em.laplace_alpha);
    subs.fill(sub);
  }

  FairHeadParams prior;
  prior.phi_s = empirical_one(train, train.schema().index_of(fs.sensitive));
  prior.phi_df = empirical_one(train, train.schema().index_of(fs.label));
  const double eps = config.prior_epsilon;
  prior.d_mech = {1.0 - eps, 1.0 - eps, eps, eps};

  FairModel m =
      build_model(config.kind, fs, [&](int s, int d) { return subs[context_ordinal(s, d)]; }, prior);
  const Circuit prior_circuit = m.circuit;
  const DataTable data = model_table(m, train);

  EmHooks hooks;
  hooks.prior_init = [&](Circuit& c) { c = prior_circuit; };
  if (is_latent(m.kind)) {
    const FairLayout layout = m.layout;
    hooks.d_mech = [layout](const Circuit& c) {
      std::array<double, 4> d{};
      for (int k = 0; k < 4; ++k) {
        const int s = k < 2 ? 1 : 0;
        const int df = k % 2 == 0 ? 1 : 0;
        d[dmech_index(df, s)] = c.pmf(layout.d_leaf[k])[1];
      }
      return d;
    };
  }
  result.trace = em_fit(m.circuit, data, config.init, config.em, hooks);
  result.model = std::move(m);
  return result;
}

}  // namespace fairpc
