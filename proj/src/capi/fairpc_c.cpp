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


#include "fairpc/fairpc.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <optional>
#include <string>

#include "fairpc/circuit.hpp"
#include "fairpc/dataset.hpp"
#include "fairpc/error.hpp"
#include "fairpc/eval.hpp"
#include "fairpc/fairmodel.hpp"
#include "fairpc/parallel.hpp"
#include "fairpc/synthgen.hpp"
#include "json.hpp"

struct fairpc_table {
  fairpc::DataTable table;
};

struct fairpc_model {
  fairpc::FairModel model;
  /// Empty unless the model came from fairpc_learn.
  std::string trace_json;
};

namespace {

using nlohmann::ordered_json;

thread_local std::string g_last_error;

constexpr const char* kLearnNote = "learn-config ";

template <typename F>
fairpc_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return FAIRPC_OK;
  } catch (const fairpc::Error& e) {
    g_last_error = e.what();
    return static_cast<fairpc_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return FAIRPC_E_INTERNAL;
}

void require(const void* p, const char* what) {
  if (!p) fairpc::fail(fairpc::ErrorCode::kUsage, std::string(what) + " must not be null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

ordered_json head_json(const fairpc::FairHeadParams& h) {
  return {{"phi_s", h.phi_s}, {"phi_df", h.phi_df}, {"d_mech", h.d_mech}};
}

std::optional<ordered_json> learn_note(const fairpc::FairModel& m) {
  for (const auto& n : m.notes) {
    if (n.rfind(kLearnNote, 0) != 0) continue;
    try {
      return ordered_json::parse(n.substr(std::strlen(kLearnNote)));
    } catch (const nlohmann::json::exception&) {
      fairpc::fail(fairpc::ErrorCode::kParse, "malformed learn-config comment in model file");
    }
  }
  return std::nullopt;
}

const char* determinism_name(fairpc::Determinism d) {
  switch (d) {
    case fairpc::Determinism::kYes: return "yes";
    case fairpc::Determinism::kNo: return "no";
    case fairpc::Determinism::kUnverifiable: return "unverifiable";
  }
  return "unverifiable";
}

}  // namespace

extern "C" {

const char* fairpc_version(void) { return "0.1.0"; }

const char* fairpc_status_name(fairpc_status status) {
  switch (status) {
    case FAIRPC_OK: return "ok";
    case FAIRPC_E_USAGE: return "usage error";
    case FAIRPC_E_PARSE: return "parse error";
    case FAIRPC_E_SCHEMA: return "schema error";
    case FAIRPC_E_STRUCTURE: return "structure error";
    case FAIRPC_E_UNSUPPORTED: return "unsupported query";
    case FAIRPC_E_NULL_EVIDENCE: return "zero-probability evidence";
    case FAIRPC_E_ROW_IMPOSSIBLE: return "impossible row";
    case FAIRPC_E_INCOMPLETE_ASSIGNMENT: return "incomplete assignment";
    case FAIRPC_E_VOCABULARY: return "unknown category";
    case FAIRPC_E_BINNING: return "binning error";
    case FAIRPC_E_FOLD: return "fold error";
    case FAIRPC_E_INSUFFICIENT_DATA: return "insufficient data";
    case FAIRPC_E_GROUP: return "empty group";
    case FAIRPC_E_IO: return "i/o error";
    case FAIRPC_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* fairpc_last_error(void) { return g_last_error.c_str(); }

void fairpc_string_free(char* s) { std::free(s); }

void fairpc_set_num_threads(unsigned n) { fairpc::set_num_threads(n); }

fairpc_status fairpc_table_load(const char* csv_path, const char* schema_path, fairpc_table** out) {
  return guarded([&] {
    require(csv_path, "csv_path");
    require(out, "out");
    *out = nullptr;
    std::optional<fairpc::Schema> schema;
    if (schema_path) schema = fairpc::Schema::load(schema_path);
    auto* t = new fairpc_table{fairpc::load_csv(csv_path, schema)};
    *out = t;
  });
}

void fairpc_table_free(fairpc_table* t) { delete t; }

size_t fairpc_table_num_rows(const fairpc_table* t) { return t ? t->table.num_rows() : 0; }

size_t fairpc_table_num_columns(const fairpc_table* t) { return t ? t->table.num_columns() : 0; }

fairpc_status fairpc_table_save(const fairpc_table* t, const char* csv_path) {
  return guarded([&] {
    require(t, "table");
    require(csv_path, "csv_path");
    fairpc::save_csv(csv_path, t->table);
  });
}

fairpc_status fairpc_table_schema_json(const fairpc_table* t, char** out) {
  return guarded([&] {
    require(t, "table");
    require(out, "out");
    *out = dup_string(t->table.schema().to_json());
  });
}

fairpc_status fairpc_table_mcar(const fairpc_table* t, double fraction, uint64_t seed,
                                fairpc_table** out) {
  return guarded([&] {
    require(t, "table");
    require(out, "out");
    *out = nullptr;
    std::set<std::string> keep;
    for (const auto& c : t->table.schema().columns) {
      if (c.role != fairpc::Role::kFeature) keep.insert(c.name);
    }
    *out = new fairpc_table{fairpc::mcar_corrupt(t->table, fraction, seed, keep)};
  });
}

void fairpc_synth_config_default(fairpc_synth_config* c) {
  if (!c) return;
  const fairpc::SynthConfig d;
  c->n_features = d.n_features;
  c->n_samples = d.n_samples;
  c->n_test = d.n_test;
  c->seed = d.seed;
  c->phi_s = d.head.phi_s;
  c->phi_df = d.head.phi_df;
  for (int i = 0; i < 4; ++i) c->d_mech[i] = d.head.d_mech[i];
  c->allow_any_features = d.allow_any_features ? 1 : 0;
}

fairpc_status fairpc_synth(const fairpc_synth_config* c, const char* out_dir) {
  return guarded([&] {
    require(c, "config");
    require(out_dir, "out_dir");
    fairpc::SynthConfig s;
    s.n_features = c->n_features;
    s.n_samples = c->n_samples;
    s.n_test = c->n_test;
    s.seed = c->seed;
    s.head.phi_s = c->phi_s;
    s.head.phi_df = c->phi_df;
    for (int i = 0; i < 4; ++i) s.head.d_mech[i] = c->d_mech[i];
    s.allow_any_features = c->allow_any_features != 0;
    s.validate();
    fairpc::write_bundle(fairpc::generate(s), out_dir);
  });
}

void fairpc_learn_config_default(fairpc_learn_config* c) {
  if (!c) return;
  const fairpc::LearnConfig d;
  c->model = "fairpc";
  c->init = "prior";
  c->max_iterations = d.em.max_iterations;
  c->ll_tolerance = d.em.ll_tolerance;
  c->laplace_alpha = d.em.laplace_alpha;
  c->seed = d.em.seed;
  c->max_splits = d.structure.max_splits;
  c->validation_fraction = d.structure.validation_fraction;
  c->patience = d.structure.patience;
  c->prior_epsilon = d.prior_epsilon;
  c->shared_structure = d.sharing == fairpc::StructureSharing::kShared ? 1 : 0;
}

fairpc_status fairpc_learn(const fairpc_table* train, const fairpc_learn_config* c,
                           fairpc_model** out) {
  return guarded([&] {
    require(train, "train");
    require(c, "config");
    require(out, "out");
    *out = nullptr;
    fairpc::LearnConfig lc;
    lc.kind = fairpc::parse_model_kind(c->model ? c->model : "fairpc");
    lc.init = fairpc::parse_em_init(c->init ? c->init : "prior");
    if (lc.init == fairpc::EmInit::kKeep) {
      fairpc::fail(fairpc::ErrorCode::kUsage, "init must be prior or random");
    }
    lc.em.max_iterations = c->max_iterations;
    lc.em.ll_tolerance = c->ll_tolerance;
    lc.em.laplace_alpha = c->laplace_alpha;
    lc.em.seed = c->seed;
    lc.structure.max_splits = c->max_splits;
    lc.structure.validation_fraction = c->validation_fraction;
    lc.structure.patience = c->patience;
    lc.structure.alpha = c->laplace_alpha;
    lc.structure.seed = c->seed;
    lc.prior_epsilon = c->prior_epsilon;
    lc.sharing = c->shared_structure ? fairpc::StructureSharing::kShared
                                     : fairpc::StructureSharing::kPerContext;
    lc.em.validate();
    lc.structure.validate();

    fairpc::LearnResult r = fairpc::learn_model(train->table, lc);

    ordered_json cfg;
    cfg["model"] = fairpc::model_kind_name(lc.kind);
    cfg["init"] = fairpc::em_init_name(lc.init);
    cfg["max_iterations"] = lc.em.max_iterations;
    cfg["ll_tolerance"] = lc.em.ll_tolerance;
    cfg["laplace_alpha"] = lc.em.laplace_alpha;
    cfg["seed"] = lc.em.seed;
    cfg["max_splits"] = lc.structure.max_splits;
    cfg["validation_fraction"] = lc.structure.validation_fraction;
    cfg["patience"] = lc.structure.patience;
    cfg["prior_epsilon"] = lc.prior_epsilon;
    cfg["structure_sharing"] = lc.sharing == fairpc::StructureSharing::kShared ? "shared" : "per-context";
    cfg["n_train"] = train->table.num_rows();
    cfg["em_iterations"] = r.trace.iterations;
    r.model.notes.push_back(kLearnNote + cfg.dump());

    ordered_json tj;
    tj["model"] = cfg["model"];
    tj["init"] = cfg["init"];
    tj["seed"] = lc.em.seed;
    tj["initial_loglik"] = r.trace.initial_loglik;
    tj["loglik"] = r.trace.loglik;
    tj["objective"] = r.trace.objective;
    tj["d_mech"] = r.trace.d_mech;
    tj["iterations"] = r.trace.iterations;
    tj["converged"] = r.trace.converged;
    tj["warnings"] = r.trace.warnings;
    tj["head"] = head_json(r.model.head());
    ordered_json st = ordered_json::array();
    for (const auto& sr : r.structures) {
      st.push_back({{"train_ll", sr.train_ll},
                    {"validation_ll", sr.validation_ll},
                    {"splits_applied", sr.splits_applied},
                    {"best_step", sr.best_step}});
    }
    tj["structure"] = st;
    *out = new fairpc_model{std::move(r.model), tj.dump()};
  });
}

fairpc_status fairpc_model_trace_json(const fairpc_model* m, char** out) {
  return guarded([&] {
    require(m, "model");
    require(out, "out");
    if (m->trace_json.empty()) fairpc::fail(fairpc::ErrorCode::kUsage, "model has no learning trace");
    *out = dup_string(m->trace_json);
  });
}

fairpc_status fairpc_model_load(const char* path, fairpc_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    *out = new fairpc_model{fairpc::load_model(path), {}};
  });
}

fairpc_status fairpc_model_save(const fairpc_model* m, const char* path) {
  return guarded([&] {
    require(m, "model");
    require(path, "path");
    fairpc::save_model(path, m->model);
  });
}

void fairpc_model_free(fairpc_model* m) { delete m; }

const char* fairpc_model_kind(const fairpc_model* m) {
  return m ? fairpc::model_kind_name(m->model.kind) : "";
}

fairpc_status fairpc_model_head(const fairpc_model* m, double* phi_s, double* phi_df,
                                double d_mech[4]) {
  return guarded([&] {
    require(m, "model");
    const fairpc::FairHeadParams h = m->model.head();
    if (phi_s) *phi_s = h.phi_s;
    if (phi_df) *phi_df = h.phi_df;
    if (d_mech) {
      for (int i = 0; i < 4; ++i) d_mech[i] = h.d_mech[i];
    }
  });
}

fairpc_status fairpc_evaluate(const fairpc_model* m, const fairpc_table* test,
                              const char* truth_column, int fold, const char* config_json,
                              char** report_json) {
  return guarded([&] {
    require(m, "model");
    require(test, "test");
    require(truth_column, "truth_column");
    require(report_json, "report_json");
    std::string truth = truth_column;
    if (test->table.schema().index_of(truth) < 0) {
      const auto& vars = m->model.circuit.variables();
      if (truth == "df") {
        const int li = test->table.schema().role_index(fairpc::Role::kLatent);
        if (m->model.layout.df_var >= 0) {
          truth = vars[m->model.layout.df_var].name;
        } else if (li >= 0) {
          truth = test->table.schema().columns[li].name;
        }
      }
      if (truth == "d") truth = vars[m->model.layout.d_var].name;
    }
    fairpc::EvalReport r = fairpc::evaluate(m->model, test->table, truth);
    r.fold = fold;
    ordered_json cfg = ordered_json::object();
    if (config_json && *config_json) {
      try {
        cfg = ordered_json::parse(config_json);
      } catch (const nlohmann::json::exception&) {
        fairpc::fail(fairpc::ErrorCode::kUsage, "config_json is not valid JSON");
      }
    }
    if (const auto note = learn_note(m->model)) {
      r.em_iterations = note->value("em_iterations", 0);
      r.seed = note->value("seed", std::uint64_t{0});
      cfg["learn"] = *note;
    }
    cfg["truth_col"] = truth;
    r.config = cfg.dump();
    *report_json = dup_string(r.to_json());
  });
}

fairpc_status fairpc_append_line(const char* path, const char* line) {
  return guarded([&] {
    require(path, "path");
    require(line, "line");
    std::ofstream out(path, std::ios::app);
    if (!out) fairpc::fail(fairpc::ErrorCode::kIo, std::string("cannot open '") + path + "'");
    out << line << '\n';
    if (!out) fairpc::fail(fairpc::ErrorCode::kIo, std::string("cannot write '") + path + "'");
  });
}

fairpc_status fairpc_predict(const fairpc_model* m, const fairpc_table* t, double* probabilities) {
  return guarded([&] {
    require(m, "model");
    require(t, "table");
    require(probabilities, "probabilities");
    const fairpc::Classification c = fairpc::classify(m->model, t->table);
    std::copy(c.probability.begin(), c.probability.end(), probabilities);
  });
}

fairpc_status fairpc_loglik(const fairpc_model* m, const fairpc_table* t, double* out) {
  return guarded([&] {
    require(m, "model");
    require(t, "table");
    require(out, "out");
    *out = fairpc::log_likelihood(m->model, t->table);
  });
}

fairpc_status fairpc_motivation(double out[4]) {
  return guarded([&] {
    require(out, "out");
    const fairpc::MotivationReport r = fairpc::motivation_check();
    out[0] = r.data_s1;
    out[1] = r.data_s0;
    out[2] = r.q_s1;
    out[3] = r.q_s0;
  });
}

fairpc_status fairpc_check_file(const char* path, double tolerance, int* passed,
                                char** report_json) {
  return guarded([&] {
    require(path, "path");
    require(passed, "passed");
    *passed = 0;
    fairpc::CircuitText text = fairpc::read_circuit_file(path);
    std::optional<fairpc::HeadComment> head;
    for (const auto& c : text.comments) {
      if (c.rfind("fair-head", 0) == 0) head = fairpc::parse_head_comment(c);
    }

    std::optional<fairpc::FairModel> model;
    if (head) model = fairpc::load_model(path);
    const fairpc::Circuit& c = model ? model->circuit : text.circuit;

    ordered_json j;
    j["file"] = path;
    j["kind"] = model ? fairpc::model_kind_name(model->kind) : "circuit";
    j["nodes"] = c.num_nodes();
    j["edges"] = c.num_edges();
    const bool smooth = fairpc::check_smooth(c);
    const bool decomposable = fairpc::check_decomposable(c);
    const fairpc::Determinism det = fairpc::determinism(c);
    j["smooth"] = smooth;
    j["decomposable"] = decomposable;
    j["deterministic"] = determinism_name(det);
    ordered_json issues = ordered_json::array();
    for (const auto& i : fairpc::normalization_issues(c, tolerance)) {
      issues.push_back({{"node", i.node}, {"total", i.total}});
    }
    const bool normalized = issues.empty();
    j["normalization_issues"] = issues;
    bool tied = true;
    if (model) {
      // Against the product form and against the phis the header declares.
      const double res =
          fairpc::tying_residual(*model, std::make_pair(head->head.phi_s, head->head.phi_df));
      j["tying_residual"] = res;
      tied = res <= tolerance;
    } else {
      j["tying_residual"] = nullptr;
    }
    const bool ok = smooth && decomposable && det == fairpc::Determinism::kYes && normalized && tied;
    j["passed"] = ok;
    *passed = ok ? 1 : 0;
    if (report_json) *report_json = dup_string(j.dump());
  });
}

}  // extern "C"
