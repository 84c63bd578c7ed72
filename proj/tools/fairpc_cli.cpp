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


// fairpc command-line tool. Talks to the library only through fairpc.h.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fairpc/fairpc.h"
#include "json.hpp"

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int exit_code;
};

void check(fairpc_status s, const std::string& what) {
  if (s == FAIRPC_OK) return;
  std::cerr << "fairpc: " << what << ": " << fairpc_last_error() << " (" << fairpc_status_name(s)
            << ")\n";
  throw Failure{s == FAIRPC_E_USAGE ? kExitUsage : kExitRuntime};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  fairpc_string_free(s);
  return out;
}

struct Table {
  fairpc_table* p = nullptr;
  Table() = default;
  Table(const Table&) = delete;
  Table& operator=(const Table&) = delete;
  ~Table() { fairpc_table_free(p); }
};

struct Model {
  fairpc_model* p = nullptr;
  Model() = default;
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  ~Model() { fairpc_model_free(p); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text << '\n';
  if (!out) {
    std::cerr << "fairpc: cannot write '" << path << "'\n";
    throw Failure{kExitRuntime};
  }
}

void load_table(const std::string& csv, const std::string& schema, Table& t) {
  check(fairpc_table_load(csv.c_str(), schema.empty() ? nullptr : schema.c_str(), &t.p),
        "loading " + csv);
}

struct SynthArgs {
  fairpc_synth_config c{};
  std::string out;
  std::vector<double> d_mech;
  bool allow_any = false;
};

struct LearnArgs {
  fairpc_learn_config c{};
  std::string model = "fairpc", init = "prior";
  std::string train, schema, out, trace;
  double mcar = 0.0;
  bool shared = false;
};

struct EvalArgs {
  std::string model_file, test, schema, truth = "df", report;
  int fold = 0;
};

struct PredictArgs {
  std::string model_file, test, schema, out;
};

struct CheckArgs {
  std::string model_file;
  double tolerance = 1e-9;
};

int run_synth(SynthArgs& a) {
  if (!a.d_mech.empty()) {
    if (a.d_mech.size() != 4) {
      std::cerr << "fairpc: --d-mech takes four values\n";
      return kExitUsage;
    }
    for (int i = 0; i < 4; ++i) a.c.d_mech[i] = a.d_mech[i];
  }
  a.c.allow_any_features = a.allow_any ? 1 : 0;
  check(fairpc_synth(&a.c, a.out.c_str()), "synth");
  std::cout << "wrote train.csv, test.csv, schema.json, true_circuit.pc to " << a.out << '\n';
  return 0;
}

int run_learn(LearnArgs& a) {
  a.c.model = a.model.c_str();
  a.c.init = a.init.c_str();
  a.c.shared_structure = a.shared ? 1 : 0;
  Table train;
  load_table(a.train, a.schema, train);
  if (a.mcar > 0.0) {
    Table corrupted;
    check(fairpc_table_mcar(train.p, a.mcar, a.c.seed, &corrupted.p), "mcar");
    std::swap(train.p, corrupted.p);
  }
  Model m;
  check(fairpc_learn(train.p, &a.c, &m.p), "learn");
  check(fairpc_model_save(m.p, a.out.c_str()), "saving model");
  char* trace = nullptr;
  check(fairpc_model_trace_json(m.p, &trace), "trace");
  const std::string tj = take(trace);
  if (!a.trace.empty()) write_text(a.trace, tj);
  double phi_s = 0, phi_df = 0, dm[4] = {0, 0, 0, 0};
  check(fairpc_model_head(m.p, &phi_s, &phi_df, dm), "head");
  const auto j = nlohmann::json::parse(tj);
  std::cout << fairpc_model_kind(m.p) << ": " << j["iterations"].get<int>() << " EM iterations, phi_s="
            << phi_s << " phi_df=" << phi_df << " d_mech=" << dm[0] << ',' << dm[1] << ',' << dm[2]
            << ',' << dm[3] << '\n';
  return 0;
}

int run_eval(const EvalArgs& a) {
  Model m;
  check(fairpc_model_load(a.model_file.c_str(), &m.p), "loading model");
  Table test;
  load_table(a.test, a.schema, test);
  nlohmann::ordered_json cfg;
  cfg["model_file"] = a.model_file;
  cfg["test"] = a.test;
  char* report = nullptr;
  check(fairpc_evaluate(m.p, test.p, a.truth.c_str(), a.fold, cfg.dump().c_str(), &report),
        "eval");
  const std::string line = take(report);
  if (a.report.empty()) {
    std::cout << line << '\n';
  } else {
    check(fairpc_append_line(a.report.c_str(), line.c_str()), "writing report");
  }
  return 0;
}

int run_predict(const PredictArgs& a) {
  Model m;
  check(fairpc_model_load(a.model_file.c_str(), &m.p), "loading model");
  Table test;
  load_table(a.test, a.schema, test);
  std::vector<double> p(fairpc_table_num_rows(test.p));
  check(fairpc_predict(m.p, test.p, p.data()), "predict");
  std::ofstream file;
  if (!a.out.empty()) file.open(a.out);
  std::ostream& out = a.out.empty() ? std::cout : file;
  out << "probability,label\n";
  char buf[64];
  for (double v : p) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf << ',' << (v >= 0.5 ? 1 : 0) << '\n';
  }
  if (!out) {
    std::cerr << "fairpc: cannot write predictions\n";
    return kExitRuntime;
  }
  return 0;
}

int run_check(const CheckArgs& a) {
  int passed = 0;
  char* report = nullptr;
  check(fairpc_check_file(a.model_file.c_str(), a.tolerance, &passed, &report), "check");
  std::cout << take(report) << '\n';
  if (!passed) std::cerr << "fairpc: structural audit failed\n";
  return passed ? 0 : kExitRuntime;
}

int run_motivation() {
  double v[4];
  check(fairpc_motivation(v), "motivation");
  nlohmann::ordered_json j;
  j["data_s1"] = v[0];
  j["data_s0"] = v[1];
  j["q_s1"] = v[2];
  j["q_s0"] = v[3];
  std::cout << j.dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairpc: fair probabilistic circuits"};
  app.require_subcommand(1);
  unsigned threads = 0;
  app.add_option("--threads", threads, "Worker threads for row-parallel work (0 = all)");
  app.set_version_flag("--version", fairpc_version());

  SynthArgs sa;
  fairpc_synth_config_default(&sa.c);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic fair dataset");
  synth->add_option("--features", sa.c.n_features, "Number of binary features (10..30)");
  synth->add_option("--samples", sa.c.n_samples, "Training rows");
  synth->add_option("--test-samples", sa.c.n_test, "Test rows (0 = same as --samples)");
  synth->add_option("--seed", sa.c.seed, "Random seed");
  synth->add_option("--phi-s", sa.c.phi_s, "Pr(S=1)");
  synth->add_option("--phi-df", sa.c.phi_df, "Pr(Df=1)");
  synth->add_option("--d-mech", sa.d_mech, "Pr(D=1|Df,S) for (1,1) (1,0) (0,1) (0,0)")
      ->expected(4)
      ->delimiter(',');
  synth->add_flag("--allow-any", sa.allow_any, "Allow any feature count");
  synth->add_option("--out", sa.out, "Output directory")->required();

  LearnArgs la;
  fairpc_learn_config_default(&la.c);
  auto* learn = app.add_subcommand("learn", "Learn a model from training data");
  learn->add_option("--model", la.model, "fairpc, nlatpc, 2nb or latnb")
      ->check(CLI::IsMember({"fairpc", "nlatpc", "2nb", "latnb"}, CLI::ignore_case));
  learn->add_option("--train", la.train, "Training CSV")->required();
  learn->add_option("--schema", la.schema, "Schema JSON (inferred when omitted)");
  learn->add_option("--init", la.init, "prior or random")
      ->check(CLI::IsMember({"prior", "random"}, CLI::ignore_case));
  learn->add_option("--max-iter", la.c.max_iterations, "EM iteration cap");
  learn->add_option("--tol", la.c.ll_tolerance, "EM relative log-likelihood tolerance");
  learn->add_option("--alpha", la.c.laplace_alpha, "Laplace smoothing pseudo-count");
  learn->add_option("--seed", la.c.seed, "Random seed");
  learn->add_option("--max-splits", la.c.max_splits, "Structure search split budget");
  learn->add_option("--validation-fraction", la.c.validation_fraction,
                    "Rows held out for structure search");
  learn->add_option("--patience", la.c.patience, "Non-improving splits before stopping");
  learn->add_option("--prior-epsilon", la.c.prior_epsilon, "Prior init: Pr(D != Df)");
  learn->add_flag("--shared-structure", la.shared, "One feature structure for all contexts");
  learn->add_option("--mcar", la.mcar, "Erase feature cells at this rate before learning");
  learn->add_option("--out", la.out, "Model file to write")->required();
  learn->add_option("--trace", la.trace, "Trace JSON file to write");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Score a model on a test set");
  eval->add_option("--model-file", ea.model_file, "Model file")->required();
  eval->add_option("--test", ea.test, "Test CSV")->required();
  eval->add_option("--schema", ea.schema, "Schema JSON");
  eval->add_option("--truth-col", ea.truth, "Ground-truth column: df, d or a column name");
  eval->add_option("--fold", ea.fold, "Fold index stored in the report");
  eval->add_option("--report", ea.report, "JSON-lines report to append to (stdout if omitted)");

  PredictArgs pa;
  auto* predict = app.add_subcommand("predict", "Per-row fair-decision probabilities");
  predict->add_option("--model-file", pa.model_file, "Model file")->required();
  predict->add_option("--test", pa.test, "Input CSV")->required();
  predict->add_option("--schema", pa.schema, "Schema JSON");
  predict->add_option("--out", pa.out, "Output CSV (stdout if omitted)");

  CheckArgs ca;
  auto* audit = app.add_subcommand("check", "Structural audit of a circuit or model file");
  audit->add_option("--model-file", ca.model_file, "Circuit or model file")->required();
  audit->add_option("--tolerance", ca.tolerance, "Normalization and tying tolerance");

  auto* motivation = app.add_subcommand("motivation", "Reproduce the two-group motivation example");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  fairpc_set_num_threads(threads);
  try {
    if (synth->parsed()) return run_synth(sa);
    if (learn->parsed()) return run_learn(la);
    if (eval->parsed()) return run_eval(ea);
    if (predict->parsed()) return run_predict(pa);
    if (audit->parsed()) return run_check(ca);
    if (motivation->parsed()) return run_motivation();
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return kExitUsage;
}
