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

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string_view>

#include "fairpc/circuit.hpp"
#include "fairpc/error.hpp"

namespace fairpc {

namespace {

constexpr std::string_view kHeader = "fairpc-circuit v1";

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class LineParser {
 public:
  explicit LineParser(std::size_t line) : line_(line) {}

  [[noreturn]] void error(const std::string& msg) const {
    fail(ErrorCode::kParse, "line " + std::to_string(line_) + ": " + msg);
  }

  int to_int(std::string_view s) const {
    int v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      error("expected integer, got '" + std::string(s) + "'");
    }
    return v;
  }

  double to_double(std::string_view s) const {
    double v = 0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
      error("expected number, got '" + std::string(s) + "'");
    }
    return v;
  }

 private:
  std::size_t line_;
};

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

CircuitText read_circuit(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  CircuitText result;
  std::vector<Variable> vars;
  std::optional<CircuitBuilder> builder;
  int root = -1;
  bool header_seen = false;

  auto ensure_builder = [&](const LineParser& p) -> CircuitBuilder& {
    if (!builder) {
      if (vars.empty()) p.error("node defined before any variable");
      try {
        builder.emplace(vars);
      } catch (const Error& e) {
        p.error(e.what());
      }
    }
    return *builder;
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    LineParser p(line_no);
    std::string_view sv(line);
    if (sv.empty()) continue;
    if (sv.front() == '#') {
      sv.remove_prefix(1);
      if (!sv.empty() && sv.front() == ' ') sv.remove_prefix(1);
      result.comments.emplace_back(sv);
      continue;
    }
    auto tok = split_ws(sv);
    if (tok.empty()) continue;
    if (!header_seen) {
      if (sv != kHeader) p.error("missing 'fairpc-circuit v1' header");
      header_seen = true;
      continue;
    }
    try {
      if (tok[0] == "var") {
        if (builder) p.error("variable declared after nodes");
        if (tok.size() != 4) p.error("expected 'var <id> <arity> <name>'");
        Variable v{p.to_int(tok[1]), p.to_int(tok[2]), std::string(tok[3])};
        if (v.id != static_cast<int>(vars.size())) p.error("variable ids must be contiguous");
        if (v.arity < 2) p.error("arity must be at least 2");
        vars.push_back(std::move(v));
      } else if (tok[0] == "L" || tok[0] == "P" || tok[0] == "S") {
        CircuitBuilder& b = ensure_builder(p);
        if (tok.size() < 2) p.error("missing node id");
        const int id = p.to_int(tok[1]);
        if (id != b.num_nodes()) p.error("node ids must be ascending and contiguous");
        auto child_id = [&](std::string_view s) {
          int c = p.to_int(s);
          if (c < 0 || c >= id) p.error("child " + std::string(s) + " is not defined before its parent");
          return c;
        };
        if (tok[0] == "L") {
          if (tok.size() < 5) p.error("leaf line too short");
          const int var = p.to_int(tok[3]);
          if (var < 0 || var >= static_cast<int>(vars.size())) p.error("unknown variable");
          if (tok[2] == "I") {
            if (tok.size() != 5) p.error("expected 'L <id> I <var> <value>'");
            b.indicator(var, p.to_int(tok[4]));
          } else if (tok[2] == "C") {
            std::vector<double> pmf;
            for (std::size_t i = 4; i < tok.size(); ++i) pmf.push_back(p.to_double(tok[i]));
            if (static_cast<int>(pmf.size()) != vars[var].arity) {
              p.error("categorical leaf needs one probability per value");
            }
            double total = 0.0;
            for (double q : pmf) total += q;
            if (std::abs(total - 1.0) > 1e-9) p.error("categorical probabilities do not sum to 1");
            b.categorical(var, std::move(pmf));
          } else {
            p.error("leaf kind must be I or C");
          }
        } else if (tok[0] == "P") {
          std::vector<int> ch;
          for (std::size_t i = 2; i < tok.size(); ++i) ch.push_back(child_id(tok[i]));
          b.product(std::move(ch));
        } else {
          std::vector<int> ch;
          std::vector<double> lw;
          for (std::size_t i = 2; i < tok.size(); ++i) {
            auto colon = tok[i].find(':');
            if (colon == std::string_view::npos) p.error("expected <child>:<logweight>");
            ch.push_back(child_id(tok[i].substr(0, colon)));
            lw.push_back(p.to_double(tok[i].substr(colon + 1)));
          }
          b.sum_log(std::move(ch), std::move(lw));
        }
      } else if (tok[0] == "root") {
        if (tok.size() != 2) p.error("expected 'root <id>'");
        root = p.to_int(tok[1]);
        if (!builder || root < 0 || root >= builder->num_nodes()) p.error("root is not a defined node");
      } else {
        p.error("unknown record '" + std::string(tok[0]) + "'");
      }
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParse) throw;
      p.error(e.what());
    }
  }
  if (!header_seen) fail(ErrorCode::kParse, "line 1: missing 'fairpc-circuit v1' header");
  if (root < 0) fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": missing root record");
  if (root != builder->num_nodes() - 1) {
    // Nodes not reachable from the root would be dropped by build(); the
    // format requires they not exist so ids survive a round trip.
    fail(ErrorCode::kParse, "root must be the last node");
  }
  result.circuit = builder->build(root);
  if (result.circuit.num_nodes() != builder->num_nodes()) {
    fail(ErrorCode::kParse, "file contains nodes unreachable from the root");
  }
  return result;
}

CircuitText read_circuit_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open circuit file '" + path + "'");
  return read_circuit(in);
}

void write_circuit(std::ostream& out, const Circuit& c, std::span<const std::string> comments) {
  if (c.empty()) fail(ErrorCode::kStructure, "cannot write an empty circuit");
  out << kHeader << '\n';
  for (const auto& v : c.variables()) {
    out << "var " << v.id << ' ' << v.arity << ' ' << v.name << '\n';
  }
  for (int n = 0; n < c.num_nodes(); ++n) {
    switch (c.kind(n)) {
      case NodeKind::kIndicator:
        out << "L " << n << " I " << c.leaf_variable(n) << ' ' << c.indicator_value(n);
        break;
      case NodeKind::kCategorical:
        out << "L " << n << " C " << c.leaf_variable(n);
        for (double p : c.pmf(n)) out << ' ' << format_double(p);
        break;
      case NodeKind::kProduct:
        out << "P " << n;
        for (int ch : c.children(n)) out << ' ' << ch;
        break;
      case NodeKind::kSum: {
        out << "S " << n;
        auto ch = c.children(n);
        auto lw = c.log_weights(n);
        for (std::size_t k = 0; k < ch.size(); ++k) {
          out << ' ' << ch[k] << ':' << format_double(lw[k]);
        }
        break;
      }
    }
    out << '\n';
  }
  out << "root " << c.root() << '\n';
  for (const auto& line : comments) out << "# " << line << '\n';
}

void write_circuit_file(const std::string& path, const Circuit& c,
                        std::span<const std::string> comments) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write circuit file '" + path + "'");
  write_circuit(out, c, comments);
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

}  // namespace fairpc
