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

#include "fairpc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "fairpc/error.hpp"
#include "fairpc/random.hpp"
#include "json.hpp"

namespace fairpc {

namespace {

constexpr const char* kOther = "__other__";

bool is_missing_token(std::string_view s) { return s.empty() || s == "?"; }

std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

// Minimal RFC 4180 field splitter: commas, double-quoted fields, "" escapes.
std::vector<std::string> split_csv_line(const std::string& line, std::size_t line_no) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": unterminated quote");
  out.push_back(std::move(cur));
  return out;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

std::string edge_label(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

}  // namespace

const char* role_name(Role r) {
  switch (r) {
    case Role::kFeature: return "feature";
    case Role::kSensitive: return "sensitive";
    case Role::kLabel: return "label";
    case Role::kLatent: return "latent";
  }
  return "feature";
}

Role parse_role(const std::string& s) {
  if (s == "feature") return Role::kFeature;
  if (s == "sensitive") return Role::kSensitive;
  if (s == "label") return Role::kLabel;
  if (s == "latent") return Role::kLatent;
  fail(ErrorCode::kSchema, "unknown role '" + s + "'");
}

// ---------------------------------------------------------------------------
// Schema

int Schema::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

int Schema::role_index(Role r) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i].role == r) return static_cast<int>(i);
  }
  return -1;
}

void Schema::validate() const {
  int sensitive = 0;
  int label = 0;
  std::set<std::string> names;
  for (const auto* list : {&columns, &latent}) {
    for (const auto& c : *list) {
      if (c.name.empty()) fail(ErrorCode::kSchema, "column with empty name");
      if (c.arity < 1) fail(ErrorCode::kSchema, "column '" + c.name + "' has no categories");
      if (!c.vocabulary.empty() && static_cast<int>(c.vocabulary.size()) != c.arity) {
        fail(ErrorCode::kSchema, "column '" + c.name + "' vocabulary does not match arity");
      }
    }
  }
  for (const auto& c : columns) {
    if (!names.insert(c.name).second) fail(ErrorCode::kSchema, "duplicate column '" + c.name + "'");
  }
  for (const auto& c : latent) {
    // A latent variable may be carried as a column (e.g. ground truth in a
    // synthetic test split) only with the latent role.
    const int i = index_of(c.name);
    if (i >= 0 && columns[i].role != Role::kLatent) {
      fail(ErrorCode::kSchema, "latent variable '" + c.name + "' clashes with a column");
    }
  }
  for (const auto& c : columns) {
    if (c.role == Role::kSensitive) ++sensitive;
    if (c.role == Role::kLabel) ++label;
  }
  if (sensitive > 1) fail(ErrorCode::kSchema, "more than one sensitive column");
  if (label > 1) fail(ErrorCode::kSchema, "more than one label column");
}

namespace {

nlohmann::json column_json(const Column& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["arity"] = c.arity;
  j["role"] = role_name(c.role);
  j["vocabulary"] = c.vocabulary;
  j["bin_edges"] = c.bin_edges;
  return j;
}

Column column_from_json(const nlohmann::json& j) {
  Column c;
  c.name = j.at("name").get<std::string>();
  c.arity = j.at("arity").get<int>();
  c.role = parse_role(j.value("role", std::string("feature")));
  if (j.contains("vocabulary")) c.vocabulary = j["vocabulary"].get<std::vector<std::string>>();
  if (j.contains("bin_edges")) c.bin_edges = j["bin_edges"].get<std::vector<double>>();
  return c;
}

}  // namespace

std::string Schema::to_json() const {
  nlohmann::json j;
  j["columns"] = nlohmann::json::array();
  for (const auto& c : columns) j["columns"].push_back(column_json(c));
  j["latent"] = nlohmann::json::array();
  for (const auto& c : latent) j["latent"].push_back(column_json(c));
  return j.dump(2) + "\n";
}

Schema Schema::from_json(const std::string& text) {
  Schema s;
  try {
    auto j = nlohmann::json::parse(text);
    for (const auto& c : j.at("columns")) s.columns.push_back(column_from_json(c));
    if (j.contains("latent")) {
      for (const auto& c : j["latent"]) {
        Column col = column_from_json(c);
        col.role = Role::kLatent;
        s.latent.push_back(std::move(col));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kParse, std::string("schema JSON: ") + e.what());
  }
  s.validate();
  return s;
}

Schema Schema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open schema '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

void Schema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write schema '" + path + "'");
  out << to_json();
}

// ---------------------------------------------------------------------------
// DataTable

DataTable::DataTable(Schema schema) : schema_(std::move(schema)) { schema_.validate(); }

double DataTable::total_weight() const {
  double t = 0.0;
  for (double w : weights_) t += w;
  return t;
}

bool DataTable::complete() const {
  return std::find(cells_.begin(), cells_.end(), kMissing) == cells_.end();
}

void DataTable::add_row(std::span<const int> values, double weight) {
  if (values.size() != num_columns()) {
    fail(ErrorCode::kSchema, "row has " + std::to_string(values.size()) + " cells, expected " +
                                 std::to_string(num_columns()));
  }
  if (!(weight >= 0.0)) fail(ErrorCode::kSchema, "row weight must be nonnegative");
  for (std::size_t c = 0; c < values.size(); ++c) {
    int v = values[c];
    if (v != kMissing && (v < 0 || v >= schema_.columns[c].arity)) {
      fail(ErrorCode::kSchema, "value " + std::to_string(v) + " out of range for column '" +
                                   schema_.columns[c].name + "'");
    }
  }
  cells_.insert(cells_.end(), values.begin(), values.end());
  weights_.push_back(weight);
}

void DataTable::set(std::size_t i, std::size_t col, int value) {
  if (value != kMissing && (value < 0 || value >= schema_.columns[col].arity)) {
    fail(ErrorCode::kSchema, "value out of range for column '" + schema_.columns[col].name + "'");
  }
  cells_[i * num_columns() + col] = value;
}

void DataTable::set_weight(std::size_t i, double w) {
  if (!(w >= 0.0)) fail(ErrorCode::kSchema, "row weight must be nonnegative");
  weights_[i] = w;
}

DataTable DataTable::subset(std::span<const std::size_t> rows) const {
  DataTable out(schema_);
  out.cells_.reserve(rows.size() * num_columns());
  out.weights_.reserve(rows.size());
  for (std::size_t r : rows) {
    auto src = row(r);
    out.cells_.insert(out.cells_.end(), src.begin(), src.end());
    out.weights_.push_back(weights_[r]);
  }
  return out;
}

DataTable DataTable::select(const std::vector<std::string>& names) const {
  Schema s;
  s.latent = schema_.latent;
  std::vector<int> idx;
  for (const auto& n : names) {
    int i = schema_.index_of(n);
    if (i < 0) fail(ErrorCode::kSchema, "no column named '" + n + "'");
    idx.push_back(i);
    s.columns.push_back(schema_.columns[i]);
  }
  DataTable out(std::move(s));
  out.weights_ = weights_;
  out.cells_.reserve(num_rows() * idx.size());
  for (std::size_t r = 0; r < num_rows(); ++r) {
    for (int i : idx) out.cells_.push_back(at(r, i));
  }
  return out;
}

DataTable DataTable::drop(const std::string& name) const {
  std::vector<std::string> keep;
  for (const auto& c : schema_.columns) {
    if (c.name != name) keep.push_back(c.name);
  }
  return select(keep);
}

DataTable DataTable::compress() const {
  DataTable out(schema_);
  std::map<std::vector<int>, std::size_t> seen;
  std::vector<int> key(num_columns());
  for (std::size_t r = 0; r < num_rows(); ++r) {
    auto src = row(r);
    key.assign(src.begin(), src.end());
    auto [it, inserted] = seen.emplace(key, out.num_rows());
    if (inserted) {
      out.cells_.insert(out.cells_.end(), src.begin(), src.end());
      out.weights_.push_back(weights_[r]);
    } else {
      out.weights_[it->second] += weights_[r];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

DataTable parse_csv(const std::string& text, const std::optional<Schema>& schema,
                    const CsvOptions& opts) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) {
      header = split_csv_line(line, line_no);
      break;
    }
  }
  if (header.empty()) fail(ErrorCode::kParse, "line 1: missing CSV header");

  int weight_col = -1;
  std::vector<int> data_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (!opts.weight_column.empty() && header[i] == opts.weight_column) {
      weight_col = static_cast<int>(i);
    } else {
      data_cols.push_back(static_cast<int>(i));
    }
  }

  std::vector<std::vector<std::string>> raw;
  std::vector<std::size_t> raw_line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      fail(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    raw.push_back(std::move(fields));
    raw_line.push_back(line_no);
  }

  std::vector<double> weights(raw.size(), 1.0);
  if (weight_col >= 0) {
    for (std::size_t r = 0; r < raw.size(); ++r) {
      auto w = parse_number(raw[r][weight_col]);
      if (!w || *w < 0) {
        fail(ErrorCode::kParse, "line " + std::to_string(raw_line[r]) + ": invalid row weight");
      }
      weights[r] = *w;
    }
  }

  Schema s;
  // table column -> csv field index
  std::vector<int> field_of;
  if (schema) {
    s = *schema;
    std::map<std::string, int> by_name;
    for (int i : data_cols) by_name[header[i]] = i;
    for (const auto& c : s.columns) {
      auto it = by_name.find(c.name);
      if (it == by_name.end()) fail(ErrorCode::kSchema, "CSV lacks column '" + c.name + "'");
      field_of.push_back(it->second);
      by_name.erase(it);
    }
    // Latent variables present in the file (e.g. ground-truth labels of a
    // synthetic test split) are carried as extra columns.
    for (const auto& lat : s.latent) {
      auto it = by_name.find(lat.name);
      if (it == by_name.end()) continue;
      s.columns.push_back(lat);
      field_of.push_back(it->second);
      by_name.erase(it);
    }
    if (!by_name.empty()) {
      fail(ErrorCode::kSchema, "CSV column '" + by_name.begin()->first + "' is not in the schema");
    }
  } else {
    for (int i : data_cols) {
      Column c;
      c.name = header[i];
      std::vector<std::string> vocab;
      std::unordered_map<std::string, int> counts;
      bool numeric = true;
      for (const auto& fields : raw) {
        const auto& f = fields[i];
        if (is_missing_token(f)) continue;
        if (counts[f]++ == 0) vocab.push_back(f);
        if (!parse_number(f)) numeric = false;
      }
      if (opts.min_category_count > 0 && !numeric) {
        std::vector<std::string> rare;
        bool any_frequent = false;
        for (const auto& v : vocab) {
          if (counts[v] < opts.min_category_count) {
            rare.push_back(v);
          } else {
            any_frequent = true;
          }
        }
        if (rare.size() >= 2 && any_frequent) {
          std::vector<std::string> merged;
          bool other_added = false;
          for (const auto& v : vocab) {
            if (counts[v] >= opts.min_category_count) {
              merged.push_back(v);
            } else if (!other_added) {
              merged.push_back(kOther);
              other_added = true;
            }
          }
          vocab = std::move(merged);
        }
      }
      c.arity = static_cast<int>(vocab.size());
      c.vocabulary = std::move(vocab);
      s.columns.push_back(std::move(c));
      field_of.push_back(i);
    }
  }

  // Category lookup per column.
  std::vector<std::unordered_map<std::string, int>> lookup(s.columns.size());
  for (std::size_t c = 0; c < s.columns.size(); ++c) {
    const auto& col = s.columns[c];
    for (std::size_t v = 0; v < col.vocabulary.size(); ++v) lookup[c][col.vocabulary[v]] = int(v);
  }

  DataTable t(s);
  std::vector<int> values(s.columns.size());
  for (std::size_t r = 0; r < raw.size(); ++r) {
    for (std::size_t c = 0; c < s.columns.size(); ++c) {
      const auto& f = raw[r][field_of[c]];
      if (is_missing_token(f)) {
        values[c] = kMissing;
        continue;
      }
      const auto& col = s.columns[c];
      auto it = lookup[c].find(f);
      if (it != lookup[c].end()) {
        values[c] = it->second;
      } else if (!schema && lookup[c].count(kOther)) {
        values[c] = lookup[c][kOther];
      } else if (col.vocabulary.empty()) {
        int v = -1;
        auto res = std::from_chars(f.data(), f.data() + f.size(), v);
        if (res.ec != std::errc() || res.ptr != f.data() + f.size() || v < 0 || v >= col.arity) {
          fail(ErrorCode::kVocabulary, "line " + std::to_string(raw_line[r]) + ", column '" +
                                           col.name + "': unknown category '" + f + "'");
        }
        values[c] = v;
      } else {
        fail(ErrorCode::kVocabulary, "line " + std::to_string(raw_line[r]) + ", column '" +
                                         col.name + "': unknown category '" + f + "'");
      }
    }
    t.add_row(values, weights[r]);
  }
  return t;
}

DataTable load_csv(const std::string& path, const std::optional<Schema>& schema,
                   const CsvOptions& opts) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open CSV '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), schema, opts);
}

std::string to_csv(const DataTable& t) {
  std::ostringstream out;
  const auto& cols = t.schema().columns;
  bool weighted = false;
  for (double w : t.weights()) {
    if (w != 1.0) weighted = true;
  }
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c) out << ',';
    out << csv_escape(cols[c].name);
  }
  if (weighted) out << (cols.empty() ? "" : ",") << CsvOptions{}.weight_column;
  out << '\n';
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    for (std::size_t c = 0; c < cols.size(); ++c) {
      if (c) out << ',';
      int v = t.at(r, c);
      if (v == kMissing) {
        out << '?';
      } else if (!cols[c].vocabulary.empty()) {
        out << csv_escape(cols[c].vocabulary[v]);
      } else {
        out << v;
      }
    }
    if (weighted) out << (cols.empty() ? "" : ",") << edge_label(t.weight(r));
    out << '\n';
  }
  return out.str();
}

void save_csv(const std::string& path, const DataTable& t) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write CSV '" + path + "'");
  out << to_csv(t);
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Discretization

DataTable discretize(const DataTable& t, const std::string& column, const Binning& b) {
  const int col = t.schema().index_of(column);
  if (col < 0) fail(ErrorCode::kSchema, "no column named '" + column + "'");
  const Column& src = t.schema().columns[col];

  std::vector<double> value_of(src.arity);
  for (int v = 0; v < src.arity; ++v) {
    std::string label = src.vocabulary.empty() ? std::to_string(v) : src.vocabulary[v];
    auto num = parse_number(label);
    if (!num) fail(ErrorCode::kBinning, "column '" + column + "' value '" + label + "' is not numeric");
    value_of[v] = *num;
  }

  std::vector<double> edges;
  if (b.kind == Binning::Kind::kThresholds) {
    edges = b.thresholds;
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    if (edges.empty()) fail(ErrorCode::kBinning, "threshold list is empty");
  } else {
    std::vector<double> observed;
    for (std::size_t r = 0; r < t.num_rows(); ++r) {
      int v = t.at(r, col);
      if (v != kMissing) observed.push_back(value_of[v]);
    }
    std::sort(observed.begin(), observed.end());
    std::size_t distinct =
        observed.empty() ? 0 : 1 + std::count_if(observed.begin() + 1, observed.end(),
                                                 [&, i = std::size_t{0}](double x) mutable {
                                                   return x != observed[i++];
                                                 });
    if (b.bins < 2 || static_cast<std::size_t>(b.bins) > distinct) {
      fail(ErrorCode::kBinning, "cannot form " + std::to_string(b.bins) + " bins from " +
                                    std::to_string(distinct) + " distinct values in '" + column + "'");
    }
    const std::size_t n = observed.size();
    for (int i = 1; i < b.bins; ++i) {
      double e = observed[static_cast<std::size_t>(i) * n / b.bins];
      if (e > observed.front() && (edges.empty() || e > edges.back())) edges.push_back(e);
    }
    if (edges.empty()) fail(ErrorCode::kBinning, "degenerate quantiles in '" + column + "'");
  }

  Schema s = t.schema();
  Column& dst = s.columns[col];
  dst.arity = static_cast<int>(edges.size()) + 1;
  dst.bin_edges = edges;
  dst.vocabulary.clear();
  dst.vocabulary.push_back("<" + edge_label(edges.front()));
  for (std::size_t i = 1; i < edges.size(); ++i) {
    dst.vocabulary.push_back("[" + edge_label(edges[i - 1]) + "," + edge_label(edges[i]) + ")");
  }
  dst.vocabulary.push_back(">=" + edge_label(edges.back()));

  DataTable out(s);
  std::vector<int> row(t.num_columns());
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    auto in_row = t.row(r);
    row.assign(in_row.begin(), in_row.end());
    if (row[col] != kMissing) {
      double x = value_of[row[col]];
      row[col] = static_cast<int>(std::upper_bound(edges.begin(), edges.end(), x) - edges.begin());
    }
    out.add_row(row, t.weight(r));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Resampling

std::pair<DataTable, DataTable> train_test_split(const DataTable& t, double test_fraction,
                                                 std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kUsage, "test fraction must be in (0, 1)");
  }
  const std::size_t n = t.num_rows();
  auto perm = permutation(n, seed);
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  std::vector<std::size_t> test(perm.begin(), perm.begin() + n_test);
  std::vector<std::size_t> train(perm.begin() + n_test, perm.end());
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {t.subset(train), t.subset(test)};
}

std::vector<std::pair<DataTable, DataTable>> kfold(const DataTable& t, int k, std::uint64_t seed) {
  const std::size_t n = t.num_rows();
  if (k < 2) fail(ErrorCode::kFold, "k must be at least 2");
  if (static_cast<std::size_t>(k) > n) {
    fail(ErrorCode::kFold, "k = " + std::to_string(k) + " exceeds row count " + std::to_string(n));
  }
  auto perm = permutation(n, seed);
  std::vector<std::pair<DataTable, DataTable>> folds;
  std::size_t begin = 0;
  for (int f = 0; f < k; ++f) {
    std::size_t size = n / k + (static_cast<std::size_t>(f) < n % k ? 1 : 0);
    std::vector<std::size_t> test(perm.begin() + begin, perm.begin() + begin + size);
    std::vector<std::size_t> train;
    train.reserve(n - size);
    train.insert(train.end(), perm.begin(), perm.begin() + begin);
    train.insert(train.end(), perm.begin() + begin + size, perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    folds.emplace_back(t.subset(train), t.subset(test));
    begin += size;
  }
  return folds;
}

DataTable mcar_corrupt(const DataTable& t, double missing_fraction, std::uint64_t seed,
                       const std::set<std::string>& protected_columns) {
  if (!(missing_fraction >= 0.0 && missing_fraction < 1.0)) {
    fail(ErrorCode::kUsage, "missing fraction must be in [0, 1)");
  }
  DataTable out = t;
  if (missing_fraction == 0.0) return out;
  std::vector<char> is_protected(t.num_columns(), 0);
  for (std::size_t c = 0; c < t.num_columns(); ++c) {
    is_protected[c] = protected_columns.count(t.schema().columns[c].name) ? 1 : 0;
  }
  Rng rng = make_rng(seed, 0x3c4a);
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    for (std::size_t c = 0; c < t.num_columns(); ++c) {
      if (is_protected[c] || t.at(r, c) == kMissing) continue;
      if (uniform01(rng) < missing_fraction) out.set(r, c, kMissing);
    }
  }
  return out;
}

std::vector<Variable> to_variables(const Schema& s, bool include_latent) {
  std::vector<Variable> vars;
  for (const auto& c : s.columns) {
    vars.push_back({static_cast<int>(vars.size()), c.arity, c.name});
  }
  if (include_latent) {
    for (const auto& c : s.latent) {
      if (s.index_of(c.name) >= 0) continue;
      vars.push_back({static_cast<int>(vars.size()), c.arity, c.name});
    }
  }
  return vars;
}

DataTable align(const DataTable& t, const std::vector<Variable>& vars,
                const std::set<std::string>& hidden) {
  std::vector<int> src(vars.size(), -1);
  std::map<std::string, int> var_index;
  for (const auto& v : vars) var_index[v.name] = v.id;
  for (std::size_t c = 0; c < t.num_columns(); ++c) {
    const auto& col = t.schema().columns[c];
    if (hidden.count(col.name)) continue;
    auto it = var_index.find(col.name);
    if (it == var_index.end()) {
      fail(ErrorCode::kSchema, "table column '" + col.name + "' is not a circuit variable");
    }
    if (vars[it->second].arity != col.arity) {
      fail(ErrorCode::kSchema, "column '" + col.name + "' has arity " + std::to_string(col.arity) +
                                   ", circuit expects " + std::to_string(vars[it->second].arity));
    }
    src[it->second] = static_cast<int>(c);
  }
  Schema s;
  for (const auto& v : vars) {
    Column col;
    col.name = v.name;
    col.arity = v.arity;
    if (src[v.id] >= 0) {
      col = t.schema().columns[src[v.id]];
    } else {
      col.role = Role::kLatent;
    }
    s.columns.push_back(std::move(col));
  }
  // Roles are informational here; drop duplicates the validator would reject.
  bool seen_s = false, seen_l = false;
  for (auto& c : s.columns) {
    if (c.role == Role::kSensitive) {
      if (seen_s) c.role = Role::kFeature;
      seen_s = true;
    }
    if (c.role == Role::kLabel) {
      if (seen_l) c.role = Role::kFeature;
      seen_l = true;
    }
  }
  DataTable out(std::move(s));
  std::vector<int> row(vars.size());
  for (std::size_t r = 0; r < t.num_rows(); ++r) {
    for (std::size_t v = 0; v < vars.size(); ++v) row[v] = src[v] >= 0 ? t.at(r, src[v]) : kMissing;
    out.add_row(row, t.weight(r));
  }
  return out;
}

}  // namespace fairpc
