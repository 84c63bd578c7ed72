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

#ifndef FAIRPC_DATASET_HPP_
#define FAIRPC_DATASET_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fairpc/circuit.hpp"

namespace fairpc {

enum class Role { kFeature, kSensitive, kLabel, kLatent };

const char* role_name(Role r);
Role parse_role(const std::string& s);

struct Column {
  std::string name;
  int arity = 0;
  Role role = Role::kFeature;
  /// Category labels in index order.
  std::vector<std::string> vocabulary;
  /// Recorded by discretize(): value v maps to the number of edges <= v.
  std::vector<double> bin_edges;
};

/// Ordered columns plus declared latent variables. Latent variables are
/// absent from training files; a column may carry one only with the latent
/// role. At most one sensitive and one label column.
struct Schema {
  std::vector<Column> columns;
  std::vector<Column> latent;

  int index_of(const std::string& name) const;  // -1 when absent
  int role_index(Role r) const;                 // first column with role, or -1
  void validate() const;

  std::string to_json() const;
  static Schema from_json(const std::string& text);
  static Schema load(const std::string& path);
  void save(const std::string& path) const;
};

/// Row-major categorical cells (kMissing for unobserved) with real row
/// weights. Immutable by convention once handed to learners.
class DataTable {
 public:
  DataTable() = default;
  explicit DataTable(Schema schema);

  const Schema& schema() const { return schema_; }
  std::size_t num_rows() const { return weights_.size(); }
  std::size_t num_columns() const { return schema_.columns.size(); }

  std::span<const int> row(std::size_t i) const {
    return {cells_.data() + i * num_columns(), num_columns()};
  }
  int at(std::size_t i, std::size_t col) const { return cells_[i * num_columns() + col]; }
  double weight(std::size_t i) const { return weights_[i]; }
  const std::vector<double>& weights() const { return weights_; }
  double total_weight() const;
  bool complete() const;

  void add_row(std::span<const int> values, double weight = 1.0);
  void set(std::size_t i, std::size_t col, int value);
  void set_weight(std::size_t i, double w);

  /// Rows by index, weights preserved.
  DataTable subset(std::span<const std::size_t> rows) const;
  /// Keeps the named columns in the given order.
  DataTable select(const std::vector<std::string>& names) const;
  DataTable drop(const std::string& name) const;
  /// Merges identical rows, summing weights; first-seen order.
  DataTable compress() const;

  friend bool operator==(const DataTable& a, const DataTable& b) {
    return a.cells_ == b.cells_ && a.weights_ == b.weights_;
  }

 private:
  Schema schema_;
  std::vector<int> cells_;
  std::vector<double> weights_;
};

struct CsvOptions {
  /// Categories rarer than this merge into `__other__` on schema inference.
  /// Only applied to non-numeric columns with at least two rare categories
  /// and one frequent one. 0 disables.
  int min_category_count = 10;
  /// Column name holding row weights, if present in the header.
  std::string weight_column = "__weight__";
};

/// Header row required; `?` or empty cell is missing. With a schema,
/// columns are mapped by header name and unknown categories are an error.
DataTable load_csv(const std::string& path, const std::optional<Schema>& schema,
                   const CsvOptions& opts = {});
DataTable parse_csv(const std::string& text, const std::optional<Schema>& schema,
                    const CsvOptions& opts = {});
std::string to_csv(const DataTable& t);
void save_csv(const std::string& path, const DataTable& t);

struct Binning {
  enum class Kind { kEqualFrequency, kThresholds } kind = Kind::kEqualFrequency;
  int bins = 2;
  std::vector<double> thresholds;

  static Binning equal_frequency(int k) { return {Kind::kEqualFrequency, k, {}}; }
  static Binning threshold_list(std::vector<double> t) {
    return {Kind::kThresholds, 0, std::move(t)};
  }
};

/// Replaces a numeric column's categories by bin indices. The column's
/// vocabulary must parse as numbers; edges are recorded in the schema.
DataTable discretize(const DataTable& t, const std::string& column, const Binning& b);

std::pair<DataTable, DataTable> train_test_split(const DataTable& t, double test_fraction,
                                                 std::uint64_t seed);
std::vector<std::pair<DataTable, DataTable>> kfold(const DataTable& t, int k,
                                                   std::uint64_t seed);

/// Erases each observed cell outside `protected_columns` independently with
/// probability missing_fraction.
DataTable mcar_corrupt(const DataTable& t, double missing_fraction, std::uint64_t seed,
                       const std::set<std::string>& protected_columns);

/// Circuit variables corresponding to the schema columns (plus latent
/// declarations when include_latent).
std::vector<Variable> to_variables(const Schema& s, bool include_latent);

/// Re-indexes a table into a circuit's variable order, matching by name.
/// Circuit variables absent from the table (or listed in `hidden`) are
/// filled with kMissing; table columns the circuit lacks, or arity
/// mismatches, are a schema error.
DataTable align(const DataTable& t, const std::vector<Variable>& vars,
                const std::set<std::string>& hidden = {});

}  // namespace fairpc

#endif  // FAIRPC_DATASET_HPP_
