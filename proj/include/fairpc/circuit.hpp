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

#ifndef FAIRPC_CIRCUIT_HPP_
#define FAIRPC_CIRCUIT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace fairpc {

/// Cell value marking an unobserved variable in an assignment.
inline constexpr int kMissing = -1;

/// One value per circuit variable, indexed by variable id; kMissing marks
/// unobserved variables. A complete assignment has no kMissing entries over
/// the circuit's scope.
using Assignment = std::vector<int>;

struct Variable {
  int id = 0;
  int arity = 2;
  std::string name;
};

enum class NodeKind : std::uint8_t { kIndicator, kCategorical, kProduct, kSum };

/// A sum node whose weights are constrained to a product form:
/// weight(ordinal[i * cols + j]) = a[i] * b[j], with a and b distributions.
/// The fair head registers its root this way.
struct TiedProductGroup {
  int node = -1;
  int rows = 0;
  int cols = 0;
  std::vector<int> ordinal;
};

enum class Determinism { kYes, kNo, kUnverifiable };

class CircuitBuilder;

/// Immutable-structure probabilistic circuit. Nodes are stored in one flat
/// topological order (children before parents); edges are addressed by
/// edge_begin(parent) + child ordinal, which is also the index used by flow
/// tables. Sum-edge weights live in log space. Parameters may be rewritten in
/// place; structure changes go through CircuitBuilder.
class Circuit {
 public:
  Circuit() = default;

  const std::vector<Variable>& variables() const { return vars_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_nodes() const { return static_cast<int>(kind_.size()); }
  int root() const { return root_; }
  bool empty() const { return root_ < 0; }

  NodeKind kind(int n) const { return kind_[n]; }
  bool is_leaf(int n) const {
    return kind_[n] == NodeKind::kIndicator || kind_[n] == NodeKind::kCategorical;
  }
  int leaf_variable(int n) const { return var_[n]; }
  int indicator_value(int n) const { return value_[n]; }

  std::span<const int> children(int n) const {
    return {children_.data() + child_begin_[n], child_begin_[n + 1] - child_begin_[n]};
  }
  std::size_t edge_begin(int n) const { return child_begin_[n]; }
  std::size_t num_edges() const { return children_.size(); }
  /// Per-edge log weights of a sum node (zeros for product nodes).
  std::span<const double> log_weights(int n) const {
    return {log_weight_.data() + child_begin_[n], child_begin_[n + 1] - child_begin_[n]};
  }

  std::span<const double> pmf(int n) const {
    return {pmf_.data() + leaf_begin_[n], leaf_begin_[n + 1] - leaf_begin_[n]};
  }
  std::span<const double> log_pmf(int n) const {
    return {log_pmf_.data() + leaf_begin_[n], leaf_begin_[n + 1] - leaf_begin_[n]};
  }
  /// Offset of a categorical leaf's value slots in flow tables.
  std::size_t leaf_begin(int n) const { return leaf_begin_[n]; }
  std::size_t num_leaf_params() const { return pmf_.size(); }

  /// Sorted variable ids the node depends on.
  std::span<const int> scope(int n) const {
    return {scope_vars_.data() + scope_begin_[n], scope_begin_[n + 1] - scope_begin_[n]};
  }
  bool scope_contains(int n, int var) const;

  bool smooth() const { return smooth_; }
  bool decomposable() const { return decomposable_; }

  const std::vector<TiedProductGroup>& tied_groups() const { return tied_; }
  void add_tied_group(TiedProductGroup group);
  void clear_tied_groups() { tied_.clear(); }

  void set_log_weights(int n, std::span<const double> log_weights);
  /// Linear-space weights; stored as logs.
  void set_weights(int n, std::span<const double> weights);
  void set_pmf(int n, std::span<const double> pmf);

 private:
  friend class CircuitBuilder;

  std::vector<Variable> vars_;
  std::vector<NodeKind> kind_;
  std::vector<int> var_;
  std::vector<int> value_;
  std::vector<std::size_t> child_begin_{0};
  std::vector<int> children_;
  std::vector<double> log_weight_;
  std::vector<std::size_t> leaf_begin_{0};
  std::vector<double> pmf_;
  std::vector<double> log_pmf_;
  std::vector<std::size_t> scope_begin_{0};
  std::vector<int> scope_vars_;
  std::vector<TiedProductGroup> tied_;
  int root_ = -1;
  bool smooth_ = true;
  bool decomposable_ = true;
};

/// Mutable graph used to assemble circuits. Node ids are builder-local;
/// build() keeps only nodes reachable from the root, sorts them
/// topologically and renumbers.
class CircuitBuilder {
 public:
  explicit CircuitBuilder(std::vector<Variable> vars);

  const std::vector<Variable>& variables() const { return vars_; }
  int num_nodes() const { return static_cast<int>(nodes_.size()); }

  int indicator(int var, int value);
  /// PMF over the variable's values; must sum to 1 within 1e-9 and is then
  /// renormalized exactly.
  int categorical(int var, std::vector<double> pmf);
  int product(std::vector<int> children);
  /// Linear weights, normalized by their total.
  int sum(std::vector<int> children, std::vector<double> weights);
  /// Log weights taken as given (no normalization).
  int sum_log(std::vector<int> children, std::vector<double> log_weights);

  /// Copies every node of `c` into this builder and returns the id mapping
  /// (old node index -> builder id). var_map, when given, renames variables
  /// (circuit variable id -> builder variable id).
  std::vector<int> import(const Circuit& c, std::span<const int> var_map = {});

  /// Rewrites the children of an existing sum node.
  void replace_children(int sum_node, std::vector<int> children,
                        std::vector<double> log_weights);

  void tie(TiedProductGroup group);

  Circuit build(int root) const;

 private:
  struct Node {
    NodeKind kind;
    int var = -1;
    int value = -1;
    std::vector<int> children;
    std::vector<double> log_weights;
    std::vector<double> pmf;
  };

  void check_var(int var) const;
  void check_children(const std::vector<int>& children) const;

  std::vector<Variable> vars_;
  std::vector<Node> nodes_;
  std::vector<TiedProductGroup> tied_;
};

// ---------------------------------------------------------------------------
// Inference. All inner computation is in log space.

/// Bottom-up pass writing log Pr_n(x) for every node into `out`
/// (size num_nodes()). Unobserved leaves output log 1. `out` is caller-owned
/// scratch so concurrent evaluations can share one circuit.
void forward(const Circuit& c, std::span<const int> x, std::span<double> out);

double log_evaluate_complete(const Circuit& c, std::span<const int> x);
double evaluate_complete(const Circuit& c, std::span<const int> x);

/// Requires a smooth and decomposable circuit.
double log_marginal(const Circuit& c, std::span<const int> e);
double evaluate_marginal(const Circuit& c, std::span<const int> e);

/// Pr(q | e) as a ratio of marginals; q and e must observe disjoint
/// variables unless they agree.
double conditional(const Circuit& c, std::span<const int> q, std::span<const int> e);

bool check_smooth(const Circuit& c);
bool check_decomposable(const Circuit& c);
/// Structural pairwise-disjoint-support test first, exhaustive enumeration
/// for the remaining sum nodes whose scope has at most 2^20 assignments.
Determinism determinism(const Circuit& c);
bool check_deterministic(const Circuit& c);

struct NormalizationIssue {
  int node = -1;
  double total = 0.0;
};
/// Sum nodes whose weights do not sum to 1 within tol.
std::vector<NormalizationIssue> normalization_issues(const Circuit& c, double tol);

/// Ancestral sampling; variables outside the root scope stay kMissing.
std::vector<Assignment> sample(const Circuit& c, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Text format (`fairpc-circuit v1`).

struct CircuitText {
  Circuit circuit;
  /// Comment lines without the leading "# ".
  std::vector<std::string> comments;
};

CircuitText read_circuit(std::istream& in);
CircuitText read_circuit_file(const std::string& path);
void write_circuit(std::ostream& out, const Circuit& c,
                   std::span<const std::string> comments = {});
void write_circuit_file(const std::string& path, const Circuit& c,
                        std::span<const std::string> comments = {});

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace fairpc

#endif  // FAIRPC_CIRCUIT_HPP_
