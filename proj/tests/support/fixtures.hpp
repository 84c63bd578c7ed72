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


// Small hand-built circuits shared by several test files.

#ifndef FAIRPC_TESTS_FIXTURES_HPP_
#define FAIRPC_TESTS_FIXTURES_HPP_

#include <string>
#include <vector>

#include "fairpc/circuit.hpp"

namespace fixtures {

/// Root sum 0.6/0.4 over [A=1] x Cat_B(P(B=1)=0.7) and [A=p2_value] x
/// Cat_B(P(B=1)=0.2).
inline fairpc::Circuit c1(int p2_value = 0, double w1 = 0.6) {
  fairpc::CircuitBuilder b({{0, 2, "A"}, {1, 2, "B"}});
  const int p1 = b.product({b.indicator(0, 1), b.categorical(1, {0.3, 0.7})});
  const int p2 = b.product({b.indicator(0, p2_value), b.categorical(1, {0.8, 0.2})});
  return b.build(b.sum({p1, p2}, {w1, 1.0 - w1}));
}

inline std::vector<fairpc::Variable> binary_vars(int n, const std::string& prefix = "X") {
  std::vector<fairpc::Variable> v;
  for (int i = 0; i < n; ++i) v.push_back({i, 2, prefix + std::to_string(i)});
  return v;
}

}  // namespace fixtures

#endif  // FAIRPC_TESTS_FIXTURES_HPP_
