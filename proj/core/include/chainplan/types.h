// Copyright 2026 The Chainplan Authors
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

#ifndef CHAINPLAN_TYPES_H_
#define CHAINPLAN_TYPES_H_

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>

namespace chainplan {

// Instants are integer minutes since the state's epoch.
using Minutes = std::int64_t;

using StationIndex = std::int32_t;
using GroupIndex = std::int32_t;
using SegmentIndex = std::int32_t;
using BlockIndex = std::int32_t;
using RequestIndex = std::int32_t;

inline constexpr int kCapacityDimensions = 2;
inline constexpr std::int64_t kMaxCapacityComponent = 1'000'000'000;

// Weight in decitons and length in decimeters.
struct CapacityVector {
  std::int64_t weight = 0;
  std::int64_t length = 0;

  std::int64_t operator[](int dim) const { return dim == 0 ? weight : length; }
  std::int64_t& operator[](int dim) { return dim == 0 ? weight : length; }

  // Component-wise order: true iff both components are <=.
  bool FitsIn(const CapacityVector& other) const {
    return weight <= other.weight && length <= other.length;
  }
  bool IsZero() const { return weight == 0 && length == 0; }

  CapacityVector& operator+=(const CapacityVector& o) {
    weight += o.weight;
    length += o.length;
    return *this;
  }
  CapacityVector& operator-=(const CapacityVector& o) {
    weight -= o.weight;
    length -= o.length;
    return *this;
  }
  friend CapacityVector operator+(CapacityVector a, const CapacityVector& b) {
    return a += b;
  }
  friend CapacityVector operator-(CapacityVector a, const CapacityVector& b) {
    return a -= b;
  }
  friend CapacityVector operator*(CapacityVector a, std::int64_t k) {
    a.weight *= k;
    a.length *= k;
    return a;
  }
  friend bool operator==(const CapacityVector&, const CapacityVector&) = default;

  static CapacityVector Max(const CapacityVector& a, const CapacityVector& b) {
    return {std::max(a.weight, b.weight), std::max(a.length, b.length)};
  }
};

inline std::ostream& operator<<(std::ostream& os, const CapacityVector& c) {
  return os << "(" << c.weight << " dt, " << c.length << " dm)";
}

// Raised when an id does not resolve against the state.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Raised for structurally invalid input (violated type invariants).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace chainplan

#endif  // CHAINPLAN_TYPES_H_
