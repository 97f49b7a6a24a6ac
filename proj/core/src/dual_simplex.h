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

// Bounded dual simplex for  min c'x  s.t.  row_lower <= Ax <= row_upper,
// lower <= x <= upper, with every structural column boxed. Each row gets a
// logical variable y_r = a_r x, so the basis starts as the logical identity
// and is dual feasible for any cost vector once the structurals sit at the
// bound matching their cost sign. Bound changes keep dual feasibility, which
// is what branch-and-bound relies on.
//
// The basis is held as a sparse LU factorization plus a product-form eta
// file; the ratio test flips boxed columns across their breakpoints.

#ifndef CHAINPLAN_CORE_SRC_DUAL_SIMPLEX_H_
#define CHAINPLAN_CORE_SRC_DUAL_SIMPLEX_H_

#include <chrono>
#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

namespace chainplan::internal {

struct SparseColumn {
  std::vector<int> rows;
  std::vector<double> values;
};

class DualSimplex {
 public:
  enum class Status { kOptimal, kInfeasible, kIterationLimit, kTimeLimit };

  DualSimplex(int num_rows, std::vector<SparseColumn> columns, std::vector<double> cost,
              std::vector<double> lower, std::vector<double> upper,
              std::vector<double> row_lower, std::vector<double> row_upper);
  ~DualSimplex();
  DualSimplex(const DualSimplex&) = delete;
  DualSimplex& operator=(const DualSimplex&) = delete;

  int num_rows() const { return m_; }
  int num_columns() const { return n_; }

  void SetColumnBounds(int j, double lower, double upper);
  struct Row {
    std::vector<std::pair<int, double>> entries;
    double lower;
    double upper;
  };
  // Appends lower <= sum v x_j <= upper rows over structural columns. Their
  // logicals enter the basis, so the duals stay feasible.
  void AddRows(const std::vector<Row>& rows);
  // Drops rows from `first` on whose logical is basic, keeping the basis.
  // Returns how many went.
  int RemoveSlackRows(int first);
  double column_lower(int j) const { return lower_[j]; }
  double column_upper(int j) const { return upper_[j]; }

  Status Solve(std::int64_t max_iterations, std::chrono::steady_clock::time_point deadline);

  // Column j >= num_columns() is the logical of row j - num_columns(), equal
  // to the scaled row activity row_scale(r) * a_r x.
  double value(int j) const { return x_[j]; }
  int basic(int p) const { return head_[p]; }
  bool is_basic(int j) const { return at_[j] == At::kBasic; }
  bool at_upper(int j) const { return at_[j] == At::kUpper; }
  const std::vector<std::pair<int, double>>& row(int r) const { return row_entries_[r]; }
  double row_scale(int r) const { return row_scale_[r]; }
  // Dense row p of B^-1 [A -I]: basic(p) + sum over nonbasics of
  // alpha_j * value(j) is zero.
  void TableauRow(int p, std::vector<double>& alpha) const;
  // Lower bound on the optimum derived from the current duals; valid even
  // when the duals are slightly infeasible. Optionally returns the reduced
  // costs of the structural columns behind it.
  double DualBound(std::vector<double>* reduced = nullptr) const;
  std::int64_t iterations() const { return iterations_; }

 private:
  enum class At : std::uint8_t { kBasic, kLower, kUpper };

  struct Eta {
    int position;
    double pivot;
    std::vector<std::pair<int, double>> entries;  // off-pivot entries
  };

  struct Factor;

  template <typename F>
  void ForColumn(int j, F&& f) const;

  bool Reinvert();
  void ResetToLogicalBasis();
  std::vector<double> Duals() const;
  void ComputeDuals();
  void ComputePrimal();
  void PlaceNonbasic();
  void Refresh();
  // alpha_row_ = rho_' [A -I] on the touched columns.
  void ComputeAlphaRow();
  // In place: v <- B^-1 v, and u <- B^-T u.
  void Ftran(std::vector<double>& v) const;
  void Btran(std::vector<double>& u) const;

  int m_;
  int n_;
  std::vector<SparseColumn> columns_;
  std::vector<std::vector<std::pair<int, double>>> row_entries_;
  std::vector<double> row_scale_;
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<double> x_;
  std::vector<double> d_;
  std::vector<At> at_;
  std::vector<int> head_;
  std::vector<int> pos_;
  std::unique_ptr<Factor> factor_;
  std::vector<Eta> etas_;
  std::int64_t iterations_ = 0;

  std::vector<double> rho_;
  std::vector<double> alpha_row_;
  std::vector<double> alpha_col_;
  std::vector<int> touched_;
  std::vector<double> weight_;
};

}  // namespace chainplan::internal

#endif  // CHAINPLAN_CORE_SRC_DUAL_SIMPLEX_H_
