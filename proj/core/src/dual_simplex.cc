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

#include "dual_simplex.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

namespace chainplan::internal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPrimalTol = 1e-7;
constexpr double kDualTol = 1e-9;
constexpr double kPivotTol = 1e-9;
constexpr double kDropTol = 1e-14;
constexpr std::size_t kMaxEtas = 200;

}  // namespace

struct DualSimplex::Factor {
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
};

DualSimplex::DualSimplex(int num_rows, std::vector<SparseColumn> columns,
                         std::vector<double> cost, std::vector<double> lower,
                         std::vector<double> upper, std::vector<double> row_lower,
                         std::vector<double> row_upper)
    : m_(num_rows), n_(static_cast<int>(columns.size())), columns_(std::move(columns)) {
  row_scale_.assign(m_, 0.0);
  for (const auto& col : columns_) {
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      row_scale_[col.rows[k]] = std::max(row_scale_[col.rows[k]], std::abs(col.values[k]));
    }
  }
  for (double& s : row_scale_) s = s > 0 ? 1.0 / s : 1.0;
  for (auto& col : columns_) {
    for (std::size_t k = 0; k < col.rows.size(); ++k) col.values[k] *= row_scale_[col.rows[k]];
  }
  const int total = n_ + m_;
  cost_ = std::move(cost);
  cost_.resize(total, 0.0);
  lower_ = std::move(lower);
  upper_ = std::move(upper);
  lower_.resize(total);
  upper_.resize(total);
  for (int r = 0; r < m_; ++r) {
    lower_[n_ + r] = row_lower[r] * row_scale_[r];
    upper_[n_ + r] = row_upper[r] * row_scale_[r];
  }
  x_.assign(total, 0.0);
  d_.assign(total, 0.0);
  at_.assign(total, At::kLower);
  head_.resize(m_);
  pos_.assign(total, -1);
  rho_.resize(m_);
  alpha_row_.resize(total);
  alpha_col_.resize(m_);
  row_entries_.resize(m_);
  for (int j = 0; j < n_; ++j) {
    const SparseColumn& col = columns_[j];
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      row_entries_[col.rows[k]].emplace_back(j, col.values[k]);
    }
  }
  weight_.assign(m_, 1.0);
  factor_ = std::make_unique<Factor>();
  ResetToLogicalBasis();
}

DualSimplex::~DualSimplex() = default;

template <typename F>
void DualSimplex::ForColumn(int j, F&& f) const {
  if (j < n_) {
    const SparseColumn& col = columns_[j];
    for (std::size_t k = 0; k < col.rows.size(); ++k) f(col.rows[k], col.values[k]);
  } else {
    f(j - n_, -1.0);
  }
}

void DualSimplex::ResetToLogicalBasis() {
  weight_.assign(m_, 1.0);
  for (int j = 0; j < n_ + m_; ++j) {
    pos_[j] = -1;
    if (at_[j] == At::kBasic) at_[j] = At::kLower;
  }
  for (int r = 0; r < m_; ++r) {
    head_[r] = n_ + r;
    pos_[n_ + r] = r;
    at_[n_ + r] = At::kBasic;
  }
  Reinvert();
  ComputeDuals();
  PlaceNonbasic();
  ComputePrimal();
}

bool DualSimplex::Reinvert() {
  etas_.clear();
  if (m_ == 0) return true;
  std::vector<Eigen::Triplet<double>> triplets;
  for (int p = 0; p < m_; ++p) {
    ForColumn(head_[p], [&](int r, double v) { triplets.emplace_back(r, p, v); });
  }
  Eigen::SparseMatrix<double> basis(m_, m_);
  basis.setFromTriplets(triplets.begin(), triplets.end());
  basis.makeCompressed();
  factor_->lu.compute(basis);
  if (factor_->lu.info() == Eigen::Success) return true;
  // Singular basis: fall back to the logical one.
  weight_.assign(m_, 1.0);
  for (int j = 0; j < n_ + m_; ++j) {
    pos_[j] = -1;
    if (at_[j] == At::kBasic) at_[j] = At::kLower;
  }
  triplets.clear();
  for (int r = 0; r < m_; ++r) {
    head_[r] = n_ + r;
    pos_[n_ + r] = r;
    at_[n_ + r] = At::kBasic;
    triplets.emplace_back(r, r, -1.0);
  }
  Eigen::SparseMatrix<double> identity(m_, m_);
  identity.setFromTriplets(triplets.begin(), triplets.end());
  identity.makeCompressed();
  factor_->lu.compute(identity);
  return false;
}

void DualSimplex::Ftran(std::vector<double>& v) const {
  if (m_ == 0) return;
  Eigen::Map<Eigen::VectorXd> vec(v.data(), m_);
  Eigen::VectorXd solved = factor_->lu.solve(vec);
  vec = solved;
  for (const Eta& eta : etas_) {
    const double vp = v[eta.position] / eta.pivot;
    v[eta.position] = vp;
    if (vp == 0.0) continue;
    for (const auto& [i, a] : eta.entries) v[i] -= a * vp;
  }
}

void DualSimplex::Btran(std::vector<double>& u) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    double sum = u[it->position];
    for (const auto& [i, a] : it->entries) sum -= u[i] * a;
    u[it->position] = sum / it->pivot;
  }
  Eigen::Map<Eigen::VectorXd> vec(u.data(), m_);
  Eigen::VectorXd solved = factor_->lu.transpose().solve(vec);
  vec = solved;
}

std::vector<double> DualSimplex::Duals() const {
  std::vector<double> y(m_);
  for (int p = 0; p < m_; ++p) y[p] = cost_[head_[p]];
  Btran(y);
  return y;
}

void DualSimplex::ComputeDuals() {
  const std::vector<double> y = Duals();
  for (int j = 0; j < n_ + m_; ++j) {
    if (at_[j] == At::kBasic) {
      d_[j] = 0.0;
      continue;
    }
    double dot = 0.0;
    ForColumn(j, [&](int r, double v) { dot += y[r] * v; });
    d_[j] = cost_[j] - dot;
  }
}

void DualSimplex::PlaceNonbasic() {
  for (int j = 0; j < n_ + m_; ++j) {
    if (at_[j] == At::kBasic) continue;
    At want = at_[j];
    if (lower_[j] == upper_[j]) {
      want = At::kLower;
    } else if (d_[j] > kDualTol) {
      want = At::kLower;
    } else if (d_[j] < -kDualTol) {
      want = At::kUpper;
    }
    if (want == At::kLower && lower_[j] == -kInf) want = At::kUpper;
    if (want == At::kUpper && upper_[j] == kInf) want = At::kLower;
    at_[j] = want;
    x_[j] = want == At::kLower ? lower_[j] : upper_[j];
  }
}

void DualSimplex::ComputePrimal() {
  std::vector<double> v(m_, 0.0);
  for (int j = 0; j < n_ + m_; ++j) {
    if (at_[j] == At::kBasic || x_[j] == 0.0) continue;
    const double xj = x_[j];
    ForColumn(j, [&](int r, double a) { v[r] -= a * xj; });
  }
  Ftran(v);
  for (int p = 0; p < m_; ++p) x_[head_[p]] = v[p];
}

void DualSimplex::Refresh() {
  Reinvert();
  ComputeDuals();
  PlaceNonbasic();
  ComputePrimal();
}

void DualSimplex::SetColumnBounds(int j, double lower, double upper) {
  lower_[j] = lower;
  upper_[j] = upper;
}

void DualSimplex::AddRows(const std::vector<Row>& rows) {
  if (rows.empty()) return;
  for (const Row& add : rows) {
    double scale = 0.0;
    for (const auto& [j, v] : add.entries) scale = std::max(scale, std::abs(v));
    scale = scale > 0 ? 1.0 / scale : 1.0;
    const int r = m_;
    std::vector<std::pair<int, double>> row;
    for (const auto& [j, v] : add.entries) {
      if (v == 0.0) continue;
      columns_[j].rows.push_back(r);
      columns_[j].values.push_back(v * scale);
      row.emplace_back(j, v * scale);
    }
    row_entries_.push_back(std::move(row));
    row_scale_.push_back(scale);
    ++m_;
    cost_.push_back(0.0);
    lower_.push_back(add.lower * scale);
    upper_.push_back(add.upper * scale);
    x_.push_back(0.0);
    d_.push_back(0.0);
    at_.push_back(At::kBasic);
    pos_.push_back(r);
    head_.push_back(n_ + r);
    weight_.push_back(1.0);
  }
  rho_.resize(m_);
  alpha_row_.resize(n_ + m_);
  alpha_col_.resize(m_);
  touched_.clear();
  std::fill(alpha_row_.begin(), alpha_row_.end(), 0.0);
  Refresh();
}

int DualSimplex::RemoveSlackRows(int first) {
  std::vector<int> new_index(m_, -1);
  int kept = 0;
  for (int r = 0; r < m_; ++r) {
    if (r < first || at_[n_ + r] != At::kBasic) new_index[r] = kept++;
  }
  const int removed = m_ - kept;
  if (removed == 0) return 0;
  for (auto& col : columns_) {
    std::size_t out = 0;
    for (std::size_t k = 0; k < col.rows.size(); ++k) {
      const int to = new_index[col.rows[k]];
      if (to < 0) continue;
      col.rows[out] = to;
      col.values[out] = col.values[k];
      ++out;
    }
    col.rows.resize(out);
    col.values.resize(out);
  }
  std::vector<std::vector<std::pair<int, double>>> entries(kept);
  std::vector<double> scale(kept);
  std::vector<double> cost(n_ + kept), lower(n_ + kept), upper(n_ + kept), x(n_ + kept),
      d(n_ + kept);
  std::vector<At> at(n_ + kept);
  std::vector<int> head;
  std::vector<double> weight;
  auto map_column = [&](int j) { return j < n_ ? j : n_ + new_index[j - n_]; };
  for (int j = 0; j < n_ + m_; ++j) {
    if (j >= n_ && new_index[j - n_] < 0) continue;
    const int to = map_column(j);
    cost[to] = cost_[j];
    lower[to] = lower_[j];
    upper[to] = upper_[j];
    x[to] = x_[j];
    d[to] = d_[j];
    at[to] = at_[j];
  }
  for (int r = 0; r < m_; ++r) {
    if (new_index[r] < 0) continue;
    entries[new_index[r]] = std::move(row_entries_[r]);
    scale[new_index[r]] = row_scale_[r];
  }
  for (int p = 0; p < m_; ++p) {
    const int j = head_[p];
    if (j >= n_ && new_index[j - n_] < 0) continue;
    head.push_back(map_column(j));
    weight.push_back(weight_[p]);
  }
  m_ = kept;
  row_entries_ = std::move(entries);
  row_scale_ = std::move(scale);
  cost_ = std::move(cost);
  lower_ = std::move(lower);
  upper_ = std::move(upper);
  x_ = std::move(x);
  d_ = std::move(d);
  at_ = std::move(at);
  head_ = std::move(head);
  weight_ = std::move(weight);
  pos_.assign(n_ + m_, -1);
  for (int p = 0; p < m_; ++p) pos_[head_[p]] = p;
  rho_.assign(m_, 0.0);
  alpha_row_.assign(n_ + m_, 0.0);
  alpha_col_.assign(m_, 0.0);
  touched_.clear();
  Refresh();
  return removed;
}

void DualSimplex::TableauRow(int p, std::vector<double>& alpha) const {
  std::vector<double> rho(m_, 0.0);
  rho[p] = 1.0;
  Btran(rho);
  alpha.assign(n_ + m_, 0.0);
  for (int r = 0; r < m_; ++r) {
    if (rho[r] == 0.0) continue;
    for (const auto& [j, v] : row_entries_[r]) alpha[j] += rho[r] * v;
    alpha[n_ + r] = -rho[r];
  }
}

void DualSimplex::ComputeAlphaRow() {
  for (int j : touched_) alpha_row_[j] = 0.0;
  touched_.clear();
  for (int r = 0; r < m_; ++r) {
    const double rr = rho_[r];
    if (rr == 0.0) continue;
    for (const auto& [j, v] : row_entries_[r]) {
      if (alpha_row_[j] == 0.0) touched_.push_back(j);
      alpha_row_[j] += rr * v;
      // Exact cancellation would drop j from the list on the next clear.
      if (alpha_row_[j] == 0.0) alpha_row_[j] = 1e-300;
    }
    const int logical = n_ + r;
    alpha_row_[logical] = -rr;
    touched_.push_back(logical);
  }
}

DualSimplex::Status DualSimplex::Solve(std::int64_t max_iterations,
                                       std::chrono::steady_clock::time_point deadline) {
  // Fixed columns may have been released since the last solve; their
  // placement depends on fresh reduced costs.
  ComputeDuals();
  PlaceNonbasic();
  ComputePrimal();
  std::int64_t local = 0;
  bool fresh = true;

  struct Candidate {
    int j;
    double ratio;
    double abs_alpha;
  };
  auto later = [](const Candidate& a, const Candidate& b) {
    return a.ratio > b.ratio || (a.ratio == b.ratio && a.j > b.j);
  };
  std::vector<Candidate> candidates;
  std::vector<Candidate> passed;
  std::vector<int> flips;
  std::vector<double> work(m_);
  std::vector<double> tau(m_);

  for (;;) {
    if (etas_.size() >= kMaxEtas) {
      Refresh();
      fresh = true;
    }
    if ((local & 15) == 0 && std::chrono::steady_clock::now() > deadline) {
      return Status::kTimeLimit;
    }
    if (local >= max_iterations) return Status::kIterationLimit;

    // Dual steepest-edge pricing.
    int p = -1;
    double best_score = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = head_[i];
      const double viol = std::max(lower_[j] - x_[j], x_[j] - upper_[j]);
      if (viol <= kPrimalTol) continue;
      const double score = viol * viol / weight_[i];
      if (score > best_score) {
        best_score = score;
        p = i;
      }
    }
    if (p < 0) {
      if (!fresh) {
        ComputeDuals();
        PlaceNonbasic();
        ComputePrimal();
        fresh = true;
        continue;
      }
      return Status::kOptimal;
    }

    const int leaving = head_[p];
    const bool to_lower = x_[leaving] < lower_[leaving];
    const double target = to_lower ? lower_[leaving] : upper_[leaving];
    const double sgn = to_lower ? -1.0 : 1.0;

    std::fill(rho_.begin(), rho_.end(), 0.0);
    rho_[p] = 1.0;
    Btran(rho_);
    ComputeAlphaRow();
    candidates.clear();
    for (int j : touched_) {
      if (at_[j] == At::kBasic || lower_[j] == upper_[j]) continue;
      const double a = alpha_row_[j];
      const double s = sgn * a;
      const bool ok = at_[j] == At::kLower ? s > kPivotTol : s < -kPivotTol;
      if (!ok) continue;
      const double t = std::max(0.0, at_[j] == At::kLower ? d_[j] : -d_[j]);
      candidates.push_back({j, t / std::abs(a), std::abs(a)});
    }
    if (candidates.empty()) {
      if (!fresh || !etas_.empty()) {
        Refresh();
        fresh = true;
        continue;
      }
      return Status::kInfeasible;
    }
    std::make_heap(candidates.begin(), candidates.end(), later);

    // Pass breakpoints of boxed columns while the leaving row stays
    // infeasible after flipping them.
    double slope = std::abs(x_[leaving] - target);
    flips.clear();
    passed.clear();
    bool stopped = false;
    while (!candidates.empty()) {
      std::pop_heap(candidates.begin(), candidates.end(), later);
      const Candidate c = candidates.back();
      candidates.pop_back();
      const double range = upper_[c.j] - lower_[c.j];
      const double next = range == kInf ? -1.0 : slope - c.abs_alpha * range;
      if (next <= kPrimalTol) {
        passed.push_back(c);
        stopped = true;
        break;
      }
      slope = next;
      flips.push_back(c.j);
    }
    if (!stopped) {
      if (!fresh || !etas_.empty()) {
        Refresh();
        fresh = true;
        continue;
      }
      return Status::kInfeasible;
    }

    // Harris pass over the remaining breakpoints.
    auto slack_ratio = [&](const Candidate& c) {
      const double t = std::max(0.0, at_[c.j] == At::kLower ? d_[c.j] : -d_[c.j]);
      return (t + kDualTol) / c.abs_alpha;
    };
    double theta_max = slack_ratio(passed[0]);
    while (!candidates.empty() && candidates.front().ratio <= theta_max) {
      std::pop_heap(candidates.begin(), candidates.end(), later);
      passed.push_back(candidates.back());
      candidates.pop_back();
      theta_max = std::min(theta_max, slack_ratio(passed.back()));
    }
    int q = passed[0].j;
    double best_alpha = passed[0].abs_alpha;
    for (std::size_t k = 1; k < passed.size(); ++k) {
      if (passed[k].ratio <= theta_max && passed[k].abs_alpha > best_alpha) {
        best_alpha = passed[k].abs_alpha;
        q = passed[k].j;
      }
    }

    std::fill(alpha_col_.begin(), alpha_col_.end(), 0.0);
    ForColumn(q, [&](int r, double v) { alpha_col_[r] = v; });
    Ftran(alpha_col_);
    const double apq = alpha_col_[p];
    const bool unstable = std::abs(apq - alpha_row_[q]) > 1e-7 * (1.0 + std::abs(apq)) ||
                          std::abs(apq) < kPivotTol;
    if (unstable) {
      if (!etas_.empty()) {
        Refresh();
        fresh = true;
        continue;
      }
      if (std::abs(apq) < kPivotTol) return Status::kInfeasible;
    }
    fresh = false;

    const double theta_d = d_[q] / apq;
    for (int j : touched_) {
      if (at_[j] != At::kBasic) d_[j] -= theta_d * alpha_row_[j];
    }
    d_[q] = 0.0;
    d_[leaving] = -theta_d;

    if (!flips.empty()) {
      std::fill(work.begin(), work.end(), 0.0);
      for (int j : flips) {
        const double from = x_[j];
        const double to = at_[j] == At::kLower ? upper_[j] : lower_[j];
        at_[j] = at_[j] == At::kLower ? At::kUpper : At::kLower;
        x_[j] = to;
        const double delta = to - from;
        ForColumn(j, [&](int r, double v) { work[r] += v * delta; });
      }
      Ftran(work);
      for (int i = 0; i < m_; ++i) x_[head_[i]] -= work[i];
    }

    // Steepest-edge weights, from the pre-pivot row of the inverse.
    double rho_norm = 0.0;
    for (int r = 0; r < m_; ++r) rho_norm += rho_[r] * rho_[r];
    tau = rho_;
    Ftran(tau);
    for (int i = 0; i < m_; ++i) {
      const double ratio = alpha_col_[i] / apq;
      if (i == p || ratio == 0.0) continue;
      weight_[i] = std::max(weight_[i] - 2.0 * ratio * tau[i] + ratio * ratio * rho_norm, 1e-4);
    }
    weight_[p] = std::max(rho_norm / (apq * apq), 1e-4);

    const double delta = (x_[leaving] - target) / apq;
    for (int i = 0; i < m_; ++i) {
      if (alpha_col_[i] != 0.0) x_[head_[i]] -= delta * alpha_col_[i];
    }
    x_[q] += delta;
    x_[leaving] = target;
    at_[leaving] = to_lower ? At::kLower : At::kUpper;
    pos_[leaving] = -1;
    at_[q] = At::kBasic;
    head_[p] = q;
    pos_[q] = p;

    Eta eta;
    eta.position = p;
    eta.pivot = apq;
    for (int i = 0; i < m_; ++i) {
      if (i != p && std::abs(alpha_col_[i]) > kDropTol) eta.entries.emplace_back(i, alpha_col_[i]);
    }
    etas_.push_back(std::move(eta));
    ++iterations_;
    ++local;
  }
}

double DualSimplex::DualBound(std::vector<double>* reduced) const {
  const std::vector<double> y = Duals();
  if (reduced) reduced->assign(n_, 0.0);
  double bound = 0.0;
  for (int j = 0; j < n_ + m_; ++j) {
    double dot = 0.0;
    ForColumn(j, [&](int r, double v) { dot += y[r] * v; });
    const double dj = cost_[j] - dot;
    if (reduced && j < n_) (*reduced)[j] = dj;
    if (std::abs(dj) < 1e-7 && (lower_[j] == -kInf || upper_[j] == kInf)) continue;
    if (dj > 0) {
      if (lower_[j] == -kInf) return -kInf;
      bound += dj * lower_[j];
    } else if (dj < 0) {
      if (upper_[j] == kInf) return -kInf;
      bound += dj * upper_[j];
    }
  }
  return bound;
}

}  // namespace chainplan::internal
