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

#include "chainplan/throughput_model.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iterator>
#include <limits>
#include <map>
#include <optional>
#include <numeric>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

#include "chainplan/chain_rules.h"
#include "dual_simplex.h"

namespace chainplan {
namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kIntTol = 1e-6;
// Branching: trial solves per node, their iteration limit, the history that
// makes a pseudocost trusted, and re-solves after fixings.
constexpr int kMaxStrong = 8;
constexpr std::int64_t kStrongIterations = 40;
constexpr int kReliable = 2;
constexpr int kMaxPasses = 4;
constexpr int kNodeCutPasses = 3;
constexpr int kMaxNodeCuts = 200;

CapacityVector Positive(const CapacityVector& v) {
  return {std::max<std::int64_t>(0, v.weight), std::max<std::int64_t>(0, v.length)};
}

// Exact integer bookkeeping of block loads and segment occupation for a
// partial selection.
class Tracker {
 public:
  explicit Tracker(const OptModel& model) : model_(model) {
    load_.resize(model.blocks.size());
    for (std::size_t b = 0; b < model.blocks.size(); ++b) load_[b] = model.blocks[b].fixed_load;
    occupied_.assign(model.segments.size(), CapacityVector{});
    for (std::size_t s = 0; s < model.segments.size(); ++s) {
      for (int b : model.segments[s].blocks) occupied_[s] += Space(b, load_[b]);
    }
    block_delta_.assign(model.blocks.size(), CapacityVector{});
    segment_delta_.assign(model.segments.size(), CapacityVector{});
  }

  bool Fits(int r, int rank) {
    Stage(r, rank);
    bool ok = true;
    for (int s : touched_segments_) {
      if (!(occupied_[s] + segment_delta_[s]).FitsIn(model_.SegmentBound(s))) ok = false;
    }
    Unstage();
    return ok;
  }

  void Add(int r, int rank) { Apply(r, rank, 1); }
  void Remove(int r, int rank) { Apply(r, rank, -1); }

  const CapacityVector& load(int b) const { return load_[b]; }

 private:
  CapacityVector Space(int b, const CapacityVector& load) const {
    return CapacityVector::Max(model_.blocks[b].reservation, load);
  }

  void Stage(int r, int rank) {
    const ModelRequest& req = model_.requests[r];
    for (int b : req.candidate_blocks[rank]) {
      if (block_delta_[b].IsZero()) touched_blocks_.push_back(b);
      block_delta_[b] += req.demand;
    }
    for (int b : touched_blocks_) {
      const CapacityVector change = Space(b, load_[b] + block_delta_[b]) - Space(b, load_[b]);
      for (int s : model_.blocks[b].segments) {
        if (!seen_segment_.contains(s)) {
          seen_segment_.emplace(s, true);
          touched_segments_.push_back(s);
        }
        segment_delta_[s] += change;
      }
    }
  }

  void Unstage() {
    for (int b : touched_blocks_) block_delta_[b] = {};
    for (int s : touched_segments_) segment_delta_[s] = {};
    touched_blocks_.clear();
    touched_segments_.clear();
    seen_segment_.clear();
  }

  void Apply(int r, int rank, int sign) {
    const ModelRequest& req = model_.requests[r];
    for (int b : req.candidate_blocks[rank]) {
      const CapacityVector before = Space(b, load_[b]);
      load_[b] += req.demand * sign;
      const CapacityVector change = Space(b, load_[b]) - before;
      for (int s : model_.blocks[b].segments) occupied_[s] += change;
    }
  }

  const OptModel& model_;
  std::vector<CapacityVector> load_;
  std::vector<CapacityVector> occupied_;
  std::vector<CapacityVector> block_delta_;
  std::vector<CapacityVector> segment_delta_;
  std::vector<int> touched_blocks_;
  std::vector<int> touched_segments_;
  std::unordered_map<int, bool> seen_segment_;
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int Find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void Unite(int a, int b) {
    a = Find(a);
    b = Find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

enum class CapClass : std::uint8_t { kConstant, kLinear, kVariable };

struct Presolve {
  // Per (block, dim): fixed_load + largest possible model load.
  std::vector<std::array<std::int64_t, 2>> max_load;
  std::vector<std::array<CapClass, 2>> cap_class;
  std::vector<std::array<bool, 2>> row_kept;
  // Per request and rank: false when a better chain of the request uses no
  // more capacity on any row that can bind.
  std::vector<std::vector<bool>> alive;
  int dominated = 0;
};

// Marks chains that a better-ranked live chain of the same request beats on
// every kept row: each row the better one loads, the worse one loads at least
// as much, through a linear block or the same reserved one.
int MarkDominated(const OptModel& model, Presolve& p, int r) {
  const ModelRequest& req = model.requests[r];
  const std::size_t n = req.candidates.size();
  if (req.fixed || n < 2) return 0;
  // (segment, dim, block) per loaded row, block -1 when linear.
  using Token = std::tuple<int, int, int>;
  std::vector<std::vector<Token>> tokens(n);
  for (std::size_t c = 0; c < n; ++c) {
    if (!p.alive[r][c]) continue;
    for (int b : req.candidate_blocks[c]) {
      for (int s : model.blocks[b].segments) {
        for (int dim = 0; dim < 2; ++dim) {
          if (!p.row_kept[s][dim] || req.demand[dim] == 0) continue;
          switch (p.cap_class[b][dim]) {
            case CapClass::kConstant:
              break;
            case CapClass::kLinear:
              tokens[c].emplace_back(s, dim, -1);
              break;
            case CapClass::kVariable:
              tokens[c].emplace_back(s, dim, b);
              break;
          }
        }
      }
    }
    std::sort(tokens[c].begin(), tokens[c].end());
  }
  auto covers = [&](const std::vector<Token>& worse, const std::vector<Token>& better) {
    std::vector<Token> left;
    std::set_difference(better.begin(), better.end(), worse.begin(), worse.end(),
                        std::back_inserter(left));
    if (left.empty()) return true;
    // Unmatched reserved loads may still lean on a spare linear load.
    std::vector<Token> spare;
    std::set_difference(worse.begin(), worse.end(), better.begin(), better.end(),
                        std::back_inserter(spare));
    for (const auto& [s, dim, b] : left) {
      if (b < 0) return false;
      auto it = std::find(spare.begin(), spare.end(), Token{s, dim, -1});
      if (it == spare.end()) return false;
      spare.erase(it);
    }
    return true;
  };
  int marked = 0;
  for (std::size_t c = 1; c < n; ++c) {
    if (!p.alive[r][c]) continue;
    for (std::size_t better = 0; better < c; ++better) {
      if (p.alive[r][better] && covers(tokens[c], tokens[better])) {
        p.alive[r][c] = false;
        ++marked;
        break;
      }
    }
  }
  return marked;
}

// Row and block classification from the live chains, then dominance, until
// nothing changes. Some optimal selection uses live chains only, so a row
// that cannot bind under them stays out.
Presolve RunPresolve(const OptModel& model) {
  Presolve p;
  const std::size_t nb = model.blocks.size();
  const std::size_t ns = model.segments.size();
  p.alive.resize(model.requests.size());
  for (std::size_t r = 0; r < model.requests.size(); ++r) {
    p.alive[r].assign(model.requests[r].candidates.size(), true);
  }
  std::vector<std::int64_t> count(nb, 0);
  std::vector<std::int64_t> seg_count(ns, 0);
  for (;;) {
    p.max_load.assign(nb, {0, 0});
    p.cap_class.assign(nb, {CapClass::kLinear, CapClass::kLinear});
    for (std::size_t b = 0; b < nb; ++b) {
      for (int i = 0; i < 2; ++i) p.max_load[b][i] = model.blocks[b].fixed_load[i];
    }
    // Largest model load per segment, one chain per request.
    std::vector<std::array<std::int64_t, 2>> seg_load(ns, {0, 0});
    for (std::size_t r = 0; r < model.requests.size(); ++r) {
      const ModelRequest& req = model.requests[r];
      std::vector<std::int64_t> most(nb, 0);
      std::vector<std::int64_t> seg_most(ns, 0);
      std::vector<int> touched;
      std::vector<int> seg_touched;
      for (std::size_t c = 0; c < req.candidate_blocks.size(); ++c) {
        if (!p.alive[r][c]) continue;
        const auto& blocks = req.candidate_blocks[c];
        for (int b : blocks) {
          ++count[b];
          for (int s : model.blocks[b].segments) ++seg_count[s];
        }
        for (int b : blocks) {
          if (most[b] == 0) touched.push_back(b);
          most[b] = std::max(most[b], count[b]);
          for (int s : model.blocks[b].segments) {
            if (seg_most[s] == 0) seg_touched.push_back(s);
            seg_most[s] = std::max(seg_most[s], seg_count[s]);
          }
        }
        for (int b : blocks) {
          count[b] = 0;
          for (int s : model.blocks[b].segments) seg_count[s] = 0;
        }
      }
      for (int b : touched) {
        for (int i = 0; i < 2; ++i) p.max_load[b][i] += most[b] * req.demand[i];
      }
      for (int s : seg_touched) {
        for (int i = 0; i < 2; ++i) seg_load[s][i] += seg_most[s] * req.demand[i];
      }
    }
    for (std::size_t b = 0; b < nb; ++b) {
      for (int i = 0; i < 2; ++i) {
        const std::int64_t res = model.blocks[b].reservation[i];
        if (res >= p.max_load[b][i]) {
          p.cap_class[b][i] = CapClass::kConstant;
        } else if (res <= model.blocks[b].fixed_load[i]) {
          p.cap_class[b][i] = CapClass::kLinear;
        } else {
          p.cap_class[b][i] = CapClass::kVariable;
        }
      }
    }
    p.row_kept.assign(ns, {false, false});
    for (std::size_t s = 0; s < ns; ++s) {
      const CapacityVector bound = model.SegmentBound(static_cast<int>(s));
      for (int i = 0; i < 2; ++i) {
        std::int64_t by_block = 0;
        std::int64_t by_segment = seg_load[s][i];
        for (int b : model.segments[s].blocks) {
          const ModelBlock& mb = model.blocks[b];
          by_block += std::max(mb.reservation[i], p.max_load[b][i]);
          by_segment += std::max(mb.reservation[i], mb.fixed_load[i]);
        }
        p.row_kept[s][i] = std::min(by_block, by_segment) > bound[i];
      }
    }
    int marked = 0;
    for (std::size_t r = 0; r < model.requests.size(); ++r) {
      marked += MarkDominated(model, p, static_cast<int>(r));
    }
    p.dominated += marked;
    if (marked == 0) break;
  }
  return p;
}

class ComponentSolver {
 public:
  ComponentSolver(const OptModel& model, const Presolve& pre, Tracker& tracker,
                  std::vector<int> requests, Clock::time_point deadline,
                  std::int64_t max_nodes, SolveStats& stats)
      : model_(model),
        pre_(pre),
        tracker_(tracker),
        requests_(std::move(requests)),
        deadline_(deadline),
        max_nodes_(max_nodes),
        stats_(stats) {}

  // Returns the chosen rank per component request.
  // Every request on its best chain.
  double TrivialBound() const {
    double sum = 0;
    for (int r : requests_) {
      if (!model_.requests[r].candidates.empty())
        sum += static_cast<double>(model_.ScaledPrice(r, 0));
    }
    return sum;
  }

  // Upper bound on the component's scaled objective.
  double Bound() const {
    const double best = HaveIncumbent() ? static_cast<double>(best_value_) : -kInf;
    return std::min(TrivialBound(), std::max(best, lost_bound_));
  }

  std::vector<int> Run(bool& proven, bool& feasible) {
    BuildLp();
    best_.assign(requests_.size(), -1);
    best_value_ = std::numeric_limits<std::int64_t>::min();
    TryTrivial();
    TryGreedy(nullptr);
    proven_ = true;
    Search();
    proven = proven_ && best_value_ != std::numeric_limits<std::int64_t>::min();
    feasible = best_value_ != std::numeric_limits<std::int64_t>::min();
    if (!feasible) {
      for (std::size_t k = 0; k < requests_.size(); ++k) {
        const ModelRequest& req = model_.requests[requests_[k]];
        best_[k] = req.fixed ? req.current : -1;
      }
    }
    stats_.lp_iterations += lp_->iterations();
    return best_;
  }

 private:
  void BuildLp() {
    std::vector<internal::SparseColumn> columns;
    std::vector<double> cost, lower, upper, row_lower, row_upper;
    std::int64_t max_price = 1;
    for (int r : requests_) {
      const ModelRequest& req = model_.requests[r];
      for (std::size_t c = 0; c < req.candidates.size(); ++c) {
        max_price = std::max(max_price, model_.ScaledPrice(r, static_cast<int>(c)));
      }
    }
    scale_ = static_cast<double>(max_price);
    local_of_.clear();
    for (std::size_t k = 0; k < requests_.size(); ++k) {
      const int r = requests_[k];
      const ModelRequest& req = model_.requests[r];
      local_of_[r] = static_cast<int>(k);
      first_column_.push_back(static_cast<int>(columns.size()));
      const bool single_fixed = req.fixed && req.candidates.size() == 1;
      for (std::size_t c = 0; c < req.candidates.size(); ++c) {
        columns.emplace_back();
        cost.push_back(-static_cast<double>(model_.ScaledPrice(r, static_cast<int>(c))) / scale_);
        lower.push_back(single_fixed ? 1.0 : 0.0);
        upper.push_back(pre_.alive[r][c] ? 1.0 : 0.0);
        owner_.push_back(static_cast<int>(k));
        rank_.push_back(static_cast<int>(c));
      }
      if (req.candidates.size() >= 2) {
        const int row = static_cast<int>(row_lower.size());
        row_lower.push_back(req.fixed ? 1.0 : -kInf);
        row_upper.push_back(1.0);
        for (std::size_t c = 0; c < req.candidates.size(); ++c) {
          columns[first_column_[k] + c].rows.push_back(row);
          columns[first_column_[k] + c].values.push_back(1.0);
        }
      }
    }
    num_x_ = static_cast<int>(columns.size());

    // Segment and block rows touched by the component.
    std::map<int, bool> segs;
    for (int r : requests_) {
      for (const auto& blocks : model_.requests[r].candidate_blocks) {
        for (int b : blocks) {
          for (int s : model_.blocks[b].segments) segs[s] = true;
        }
      }
    }
    // Columns using each block, with multiplicity.
    std::unordered_map<int, std::vector<std::pair<int, int>>> users;
    for (std::size_t k = 0; k < requests_.size(); ++k) {
      const ModelRequest& req = model_.requests[requests_[k]];
      for (std::size_t c = 0; c < req.candidate_blocks.size(); ++c) {
        std::map<int, int> mult;
        for (int b : req.candidate_blocks[c]) ++mult[b];
        for (const auto& [b, n] : mult) {
          users[b].emplace_back(first_column_[k] + static_cast<int>(c), n);
        }
      }
    }
    auto add_block_terms = [&](int b, int dim, double sign,
                               std::unordered_map<int, double>& acc) {
      for (const auto& [col, n] : users[b]) {
        const std::int64_t demand = model_.requests[requests_[owner_[col]]].demand[dim];
        if (demand != 0) acc[col] += sign * static_cast<double>(n * demand);
      }
    };
    std::map<std::pair<int, int>, int> cap_column;
    auto cap_col = [&](int b, int dim) {
      auto it = cap_column.find({b, dim});
      if (it != cap_column.end()) return it->second;
      const int col = static_cast<int>(columns.size());
      columns.emplace_back();
      cost.push_back(0.0);
      lower.push_back(static_cast<double>(model_.blocks[b].reservation[dim]));
      upper.push_back(static_cast<double>(pre_.max_load[b][dim]));
      cap_column[{b, dim}] = col;
      return col;
    };
    auto push_row = [&](std::unordered_map<int, double>& acc, double lo, double hi) {
      const int row = static_cast<int>(row_lower.size());
      row_lower.push_back(lo);
      row_upper.push_back(hi);
      std::vector<std::pair<int, double>> sorted(acc.begin(), acc.end());
      std::sort(sorted.begin(), sorted.end());
      for (const auto& [col, v] : sorted) {
        if (v == 0.0) continue;
        columns[col].rows.push_back(row);
        columns[col].values.push_back(v);
      }
    };
    for (const auto& [s, unused] : segs) {
      for (int dim = 0; dim < 2; ++dim) {
        if (!pre_.row_kept[s][dim]) continue;
        std::unordered_map<int, double> acc;
        double rhs = static_cast<double>(model_.SegmentBound(s)[dim]);
        bool pure = true;
        for (int b : model_.segments[s].blocks) {
          switch (pre_.cap_class[b][dim]) {
            case CapClass::kConstant:
              rhs -= static_cast<double>(model_.blocks[b].reservation[dim]);
              break;
            case CapClass::kLinear:
              rhs -= static_cast<double>(model_.blocks[b].fixed_load[dim]);
              add_block_terms(b, dim, 1.0, acc);
              break;
            case CapClass::kVariable:
              acc[cap_col(b, dim)] += 1.0;
              pure = false;
              break;
          }
        }
        if (pure) AddKnapsack(acc, rhs);
        push_row(acc, -kInf, rhs);
      }
    }
    for (const auto& [key, col] : std::map<std::pair<int, int>, int>(cap_column)) {
      const auto [b, dim] = key;
      std::unordered_map<int, double> acc;
      add_block_terms(b, dim, 1.0, acc);
      acc[col] -= 1.0;
      push_row(acc, -kInf, -static_cast<double>(model_.blocks[b].fixed_load[dim]));
    }
    stats_.lp_rows += static_cast<int>(row_lower.size());
    stats_.lp_columns += static_cast<int>(columns.size());
    lp_.emplace(static_cast<int>(row_lower.size()), std::move(columns), std::move(cost),
                std::move(lower), std::move(upper), std::move(row_lower), std::move(row_upper));
  }

  // A capacity row over x columns only, seen per request: the request's
  // weight is its smallest coefficient over the candidates in the row.
  struct Knapsack {
    std::vector<std::int64_t> weight;
    std::vector<std::vector<int>> columns;
    std::int64_t rhs = 0;
  };

  void AddKnapsack(const std::unordered_map<int, double>& acc, double rhs) {
    if (rhs < 0) return;
    std::map<int, std::pair<std::int64_t, std::vector<int>>> items;
    for (const auto& [col, v] : acc) {
      if (v <= 0) continue;
      auto& [w, cols] = items[owner_[col]];
      const auto coef = static_cast<std::int64_t>(std::llround(v));
      w = cols.empty() ? coef : std::min(w, coef);
      cols.push_back(col);
    }
    Knapsack k;
    k.rhs = static_cast<std::int64_t>(std::floor(rhs + 1e-9));
    std::int64_t total = 0;
    for (auto& [owner, item] : items) {
      std::sort(item.second.begin(), item.second.end());
      total += item.first;
      k.weight.push_back(item.first);
      k.columns.push_back(std::move(item.second));
    }
    if (total > k.rhs && k.weight.size() >= 2) knapsacks_.push_back(std::move(k));
  }

  // Lifted cover inequalities violated by x, one per row at most. The cover
  // is the cheapest one in terms of sum (1 - y) among used requests; the
  // others are lifted in one at a time, most used first.
  // Cuts violated by x cannot be rows of the LP that produced it, so the
  // key check is only needed while rows are kept across solves.
  int SeparateCovers(const std::vector<double>& x, bool check_keys = true) {
    int added = 0;
    for (const Knapsack& k : knapsacks_) {
      const std::size_t n = k.weight.size();
      std::vector<double> y(n, 0.0);
      std::vector<std::size_t> used;
      std::int64_t used_weight = 0;
      for (std::size_t i = 0; i < n; ++i) {
        for (int col : k.columns[i]) y[i] += x[col];
        if (y[i] > 1e-6) {
          used.push_back(i);
          used_weight += k.weight[i];
        }
      }
      if (used_weight <= k.rhs) continue;
      const std::vector<std::size_t> cover = CheapestCover(k, y, used);
      std::vector<std::int64_t> alpha = Lift(k, y, cover);
      double lhs = 0;
      for (std::size_t i = 0; i < n; ++i) lhs += static_cast<double>(alpha[i]) * y[i];
      const auto bound = static_cast<std::int64_t>(cover.size()) - 1;
      if (lhs <= static_cast<double>(bound) + 1e-4) continue;
      std::vector<int> key;
      std::vector<std::pair<int, double>> entries;
      for (std::size_t i = 0; i < n; ++i) {
        if (alpha[i] == 0) continue;
        for (int col : k.columns[i]) {
          key.push_back(col);
          key.push_back(static_cast<int>(alpha[i]));
          entries.emplace_back(col, static_cast<double>(alpha[i]));
        }
      }
      key.push_back(static_cast<int>(-bound));
      if (check_keys && !cut_keys_.insert(std::move(key)).second) continue;
      pending_.push_back({std::move(entries), -kInf, static_cast<double>(bound)});
      ++added;
    }
    return added;
  }

  // Gomory mixed-integer cuts from the tableau rows of fractional basic x
  // columns, most fractional first. Logicals count as continuous and are
  // substituted out, so the cuts live on the structural columns.
  int SeparateGomory(int max_cuts) {
    const int n = lp_->num_columns();
    const int m = lp_->num_rows();
    std::vector<std::pair<double, int>> rows;
    for (int p = 0; p < m; ++p) {
      const int j = lp_->basic(p);
      if (j >= num_x_) continue;
      const double v = lp_->value(j);
      const double f = v - std::floor(v);
      if (f < 0.01 || f > 0.99) continue;
      rows.emplace_back(-std::min(f, 1.0 - f), p);
    }
    std::sort(rows.begin(), rows.end());
    int added = 0;
    std::vector<double> alpha;
    std::vector<double> cut(n);
    for (const auto& [unused, p] : rows) {
      if (added >= max_cuts) break;
      lp_->TableauRow(p, alpha);
      const double b = lp_->value(lp_->basic(p));
      const double f0 = b - std::floor(b);
      std::fill(cut.begin(), cut.end(), 0.0);
      double rhs = 1.0;
      bool bad = false;
      for (int j = 0; j < n + m && !bad; ++j) {
        if (lp_->is_basic(j)) continue;
        const double lo = lp_->column_lower(j);
        const double hi = lp_->column_upper(j);
        if (lo == hi) continue;
        // t = x - lo at the lower bound, hi - x at the upper one.
        const bool upper = lp_->at_upper(j);
        const double a = upper ? -alpha[j] : alpha[j];
        if (std::abs(a) < 1e-11) continue;
        double g;
        if (j < num_x_) {
          const double fj = a - std::floor(a);
          g = fj <= f0 ? fj / f0 : (1.0 - fj) / (1.0 - f0);
        } else {
          g = a > 0 ? a / f0 : -a / (1.0 - f0);
        }
        if (g == 0.0) continue;
        const double sign = upper ? -1.0 : 1.0;
        const double bound = upper ? hi : lo;
        if (!std::isfinite(bound)) {
          bad = true;
          break;
        }
        rhs -= -sign * g * bound;
        if (j < n) {
          cut[j] += sign * g;
        } else {
          for (const auto& [k, v] : lp_->row(j - n)) cut[k] += sign * g * v;
        }
      }
      if (bad) continue;
      // Drop tiny entries against their bounds, then check scale and
      // violation.
      std::vector<std::pair<int, double>> entries;
      double largest = 0, smallest = kInf, activity = 0;
      for (int k = 0; k < n; ++k) {
        const double c = cut[k];
        if (c == 0.0) continue;
        if (std::abs(c) < 1e-9) {
          rhs -= c > 0 ? c * root_column_upper(k) : c * root_column_lower(k);
          continue;
        }
        entries.emplace_back(k, c);
        largest = std::max(largest, std::abs(c));
        smallest = std::min(smallest, std::abs(c));
        activity += c * lp_->value(k);
      }
      if (entries.empty() || largest / smallest > 1e6) continue;
      if (activity >= rhs - 1e-4 * std::max(1.0, std::abs(rhs))) continue;
      pending_.push_back({std::move(entries), rhs, kInf});
      ++added;
    }
    return added;
  }

  double root_column_lower(int k) const {
    return k < static_cast<int>(root_lower_.size()) ? root_lower_[k] : lp_->column_lower(k);
  }
  double root_column_upper(int k) const {
    return k < static_cast<int>(root_upper_.size()) ? root_upper_[k] : lp_->column_upper(k);
  }

  // Minimum of sum (1 - y) over subsets of `used` heavier than the rhs, by
  // a 0-1 knapsack over the weight, then trimmed to a minimal cover.
  static std::vector<std::size_t> CheapestCover(const Knapsack& k, const std::vector<double>& y,
                                                const std::vector<std::size_t>& used) {
    std::int64_t heaviest = 0;
    for (std::size_t i : used) heaviest = std::max(heaviest, k.weight[i]);
    const auto width = static_cast<std::size_t>(k.rhs + heaviest + 1);
    std::vector<double> cost(width, kInf);
    std::vector<std::vector<bool>> take(used.size(), std::vector<bool>(width, false));
    cost[0] = 0;
    for (std::size_t u = 0; u < used.size(); ++u) {
      const auto w = static_cast<std::size_t>(k.weight[used[u]]);
      const double c = 1.0 - y[used[u]];
      for (std::size_t v = width; v-- > w;) {
        if (cost[v - w] + c < cost[v]) {
          cost[v] = cost[v - w] + c;
          take[u][v] = true;
        }
      }
    }
    std::size_t v = static_cast<std::size_t>(k.rhs) + 1;
    for (std::size_t t = v; t < width; ++t) {
      if (cost[t] < cost[v]) v = t;
    }
    std::vector<std::size_t> cover;
    for (std::size_t u = used.size(); u-- > 0;) {
      if (!take[u][v]) continue;
      cover.push_back(used[u]);
      v -= static_cast<std::size_t>(k.weight[used[u]]);
    }
    std::sort(cover.begin(), cover.end(), [&](std::size_t a, std::size_t b) {
      return y[a] < y[b] || (y[a] == y[b] && a < b);
    });
    std::int64_t sum = 0;
    for (std::size_t i : cover) sum += k.weight[i];
    for (std::size_t idx = 0; idx < cover.size();) {
      if (sum - k.weight[cover[idx]] > k.rhs) {
        sum -= k.weight[cover[idx]];
        cover.erase(cover.begin() + static_cast<std::ptrdiff_t>(idx));
      } else {
        ++idx;
      }
    }
    return cover;
  }

  // Sequential up-lifting of the cover inequality; alpha[i] is 1 on the
  // cover. Each coefficient solves a small knapsack by profit.
  static std::vector<std::int64_t> Lift(const Knapsack& k, const std::vector<double>& y,
                                        const std::vector<std::size_t>& cover) {
    const std::size_t n = k.weight.size();
    std::vector<std::int64_t> alpha(n, 0);
    const auto bound = static_cast<std::int64_t>(cover.size()) - 1;
    // min_weight[p]: least weight reaching profit p with the items so far.
    constexpr std::int64_t kNone = std::numeric_limits<std::int64_t>::max();
    std::vector<std::int64_t> min_weight(1, 0);
    auto include = [&](std::int64_t profit, std::int64_t weight) {
      const std::size_t old = min_weight.size();
      min_weight.resize(old + static_cast<std::size_t>(profit), kNone);
      for (std::size_t p = min_weight.size(); p-- > static_cast<std::size_t>(profit);) {
        const std::int64_t from = min_weight[p - static_cast<std::size_t>(profit)];
        if (from != kNone) min_weight[p] = std::min(min_weight[p], from + weight);
      }
    };
    std::vector<bool> in(n, false);
    for (std::size_t i : cover) {
      in[i] = true;
      alpha[i] = 1;
      include(1, k.weight[i]);
    }
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in[i]) rest.push_back(i);
    }
    std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) {
      return y[a] > y[b];
    });
    for (std::size_t j : rest) {
      const std::int64_t room = k.rhs - k.weight[j];
      if (room < 0) {
        alpha[j] = bound;
      } else {
        std::int64_t best = 0;
        for (std::size_t p = 0; p < min_weight.size(); ++p) {
          if (min_weight[p] <= room) best = static_cast<std::int64_t>(p);
        }
        alpha[j] = std::max<std::int64_t>(0, bound - best);
      }
      if (alpha[j] > 0) include(alpha[j], k.weight[j]);
    }
    return alpha;
  }

  std::int64_t Value(const std::vector<int>& choice) const {
    std::int64_t v = 0;
    for (std::size_t k = 0; k < choice.size(); ++k) {
      if (choice[k] >= 0) v += model_.ScaledPrice(requests_[k], choice[k]);
    }
    return v;
  }

  void Offer(const std::vector<int>& choice) {
    const std::int64_t v = Value(choice);
    if (v > best_value_) {
      best_value_ = v;
      best_ = choice;
    }
  }

  // Places the selection on the tracker if it fits, then takes it off again.
  bool Feasible(const std::vector<int>& choice) {
    std::vector<std::pair<int, int>> added;
    bool ok = true;
    for (std::size_t k = 0; k < choice.size() && ok; ++k) {
      const ModelRequest& req = model_.requests[requests_[k]];
      if (choice[k] < 0) {
        if (req.fixed) ok = false;
        continue;
      }
      if (!tracker_.Fits(requests_[k], choice[k])) {
        ok = false;
        continue;
      }
      tracker_.Add(requests_[k], choice[k]);
      added.emplace_back(requests_[k], choice[k]);
    }
    for (const auto& [r, c] : added) tracker_.Remove(r, c);
    return ok;
  }

  void TryTrivial() {
    std::vector<int> choice(requests_.size(), -1);
    for (std::size_t k = 0; k < requests_.size(); ++k) {
      const ModelRequest& req = model_.requests[requests_[k]];
      if (req.fixed) choice[k] = req.current;
    }
    if (Feasible(choice)) Offer(choice);
  }

  // Greedy fill guided by LP values when given.
  void TryGreedy(const std::vector<double>* x) {
    auto lp_value = [&](std::size_t k, int c) {
      return x ? (*x)[first_column_[k] + c] : 0.0;
    };
    std::vector<std::size_t> order(requests_.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> top(requests_.size(), 0.0);
    for (std::size_t k = 0; k < requests_.size(); ++k) {
      const auto n = model_.requests[requests_[k]].candidates.size();
      for (std::size_t c = 0; c < n; ++c)
        top[k] = std::max(top[k], lp_value(k, static_cast<int>(c)));
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const ModelRequest& ra = model_.requests[requests_[a]];
      const ModelRequest& rb = model_.requests[requests_[b]];
      if (ra.fixed != rb.fixed) return ra.fixed;
      if (top[a] != top[b]) return top[a] > top[b];
      return ra.priority > rb.priority;
    });
    std::vector<int> choice(requests_.size(), -1);
    bool ok = true;
    for (std::size_t k : order) {
      const int r = requests_[k];
      const ModelRequest& req = model_.requests[r];
      std::vector<int> ranks(req.candidates.size());
      std::iota(ranks.begin(), ranks.end(), 0);
      std::stable_sort(ranks.begin(), ranks.end(),
                       [&](int a, int b) { return lp_value(k, a) > lp_value(k, b); });
      for (int c : ranks) {
        if (tracker_.Fits(r, c)) {
          tracker_.Add(r, c);
          choice[k] = c;
          break;
        }
      }
      if (choice[k] < 0 && req.fixed) {
        ok = false;
        break;
      }
    }
    if (ok) {
      Polish(choice);
      while (Eject(choice)) Polish(choice);
    }
    for (std::size_t k = 0; k < choice.size(); ++k) {
      if (choice[k] >= 0) tracker_.Remove(requests_[k], choice[k]);
    }
    if (ok) Offer(choice);
  }

  // First-improvement moves on a selection held by the tracker: route an
  // unrouted request or move a routed one to a better-ranked chain.
  void Polish(std::vector<int>& choice) {
    for (bool improved = true; improved;) {
      improved = false;
      for (std::size_t k = 0; k < choice.size(); ++k) {
        const int r = requests_[k];
        const int current = choice[k];
        const int limit = current < 0 ? static_cast<int>(model_.requests[r].candidates.size())
                                      : current;
        if (limit == 0) continue;
        if (current >= 0) tracker_.Remove(r, current);
        int moved = current;
        for (int c = 0; c < limit; ++c) {
          if (tracker_.Fits(r, c)) {
            moved = c;
            break;
          }
        }
        if (moved >= 0) tracker_.Add(r, moved);
        if (moved != current) {
          choice[k] = moved;
          improved = true;
        }
      }
    }
  }

  // Routes one unrouted request by moving a single routed one that shares a
  // segment with it onto another of its chains. Returns true on success.
  bool Eject(std::vector<int>& choice) {
    auto segments_of = [&](int r, int c) {
      std::vector<int> out;
      for (int b : model_.requests[r].candidate_blocks[c]) {
        const auto& segs = model_.blocks[b].segments;
        out.insert(out.end(), segs.begin(), segs.end());
      }
      std::sort(out.begin(), out.end());
      out.erase(std::unique(out.begin(), out.end()), out.end());
      return out;
    };
    auto shares = [](const std::vector<int>& a, const std::vector<int>& b) {
      for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
        if (a[i] == b[j]) return true;
        a[i] < b[j] ? ++i : ++j;
      }
      return false;
    };
    for (std::size_t k = 0; k < choice.size(); ++k) {
      if (choice[k] >= 0) continue;
      const int r = requests_[k];
      const int nc = static_cast<int>(model_.requests[r].candidates.size());
      for (int c = 0; c < nc; ++c) {
        const std::vector<int> segs = segments_of(r, c);
        for (std::size_t k2 = 0; k2 < choice.size(); ++k2) {
          const int cur = choice[k2];
          if (cur < 0 || model_.requests[requests_[k2]].fixed) continue;
          const int r2 = requests_[k2];
          if (!shares(segs, segments_of(r2, cur))) continue;
          tracker_.Remove(r2, cur);
          if (tracker_.Fits(r, c)) {
            tracker_.Add(r, c);
            const int nc2 = static_cast<int>(model_.requests[r2].candidates.size());
            for (int c2 = 0; c2 < nc2; ++c2) {
              if (c2 != cur && tracker_.Fits(r2, c2)) {
                tracker_.Add(r2, c2);
                choice[k] = c;
                choice[k2] = c2;
                return true;
              }
            }
            tracker_.Remove(r, c);
          }
          tracker_.Add(r2, cur);
        }
      }
    }
    return false;
  }

  // Bound changes relative to the root, applied in order.
  using Changes = std::vector<std::tuple<int, double, double>>;

  struct Branched {
    int column = -1;
    bool up = false;
    // How far the column was moved.
    double delta = 0;
    double parent_bound = 0;
  };

  struct OpenNode {
    double bound;
    Changes changes;
    // The branching that created the node, for the pseudocosts.
    Branched from;
    bool operator<(const OpenNode& other) const { return bound < other.bound; }
  };

  bool HaveIncumbent() const { return best_value_ != std::numeric_limits<std::int64_t>::min(); }

  bool Prunable(double bound) const {
    return HaveIncumbent() && bound < static_cast<double>(best_value_) + 1.0 - 1e-3;
  }

  void Apply(const Changes& changes) {
    for (const auto& [j, lo, hi] : applied_)
      lp_->SetColumnBounds(j, root_lower_[j], root_upper_[j]);
    for (const auto& [j, lo, hi] : changes) lp_->SetColumnBounds(j, lo, hi);
    applied_ = changes;
  }

  // Best-bound search; each popped node is followed by a dive along the up
  // branches, leaving the down branches in the queue.
  void Search() {
    root_lower_.resize(num_x_);
    root_upper_.resize(num_x_);
    for (int j = 0; j < num_x_; ++j) {
      root_lower_[j] = lp_->column_lower(j);
      root_upper_[j] = lp_->column_upper(j);
    }
    pseudo_.assign(num_x_, {});
    const int first_cut = lp_->num_rows();
    root_bound_ = TrivialBound();
    RootCuts();
    if (lp_->num_rows() > first_cut) {
      lp_->Solve(200000, deadline_);
      lp_->RemoveSlackRows(first_cut);
    }
    root_rows_ = lp_->num_rows();
    std::priority_queue<OpenNode> open;
    open.push({root_bound_, {}, {}});
    while (!open.empty()) {
      OpenNode node = open.top();
      open.pop();
      if (Prunable(node.bound)) break;
      std::optional<OpenNode> sibling;
      Enter(node, changes_);
      for (;;) {
        if (stats_.nodes >= max_nodes_ || Clock::now() > deadline_) {
          proven_ = false;
          lost_bound_ = std::max(lost_bound_, parent_bound_);
          if (sibling) lost_bound_ = std::max(lost_bound_, sibling->bound);
          if (!open.empty()) lost_bound_ = std::max(lost_bound_, open.top().bound);
          return;
        }
        ++stats_.nodes;
        NodeResult res;
        if (!Process(changes_, from_, res)) {
          // Back up to the sibling of the closed node.
          if (!sibling || Prunable(sibling->bound)) break;
          Enter(*sibling, changes_);
          sibling.reset();
          continue;
        }
        if (sibling) open.push(std::move(*sibling));
        OpenNode down{res.down_bound, changes_, {res.branch, false, res.value, res.bound}};
        down.changes.emplace_back(res.branch, 0.0, 0.0);
        OpenNode up{res.up_bound, changes_, {res.branch, true, 1.0 - res.value, res.bound}};
        up.changes.emplace_back(res.branch, 1.0, 1.0);
        if (res.up_bound >= res.down_bound) {
          sibling = std::move(down);
          Enter(up, changes_);
        } else {
          sibling = std::move(up);
          Enter(down, changes_);
        }
      }
    }
  }

  void Enter(OpenNode& node, Changes& changes) {
    Apply(node.changes);
    changes = std::move(node.changes);
    parent_bound_ = node.bound;
    from_ = node.from;
  }

  // Rounds of cuts at the root until none is violated or the bound stalls.
  // Reduced-cost fixings against the incumbent are made global here, since
  // every later node is a subproblem of the root.
  void RootCuts() {
    double last = kInf;
    int stalls = 0;
    for (int round = 0; round < 100 && Clock::now() <= deadline_; ++round) {
      if (lp_->Solve(200000, deadline_) != internal::DualSimplex::Status::kOptimal) return;
      std::vector<double> x(num_x_);
      bool integral = true;
      for (int j = 0; j < num_x_; ++j) {
        x[j] = lp_->value(j);
        if (x[j] > kIntTol && x[j] < 1.0 - kIntTol) integral = false;
      }
      if (integral) return;
      TryGreedy(&x);
      std::vector<double> reduced;
      const double bound = -lp_->DualBound(&reduced) * scale_;
      root_bound_ = std::min(root_bound_, bound);
      if (Prunable(bound)) return;
      int fixed = 0;
      if (HaveIncumbent()) {
        const double slack = bound - (static_cast<double>(best_value_) + 1.0 - 1e-3);
        for (int j = 0; j < num_x_; ++j) {
          if (root_lower_[j] == root_upper_[j]) continue;
          const double dj = reduced[j] * scale_;
          if (dj > slack) {
            root_upper_[j] = root_lower_[j];
          } else if (-dj > slack) {
            root_lower_[j] = root_upper_[j];
          } else {
            continue;
          }
          lp_->SetColumnBounds(j, root_lower_[j], root_upper_[j]);
          ++fixed;
        }
      }
      const double gap = HaveIncumbent() ? bound - static_cast<double>(best_value_) : bound;
      if (fixed == 0 && last - bound < 0.005 * gap) {
        if (++stalls >= 5) return;
      } else {
        stalls = 0;
      }
      last = bound;
      const int added = SeparateCovers(x) + SeparateGomory(50);
      lp_->AddRows(pending_);
      pending_.clear();
      stats_.cuts += added;
      if (added == 0 && fixed == 0) return;
    }
  }

  struct NodeResult {
    int branch = -1;
    double value = 0;
    double bound = 0;
    double down_bound = 0;
    double up_bound = 0;
  };

  void RecordPseudocost(const Branched& from, double bound) {
    if (from.column < 0 || from.delta <= 0) return;
    const double per = std::max(0.0, from.parent_bound - bound) / from.delta;
    Pseudocost& pc = pseudo_[from.column];
    pc.sum[from.up] += per;
    ++pc.count[from.up];
    pc_sum_[from.up] += per;
    ++pc_count_[from.up];
  }

  double PseudocostRate(int j, bool up) const {
    const Pseudocost& pc = pseudo_[j];
    if (pc.count[up] > 0) return pc.sum[up] / pc.count[up];
    return pc_count_[up] > 0 ? pc_sum_[up] / pc_count_[up] : 1.0;
  }

  // Bound of the node with column j held at v, from a short dual simplex run;
  // -inf when that child is infeasible.
  double TrialBound(int j, double v, double lo, double hi, double bound) {
    lp_->SetColumnBounds(j, v, v);
    const auto status = lp_->Solve(kStrongIterations, deadline_);
    double child = bound;
    if (status == internal::DualSimplex::Status::kInfeasible) {
      child = -kInf;
    } else if (status != internal::DualSimplex::Status::kTimeLimit) {
      child = std::min(bound, -lp_->DualBound() * scale_);
    }
    lp_->SetColumnBounds(j, lo, hi);
    return child;
  }

  // Solves the current node. Returns true with a branching column when the
  // node stays open; may append fixings to `changes`.
  bool Process(Changes& changes, const Branched& from, NodeResult& res) {
    int cut_passes = 0;
    for (int pass = 0;; ++pass) {
      const auto status = lp_->Solve(200000, deadline_);
      if (status == internal::DualSimplex::Status::kInfeasible) {
        return false;
      }
      if (status != internal::DualSimplex::Status::kOptimal) {
        proven_ = false;
        lost_bound_ = std::max(lost_bound_, parent_bound_);
        return false;
      }
      std::vector<double> x(num_x_);
      std::vector<int> fractional;
      for (int j = 0; j < num_x_; ++j) {
        x[j] = lp_->value(j);
        if (x[j] > kIntTol && x[j] < 1.0 - kIntTol) fractional.push_back(j);
      }
      if (lp_->num_rows() > root_rows_ + kMaxNodeCuts) lp_->RemoveSlackRows(root_rows_);
      std::vector<double> reduced;
      const double bound = -lp_->DualBound(&reduced) * scale_;
      if (pass == 0) RecordPseudocost(from, bound);
      if (fractional.empty()) {
        std::vector<int> choice(requests_.size(), -1);
        for (int j = 0; j < num_x_; ++j) {
          if (x[j] >= 1.0 - kIntTol) choice[owner_[j]] = rank_[j];
        }
        if (Feasible(choice)) {
          Offer(choice);
        } else {
          proven_ = false;
          lost_bound_ = std::max(lost_bound_, parent_bound_);
        }
        return false;
      }
      if (pass == 0 && stats_.nodes % 64 == 1) TryGreedy(&x);
      if (Prunable(bound)) return false;
      // Fixings belong to this subtree; the next Apply() undoes them.
      auto fix = [&](int j, double v) {
        changes.emplace_back(j, v, v);
        applied_.emplace_back(j, v, v);
        lp_->SetColumnBounds(j, v, v);
      };
      int fixed = 0;
      if (HaveIncumbent()) {
        // Columns whose move alone would push the bound under the incumbent
        // stay where they are in this subtree.
        const double slack = bound - (static_cast<double>(best_value_) + 1.0 - 1e-3);
        for (int j = 0; j < num_x_; ++j) {
          const double lo = lp_->column_lower(j);
          const double hi = lp_->column_upper(j);
          if (lo == hi) continue;
          const double dj = reduced[j] * scale_;
          if (dj > slack) {
            fix(j, lo);
            ++fixed;
          } else if (-dj > slack) {
            fix(j, hi);
            ++fixed;
          }
        }
      }
      if (fixed > 0 && pass < kMaxPasses) continue;
      if (cut_passes < kNodeCutPasses && SeparateCovers(x, false) > 0) {
        ++cut_passes;
        lp_->AddRows(pending_);
        pending_.clear();
        continue;
      }

      // Product score on the estimated bound drops. Columns without enough
      // history get a trial solve in each direction.
      struct Candidate {
        int j;
        double down;
        double up;
        bool reliable;
      };
      std::vector<Candidate> cands;
      for (int j : fractional) {
        if (lp_->column_lower(j) == lp_->column_upper(j)) continue;
        const Pseudocost& pc = pseudo_[j];
        cands.push_back({j, PseudocostRate(j, false) * x[j],
                         PseudocostRate(j, true) * (1.0 - x[j]),
                         std::min(pc.count[0], pc.count[1]) >= kReliable});
      }
      if (cands.empty()) continue;
      auto score = [](const Candidate& c) {
        return std::max(c.down, 1e-6) * std::max(c.up, 1e-6);
      };
      std::sort(cands.begin(), cands.end(), [&](const Candidate& a, const Candidate& b) {
        if (score(a) != score(b)) return score(a) > score(b);
        return a.j < b.j;
      });
      bool closed = false;
      bool tightened = false;
      std::vector<std::pair<double, double>> trial(cands.size(), {bound, bound});
      int trials = 0;
      for (std::size_t k = 0; k < cands.size() && trials < kMaxStrong; ++k) {
        Candidate& c = cands[k];
        if (c.reliable) continue;
        ++trials;
        const double lo = lp_->column_lower(c.j);
        const double hi = lp_->column_upper(c.j);
        const double down = TrialBound(c.j, 0.0, lo, hi, bound);
        const double up = TrialBound(c.j, 1.0, lo, hi, bound);
        if (down > -kInf) RecordPseudocost({c.j, false, x[c.j], bound}, down);
        if (up > -kInf) RecordPseudocost({c.j, true, 1.0 - x[c.j], bound}, up);
        const bool down_dead = down == -kInf || Prunable(down);
        const bool up_dead = up == -kInf || Prunable(up);
        if (down_dead && up_dead) {
          closed = true;
          break;
        }
        if (down_dead) {
          fix(c.j, 1.0);
          tightened = true;
        } else if (up_dead) {
          fix(c.j, 0.0);
          tightened = true;
        }
        c.down = bound - down;
        c.up = bound - up;
        trial[k] = {down, up};
      }
      if (closed) return false;
      if (tightened && pass < kMaxPasses) continue;
      std::size_t pick = 0;
      for (std::size_t k = 1; k < cands.size(); ++k) {
        if (score(cands[k]) > score(cands[pick])) pick = k;
      }
      res.branch = cands[pick].j;
      res.value = x[res.branch];
      res.bound = bound;
      res.down_bound = std::min(bound, trial[pick].first);
      res.up_bound = std::min(bound, trial[pick].second);
      if (tightened) {
        // The pick may have been fixed by a trial of its own.
        if (lp_->column_lower(res.branch) == lp_->column_upper(res.branch)) continue;
      }
      return true;
    }
  }

  const OptModel& model_;
  const Presolve& pre_;
  Tracker& tracker_;
  std::vector<int> requests_;
  Clock::time_point deadline_;
  std::int64_t max_nodes_;
  SolveStats& stats_;

  std::optional<internal::DualSimplex> lp_;
  double scale_ = 1.0;
  int num_x_ = 0;
  std::unordered_map<int, int> local_of_;
  std::vector<int> first_column_;
  std::vector<int> owner_;
  std::vector<int> rank_;
  std::vector<double> root_lower_;
  std::vector<double> root_upper_;
  Changes applied_;
  std::vector<Knapsack> knapsacks_;
  std::set<std::vector<int>> cut_keys_;
  std::vector<internal::DualSimplex::Row> pending_;
  std::vector<int> best_;
  std::int64_t best_value_ = 0;
  bool proven_ = true;
  double parent_bound_ = kInf;
  struct Pseudocost {
    double sum[2] = {0, 0};
    int count[2] = {0, 0};
  };
  std::vector<Pseudocost> pseudo_;
  Changes changes_;
  Branched from_;
  double pc_sum_[2] = {0, 0};
  int pc_count_[2] = {0, 0};
  // Largest bound over the subtrees given up on.
  double lost_bound_ = -kInf;
  double root_bound_ = kInf;
  int root_rows_ = 0;
};

void FillCapacities(const OptModel& model, Assignment& a) {
  Tracker tracker(model);
  for (std::size_t r = 0; r < a.choice.size(); ++r) {
    if (a.choice[r] >= 0) tracker.Add(static_cast<int>(r), a.choice[r]);
  }
  a.block_capacity.resize(model.blocks.size());
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    a.block_capacity[b] = CapacityVector::Max(model.blocks[b].reservation,
                                              tracker.load(static_cast<int>(b)));
  }
  a.scaled_objective = 0;
  for (std::size_t r = 0; r < a.choice.size(); ++r) {
    if (a.choice[r] >= 0) {
      a.scaled_objective += model.ScaledPrice(static_cast<int>(r), a.choice[r]);
    }
  }
}

std::string LpName(std::string_view prefix, std::string_view id, std::size_t index) {
  std::string out(prefix);
  for (char ch : id) {
    out += (std::isalnum(static_cast<unsigned char>(ch)) != 0) ? ch : '_';
  }
  out += '#';
  out += std::to_string(index);
  return out;
}

}  // namespace

Price PriceCoefficient(int priority, int rank, std::int64_t num_requests,
                       std::int64_t max_candidates) {
  if (priority < 1) throw InvalidInput("priority weight must be at least 1");
  if (rank < 0) throw InvalidInput("rank must be non-negative");
  Price p;
  p.denominator = num_requests * max_candidates + 1;
  p.numerator = static_cast<std::int64_t>(priority) * p.denominator - rank;
  return p;
}

FormalSize OptModel::size() const {
  FormalSize f;
  for (const ModelRequest& r : requests) {
    f.binaries += static_cast<std::int64_t>(r.candidates.size());
    ++f.family[r.fixed ? 1 : 0];
  }
  const auto nb = static_cast<std::int64_t>(blocks.size());
  const auto ns = static_cast<std::int64_t>(segments.size());
  f.integers = kCapacityDimensions * nb;
  f.family[2] = kCapacityDimensions * nb;
  f.family[3] = kCapacityDimensions * ns;
  f.family[4] = kCapacityDimensions * nb;
  return f;
}

std::int64_t OptModel::ScaledPrice(int r, int rank) const {
  return static_cast<std::int64_t>(requests[r].priority) * denominator - rank;
}

OptModel BuildModel(const NetworkState& state, std::span<const CandidateSet> candidates) {
  OptModel model;
  std::unordered_map<RequestIndex, int> in_model;
  for (const CandidateSet& set : candidates) {
    const Request& req = state.request(set.request);
    if (!req.alive) throw InvalidInput("request " + req.id + " is cancelled");
    if (req.manual) throw InvalidInput("manual request " + req.id + " cannot be optimized");
    if (!in_model.emplace(set.request, static_cast<int>(model.requests.size())).second) {
      throw InvalidInput("request " + req.id + " appears twice");
    }
    ModelRequest m;
    m.request = set.request;
    m.id = req.id;
    m.priority = req.priority;
    m.fixed = set.fixed;
    m.demand = req.demand;
    m.candidates = set.chains;
    if (req.HoldsCapacity() && !req.chain.empty()) {
      auto it = std::find(m.candidates.begin(), m.candidates.end(), req.chain);
      if (it == m.candidates.end() && m.fixed) {
        m.candidates.push_back(req.chain);
        it = m.candidates.end() - 1;
      }
      if (it != m.candidates.end()) m.current = static_cast<int>(it - m.candidates.begin());
    }
    if (m.fixed && m.candidates.empty()) {
      throw InvalidInput("fixed request " + req.id + " has no candidate chain");
    }
    model.requests.push_back(std::move(m));
  }
  std::size_t max_candidates = 0;
  for (const ModelRequest& m : model.requests) {
    max_candidates = std::max(max_candidates, m.candidates.size());
  }
  model.denominator =
      static_cast<std::int64_t>(model.requests.size() * max_candidates) + 1;

  std::map<BlockIndex, int> block_pos;
  for (const ModelRequest& m : model.requests) {
    for (const TransportChain& c : m.candidates) {
      for (BlockIndex b : c.blocks) block_pos.emplace(b, 0);
    }
  }
  std::map<SegmentIndex, int> segment_pos;
  for (auto& [b, pos] : block_pos) {
    pos = static_cast<int>(model.blocks.size());
    ModelBlock mb;
    mb.block = b;
    mb.reservation = state.block(b).reservation;
    mb.fixed_load = state.BlockLoad(b);
    model.blocks.push_back(mb);
    for (SegmentIndex s : state.block(b).segments) segment_pos.emplace(s, 0);
  }
  for (auto& [s, pos] : segment_pos) {
    pos = static_cast<int>(model.segments.size());
    ModelSegment ms;
    ms.segment = s;
    ms.adjusted = AdjustedSegmentCapacity(state, s);
    model.segments.push_back(ms);
  }

  // Usage of model requests is decided by the model, not fixed.
  std::unordered_map<BlockIndex, CapacityVector> moving;
  for (const ModelRequest& m : model.requests) {
    const Request& req = state.request(m.request);
    if (!req.HoldsCapacity()) continue;
    for (BlockIndex b : req.chain.blocks) moving[b] += req.demand;
  }
  for (ModelBlock& mb : model.blocks) {
    auto it = moving.find(mb.block);
    if (it != moving.end()) mb.fixed_load = Positive(mb.fixed_load - it->second);
  }
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    for (SegmentIndex s : state.block(model.blocks[i].block).segments) {
      const int sp = segment_pos.at(s);
      model.blocks[i].segments.push_back(sp);
      model.segments[sp].blocks.push_back(static_cast<int>(i));
    }
  }
  for (ModelSegment& ms : model.segments) {
    for (BlockIndex b : state.SegmentBlocks(ms.segment)) {
      if (block_pos.contains(b)) continue;
      CapacityVector load = state.BlockLoad(b);
      auto it = moving.find(b);
      if (it != moving.end()) load = Positive(load - it->second);
      ms.outside += CapacityVector::Max(state.block(b).reservation, load);
    }
  }
  for (ModelRequest& m : model.requests) {
    for (const TransportChain& c : m.candidates) {
      std::vector<int> blocks;
      for (BlockIndex b : c.blocks) blocks.push_back(block_pos.at(b));
      m.candidate_blocks.push_back(std::move(blocks));
    }
  }
  return model;
}

int Assignment::routed_count() const {
  return static_cast<int>(
      std::count_if(choice.begin(), choice.end(), [](int c) { return c >= 0; }));
}

std::vector<std::pair<RequestIndex, TransportChain>> Assignment::Routed(
    const OptModel& model) const {
  std::vector<std::pair<RequestIndex, TransportChain>> out;
  for (std::size_t r = 0; r < choice.size(); ++r) {
    if (choice[r] >= 0) {
      out.emplace_back(model.requests[r].request, model.requests[r].candidates[choice[r]]);
    }
  }
  return out;
}

std::vector<RequestIndex> Assignment::Unrouted(const OptModel& model) const {
  std::vector<RequestIndex> out;
  for (std::size_t r = 0; r < choice.size(); ++r) {
    if (choice[r] < 0) out.push_back(model.requests[r].request);
  }
  return out;
}

Assignment Solve(const OptModel& model, const SolveOptions& options) {
  const auto start = Clock::now();
  const auto deadline =
      start + std::chrono::duration_cast<Clock::duration>(
                  std::chrono::duration<double>(options.time_budget_seconds));
  Assignment result;
  result.choice.assign(model.requests.size(), -1);
  result.proven_optimal = true;
  const Presolve pre = RunPresolve(model);

  const int nr = static_cast<int>(model.requests.size());
  UnionFind uf(nr);
  std::vector<std::vector<int>> block_users(model.blocks.size());
  for (int r = 0; r < nr; ++r) {
    const auto& chains = model.requests[r].candidate_blocks;
    for (std::size_t c = 0; c < chains.size(); ++c) {
      if (!pre.alive[r][c]) continue;
      for (int b : chains[c]) {
        if (block_users[b].empty() || block_users[b].back() != r) block_users[b].push_back(r);
      }
    }
  }
  std::vector<bool> constrained(nr, false);
  for (std::size_t s = 0; s < model.segments.size(); ++s) {
    if (!pre.row_kept[s][0] && !pre.row_kept[s][1]) continue;
    int first = -1;
    for (int b : model.segments[s].blocks) {
      for (int r : block_users[b]) {
        constrained[r] = true;
        if (first < 0) {
          first = r;
        } else {
          uf.Unite(first, r);
        }
      }
    }
  }
  std::map<int, std::vector<int>> components;
  for (int r = 0; r < nr; ++r) {
    if (model.requests[r].candidates.empty()) continue;
    if (!constrained[r]) {
      result.choice[r] = 0;
      continue;
    }
    components[uf.Find(r)].push_back(r);
  }

  Tracker tracker(model);
  for (int r = 0; r < nr; ++r) {
    if (result.choice[r] >= 0) tracker.Add(r, result.choice[r]);
  }
  result.stats.components = static_cast<int>(components.size());
  result.stats.dominated_columns = pre.dominated;
  // Smallest first; each takes an even share of the time left, so what the
  // quick ones leave over goes to the larger ones.
  std::vector<std::vector<int>> order;
  for (auto& [root, members] : components) order.push_back(std::move(members));
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.size() < b.size(); });
  double component_bound = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const std::vector<int>& members = order[i];
    bool proven = true;
    bool feasible = true;
    const auto now = Clock::now();
    const auto share = now >= deadline ? Clock::duration::zero()
                                        : (deadline - now) / static_cast<int>(order.size() - i);
    ComponentSolver solver(model, pre, tracker, members, now + share, options.max_nodes,
                           result.stats);
    const std::vector<int> choice = solver.Run(proven, feasible);
    component_bound += solver.Bound();
    for (std::size_t k = 0; k < members.size(); ++k) {
      result.choice[members[k]] = choice[k];
      if (choice[k] >= 0 && feasible) tracker.Add(members[k], choice[k]);
    }
    result.proven_optimal = result.proven_optimal && proven;
    result.feasible = result.feasible && feasible;
  }
  FillCapacities(model, result);
  // Requests outside every component sit on their best chain.
  result.scaled_bound = component_bound;
  for (int r = 0; r < nr; ++r) {
    if (!model.requests[r].candidates.empty() && !constrained[r]) {
      result.scaled_bound += static_cast<double>(model.ScaledPrice(r, 0));
    }
  }
  if (result.proven_optimal) result.scaled_bound = static_cast<double>(result.scaled_objective);
  result.stats.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  return result;
}

Assignment BruteForceSolve(const OptModel& model) {
  std::size_t total = 0;
  for (const ModelRequest& r : model.requests) total += r.candidates.size();
  if (total > static_cast<std::size_t>(kBruteForceLimit)) {
    throw InvalidInput("brute force refused: " + std::to_string(total) + " candidates");
  }
  const int nr = static_cast<int>(model.requests.size());
  Tracker tracker(model);
  std::vector<int> choice(nr, -1);
  std::vector<int> best;
  std::int64_t best_value = 0;
  bool found = false;
  auto recurse = [&](auto&& self, int r, std::int64_t value) -> void {
    if (r == nr) {
      if (!found || value > best_value) {
        found = true;
        best_value = value;
        best = choice;
      }
      return;
    }
    const ModelRequest& req = model.requests[r];
    for (int c = 0; c < static_cast<int>(req.candidates.size()); ++c) {
      if (!tracker.Fits(r, c)) continue;
      tracker.Add(r, c);
      choice[r] = c;
      self(self, r + 1, value + model.ScaledPrice(r, c));
      tracker.Remove(r, c);
      choice[r] = -1;
    }
    if (!req.fixed) self(self, r + 1, value);
  };
  recurse(recurse, 0, 0);
  Assignment result;
  result.proven_optimal = found;
  result.feasible = found;
  result.choice = found ? best : std::vector<int>(nr, -1);
  FillCapacities(model, result);
  return result;
}

std::vector<std::string> VerifyAssignment(const OptModel& model, const Assignment& a) {
  std::vector<std::string> errors;
  if (a.choice.size() != model.requests.size()) {
    errors.push_back("choice vector size mismatch");
    return errors;
  }
  std::vector<CapacityVector> load(model.blocks.size());
  for (std::size_t b = 0; b < model.blocks.size(); ++b) load[b] = model.blocks[b].fixed_load;
  std::int64_t objective = 0;
  for (std::size_t r = 0; r < model.requests.size(); ++r) {
    const ModelRequest& req = model.requests[r];
    const int c = a.choice[r];
    if (c >= static_cast<int>(req.candidates.size())) {
      errors.push_back("request " + req.id + " chooses a missing candidate");
      continue;
    }
    if (req.fixed && c < 0) errors.push_back("fixed request " + req.id + " unrouted");
    if (c < 0) continue;
    objective += model.ScaledPrice(static_cast<int>(r), c);
    for (int b : req.candidate_blocks[c]) load[b] += req.demand;
  }
  if (objective != a.scaled_objective) errors.push_back("objective mismatch");
  if (a.block_capacity.size() != model.blocks.size()) {
    errors.push_back("capacity vector size mismatch");
    return errors;
  }
  for (std::size_t b = 0; b < model.blocks.size(); ++b) {
    if (!load[b].FitsIn(a.block_capacity[b])) {
      errors.push_back("block #" + std::to_string(b) + " capacity below utilization");
    }
    if (!model.blocks[b].reservation.FitsIn(a.block_capacity[b])) {
      errors.push_back("block #" + std::to_string(b) + " capacity below reservation");
    }
  }
  for (std::size_t s = 0; s < model.segments.size(); ++s) {
    CapacityVector sum;
    for (int b : model.segments[s].blocks) sum += a.block_capacity[b];
    if (!sum.FitsIn(model.SegmentBound(static_cast<int>(s)))) {
      errors.push_back("segment #" + std::to_string(s) + " over capacity");
    }
  }
  return errors;
}

void OptModel::WriteLp(std::ostream& out, const NetworkState& state) const {
  static constexpr const char* kDim[] = {"w", "l"};
  auto x_name = [&](std::size_t r, std::size_t c) {
    return LpName("x_", requests[r].id, r) + "_" + std::to_string(c);
  };
  auto cap_name = [&](std::size_t b, int dim) {
    return LpName("cap_", state.block(blocks[b].block).id, b) + "_" + kDim[dim];
  };
  out << "\\ throughput model, objective scaled by " << denominator << "\n";
  for (std::size_t r = 0; r < requests.size(); ++r) {
    for (std::size_t c = 0; c < requests[r].candidates.size(); ++c) {
      out << "\\ " << x_name(r, c) << ":";
      for (BlockIndex b : requests[r].candidates[c].blocks) out << ' ' << state.block(b).id;
      out << "\n";
    }
  }
  out << "Maximize\n obj:";
  bool any = false;
  for (std::size_t r = 0; r < requests.size(); ++r) {
    for (std::size_t c = 0; c < requests[r].candidates.size(); ++c) {
      out << " + " << ScaledPrice(static_cast<int>(r), static_cast<int>(c)) << ' '
          << x_name(r, c);
      any = true;
    }
  }
  if (!any) out << " 0";
  out << "\nSubject To\n";
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const ModelRequest& req = requests[r];
    if (req.candidates.empty()) continue;
    out << ' ' << (req.fixed ? "fix_" : "one_") << r << ":";
    for (std::size_t c = 0; c < req.candidates.size(); ++c) out << " + " << x_name(r, c);
    out << (req.fixed ? " = 1\n" : " <= 1\n");
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int dim = 0; dim < 2; ++dim) {
      out << " use_" << b << '_' << kDim[dim] << ": " << cap_name(b, dim);
      for (std::size_t r = 0; r < requests.size(); ++r) {
        const ModelRequest& req = requests[r];
        if (req.demand[dim] == 0) continue;
        for (std::size_t c = 0; c < req.candidate_blocks.size(); ++c) {
          const auto mult = std::count(req.candidate_blocks[c].begin(),
                                       req.candidate_blocks[c].end(), static_cast<int>(b));
          if (mult > 0) out << " - " << mult * req.demand[dim] << ' ' << x_name(r, c);
        }
      }
      out << " >= " << blocks[b].fixed_load[dim] << "\n";
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (int dim = 0; dim < 2; ++dim) {
      out << " seg_" << s << '_' << kDim[dim] << ":";
      for (int b : segments[s].blocks) out << " + " << cap_name(b, dim);
      out << " <= " << SegmentBound(static_cast<int>(s))[dim] << "\n";
    }
  }
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int dim = 0; dim < 2; ++dim) {
      out << " res_" << b << '_' << kDim[dim] << ": " << cap_name(b, dim)
          << " >= " << blocks[b].reservation[dim] << "\n";
    }
  }
  out << "Binaries\n";
  for (std::size_t r = 0; r < requests.size(); ++r) {
    for (std::size_t c = 0; c < requests[r].candidates.size(); ++c)
      out << ' ' << x_name(r, c) << "\n";
  }
  out << "Generals\n";
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    for (int dim = 0; dim < 2; ++dim) out << ' ' << cap_name(b, dim) << "\n";
  }
  out << "End\n";
}

}  // namespace chainplan
