#include "evsite/branch_bound.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <memory>
#include <numeric>
#include <optional>

namespace evsite {

namespace {

using Clock = std::chrono::steady_clock;

struct Presolved {
  bool infeasible = false;
  std::vector<double> lower, upper;             // full column space
  std::vector<std::size_t> free_columns;        // reduced -> full
  LpProblem lp;                                 // over free columns, maximize
  double objective_offset = 0.0;                // constant part of the reduced objective
  double granularity = 0.0;                      // reduced objective lattice spacing, 0 if none
};

double snap_integer_bound(double value, bool upper, double tol) {
  return upper ? std::floor(value + tol) : std::ceil(value - tol);
}

// Singleton-row bound tightening (which is how travel limits and forced
// stations appear), fixed-column substitution, and removal of equality-row
// multiples from the objective.
Presolved presolve(const MipProblem& p, double int_tol) {
  Presolved out;
  const std::size_t n = p.num_variables();
  out.lower.resize(n);
  out.upper.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    out.lower[j] = p.variables[j].lower;
    out.upper[j] = p.variables[j].upper;
    if (p.variables[j].integer) {
      out.lower[j] = snap_integer_bound(out.lower[j], false, int_tol);
      out.upper[j] = snap_integer_bound(out.upper[j], true, int_tol);
    }
    if (out.lower[j] > out.upper[j]) {
      out.infeasible = true;
      return out;
    }
  }
  auto is_fixed = [&](std::size_t j) { return out.lower[j] == out.upper[j]; };

  std::vector<char> active(p.rows.size(), 1);
  bool changed = true;
  while (changed && !out.infeasible) {
    changed = false;
    for (std::size_t r = 0; r < p.rows.size(); ++r) {
      if (!active[r]) continue;
      const LinearRow& row = p.rows[r];
      double fixed_activity = 0.0;
      int free_count = 0;
      std::size_t free_pos = 0;
      for (std::size_t q = 0; q < row.index.size(); ++q) {
        const auto j = static_cast<std::size_t>(row.index[q]);
        if (is_fixed(j)) {
          fixed_activity += row.coef[q] * out.lower[j];
        } else {
          ++free_count;
          free_pos = q;
        }
      }
      if (free_count == 0) {
        LinearRow check = row;
        if (!row_satisfied(check, fixed_activity, 1e-9)) {
          out.infeasible = true;
          return out;
        }
        active[r] = 0;
        changed = true;
        continue;
      }
      if (free_count > 1) continue;
      const auto j = static_cast<std::size_t>(row.index[free_pos]);
      const double a = row.coef[free_pos];
      const double limit = (row.rhs - fixed_activity) / a;
      bool tighten_upper = row.sense == RowSense::Equal || ((row.sense == RowSense::LessEqual) == (a > 0));
      bool tighten_lower = row.sense == RowSense::Equal || ((row.sense == RowSense::LessEqual) != (a > 0));
      double lo = out.lower[j], hi = out.upper[j];
      if (tighten_upper) hi = std::min(hi, p.variables[j].integer ? snap_integer_bound(limit, true, int_tol) : limit);
      if (tighten_lower) lo = std::max(lo, p.variables[j].integer ? snap_integer_bound(limit, false, int_tol) : limit);
      if (lo > hi + 1e-9 * std::max(1.0, std::abs(hi))) {
        out.infeasible = true;
        return out;
      }
      out.lower[j] = lo;
      out.upper[j] = std::max(lo, hi);
      active[r] = 0;
      changed = true;
    }
  }

  // Activity-range check on what remains.
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    if (!active[r]) continue;
    const LinearRow& row = p.rows[r];
    double min_act = 0.0, max_act = 0.0;
    for (std::size_t q = 0; q < row.index.size(); ++q) {
      const auto j = static_cast<std::size_t>(row.index[q]);
      const double a = row.coef[q];
      min_act += a > 0 ? a * out.lower[j] : a * out.upper[j];
      max_act += a > 0 ? a * out.upper[j] : a * out.lower[j];
    }
    const double slack = 1e-9 * std::max(1.0, std::abs(row.rhs));
    if ((row.sense != RowSense::GreaterEqual && min_act > row.rhs + slack) ||
        (row.sense != RowSense::LessEqual && max_act < row.rhs - slack)) {
      out.infeasible = true;
      return out;
    }
  }

  std::vector<long> reduced_of(n, -1);
  for (std::size_t j = 0; j < n; ++j) {
    if (!is_fixed(j)) {
      reduced_of[j] = static_cast<long>(out.free_columns.size());
      out.free_columns.push_back(j);
    }
  }
  const double sign = p.maximize ? 1.0 : -1.0;
  std::vector<double> cost(n);
  for (std::size_t j = 0; j < n; ++j) cost[j] = sign * p.objective[j];
  for (std::size_t j = 0; j < n; ++j) {
    if (is_fixed(j)) out.objective_offset += cost[j] * out.lower[j];
  }

  std::vector<LinearRow> kept;
  for (std::size_t r = 0; r < p.rows.size(); ++r) {
    if (!active[r]) continue;
    const LinearRow& row = p.rows[r];
    LinearRow reduced;
    reduced.name = row.name;
    reduced.sense = row.sense;
    reduced.rhs = row.rhs;
    for (std::size_t q = 0; q < row.index.size(); ++q) {
      const auto j = static_cast<std::size_t>(row.index[q]);
      if (reduced_of[j] < 0) {
        reduced.rhs -= row.coef[q] * out.lower[j];
      } else {
        reduced.add(static_cast<int>(reduced_of[j]), row.coef[q]);
      }
    }
    kept.push_back(std::move(reduced));
  }

  std::vector<double> rcost(out.free_columns.size());
  for (std::size_t c = 0; c < rcost.size(); ++c) rcost[c] = cost[out.free_columns[c]];
  // c x = (c - lambda a) x + lambda b on every feasible point of an equality row.
  for (const LinearRow& row : kept) {
    if (row.sense != RowSense::Equal || row.index.empty()) continue;
    const double lambda = rcost[row.index[0]] / row.coef[0];
    if (lambda == 0.0) continue;
    bool proportional = true;
    for (std::size_t q = 0; q < row.index.size() && proportional; ++q) {
      const double expect = lambda * row.coef[q];
      proportional = std::abs(rcost[row.index[q]] - expect) <= 1e-12 * std::max(1.0, std::abs(expect));
    }
    if (!proportional) continue;
    for (int c : row.index) rcost[c] = 0.0;
    out.objective_offset += lambda * row.rhs;
  }

  // Lattice spacing of the remaining objective when it only touches integer
  // columns with integral coefficients.
  std::int64_t gcd = 0;
  bool integral = true;
  for (std::size_t c = 0; c < rcost.size() && integral; ++c) {
    if (rcost[c] == 0.0) continue;
    const MipVariable& var = p.variables[out.free_columns[c]];
    const double rounded = std::round(rcost[c]);
    if (!var.integer || std::abs(rcost[c] - rounded) > 1e-9 * std::max(1.0, std::abs(rounded)) ||
        std::abs(rounded) > 9e15) {
      integral = false;
      break;
    }
    gcd = std::gcd(gcd, static_cast<std::int64_t>(std::abs(rounded)));
  }
  out.granularity = integral ? static_cast<double>(gcd) : 0.0;

  out.lp.objective = rcost;
  out.lp.lower.resize(out.free_columns.size());
  out.lp.upper.resize(out.free_columns.size());
  for (std::size_t c = 0; c < out.free_columns.size(); ++c) {
    out.lp.lower[c] = out.lower[out.free_columns[c]];
    out.lp.upper[c] = out.upper[out.free_columns[c]];
  }
  out.lp.rows = std::move(kept);
  return out;
}

struct BoundChange {
  std::size_t column;  // reduced index
  double lower;
  double upper;
  std::shared_ptr<const BoundChange> parent;
};

struct Node {
  std::int64_t id = 0;
  std::int64_t parent_id = -1;
  int depth = 0;
  double bound = 0.0;  // parent LP value
  std::shared_ptr<const BoundChange> changes;
  std::shared_ptr<const Basis> warm;
};

struct BestBoundOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound < b.bound;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.id < b.id;
  }
};

}  // namespace

MipResult solve_mip(const MipProblem& problem, const SolveParams& params) {
  const auto start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - start).count(); };
  const double sign = problem.maximize ? 1.0 : -1.0;
  MipResult result;

  Presolved pre = presolve(problem, params.integrality_tolerance);
  if (pre.infeasible) {
    result.status = SolveStatus::Infeasible;
    result.wall_seconds = elapsed();
    return result;
  }

  const std::size_t nr = pre.free_columns.size();
  std::vector<char> is_int(nr);
  std::vector<int> priority(nr);
  for (std::size_t c = 0; c < nr; ++c) {
    is_int[c] = problem.variables[pre.free_columns[c]].integer;
    priority[c] = problem.variables[pre.free_columns[c]].branch_priority;
  }

  BoundedSimplex lp(pre.lp);
  double incumbent_value = -kInfinity;  // in the reduced maximize sense
  std::vector<double> incumbent_full;

  auto full_point = [&](const std::vector<double>& reduced) {
    std::vector<double> z(pre.lower);
    for (std::size_t c = 0; c < nr; ++c) {
      double v = reduced[c];
      if (is_int[c]) v = std::round(v);
      z[pre.free_columns[c]] = std::clamp(v, pre.lower[pre.free_columns[c]], pre.upper[pre.free_columns[c]]);
    }
    return z;
  };
  auto reduced_value = [&](const std::vector<double>& z) {
    long double sum = pre.objective_offset;
    for (std::size_t c = 0; c < nr; ++c) sum += static_cast<long double>(pre.lp.objective[c]) * z[pre.free_columns[c]];
    return static_cast<double>(sum);
  };
  auto prune_threshold = [&]() {
    double tol = std::max(params.absolute_gap, params.relative_gap * std::abs(incumbent_value));
    if (pre.granularity > 0) {
      tol = std::max(tol, pre.granularity - std::min(0.5 * pre.granularity, 1e-6 * std::max(1.0, std::abs(incumbent_value))));
    }
    return incumbent_value + tol;
  };

  std::vector<Node> open;
  bool best_bound_mode = false;
  std::int64_t next_id = 0;
  open.push_back(Node{next_id++, -1, 0, kInfinity, nullptr, nullptr});
  std::int64_t live_owner = -1;  // node whose final basis the solver holds
  bool limit_hit = false;

  auto global_bound = [&]() {
    double b = incumbent_value;
    for (const Node& n : open) b = std::max(b, n.bound);
    return b;
  };

  std::vector<double> lo_now(nr), hi_now(nr);
  while (!open.empty()) {
    if (result.nodes >= params.node_limit || elapsed() > params.time_limit_seconds) {
      limit_hit = true;
      break;
    }
    Node node;
    if (best_bound_mode) {
      std::pop_heap(open.begin(), open.end(), BestBoundOrder{});
      node = std::move(open.back());
      open.pop_back();
    } else {
      node = std::move(open.back());
      open.pop_back();
    }
    if (incumbent_value > -kInfinity && node.bound <= prune_threshold()) continue;

    // Node bounds: root bounds tightened along the branching path.
    for (std::size_t c = 0; c < nr; ++c) {
      lo_now[c] = pre.lp.lower[c];
      hi_now[c] = pre.lp.upper[c];
    }
    for (auto ch = node.changes; ch; ch = ch->parent) {
      lo_now[ch->column] = std::max(lo_now[ch->column], ch->lower);
      hi_now[ch->column] = std::min(hi_now[ch->column], ch->upper);
    }
    if (node.warm && node.parent_id != live_owner) lp.install_basis(*node.warm);
    for (std::size_t c = 0; c < nr; ++c) {
      if (lp.lower(c) != lo_now[c] || lp.upper(c) != hi_now[c]) lp.set_bounds(c, lo_now[c], hi_now[c]);
    }
    LpResult relax = lp.solve();
    live_owner = node.id;
    ++result.nodes;

    if (relax.status == LpStatus::Unbounded) {
      if (node.id == 0) throw std::runtime_error("LP relaxation is unbounded");
      continue;  // cannot happen below a bounded root; treat as pruned
    }
    if (relax.status == LpStatus::Infeasible) {
      if (params.record_bound_trace) result.bound_trace.push_back(global_bound());
      continue;
    }
    const double value = std::min(node.bound, relax.objective + pre.objective_offset);
    if (incumbent_value > -kInfinity && value <= prune_threshold()) {
      if (params.record_bound_trace) result.bound_trace.push_back(global_bound());
      continue;
    }

    // Branching candidate: lowest priority group, then most fractional.
    std::size_t branch = nr;
    double best_frac = 0.0;
    for (std::size_t c = 0; c < nr; ++c) {
      if (!is_int[c]) continue;
      const double v = relax.primal[c];
      const double frac = v - std::floor(v);
      const double dist = std::min(frac, 1.0 - frac);
      if (dist <= params.integrality_tolerance) continue;
      if (branch == nr || priority[c] < priority[branch] || (priority[c] == priority[branch] && dist > best_frac + 1e-12)) {
        branch = c;
        best_frac = dist;
      }
    }

    if (branch == nr) {
      std::vector<double> z = full_point(relax.primal);
      const double obj = reduced_value(z);
      if (obj > incumbent_value) {
        incumbent_value = obj;
        incumbent_full = std::move(z);
        if (!best_bound_mode) {
          best_bound_mode = true;
          std::make_heap(open.begin(), open.end(), BestBoundOrder{});
        }
      }
      if (params.record_bound_trace) result.bound_trace.push_back(global_bound());
      continue;
    }

    const double v = relax.primal[branch];
    auto basis = std::make_shared<const Basis>(relax.basis);
    Node down{next_id++, node.id, node.depth + 1, value,
              std::make_shared<const BoundChange>(BoundChange{branch, lo_now[branch], std::floor(v), node.changes}), basis};
    Node up{next_id++, node.id, node.depth + 1, value,
            std::make_shared<const BoundChange>(BoundChange{branch, std::ceil(v), hi_now[branch], node.changes}), basis};
    // Before the first incumbent the dive goes up, which only loosens the
    // opening, connector and coverage rows; afterwards the rounding side wins.
    const bool up_first = !best_bound_mode || v - std::floor(v) >= 0.5;
    if (best_bound_mode) {
      Node& first = up_first ? up : down;
      Node& second = up_first ? down : up;
      // Same bound and depth: the higher id pops first.
      if (first.id < second.id) std::swap(first.id, second.id);
      open.push_back(std::move(second));
      std::push_heap(open.begin(), open.end(), BestBoundOrder{});
      open.push_back(std::move(first));
      std::push_heap(open.begin(), open.end(), BestBoundOrder{});
    } else {
      open.push_back(std::move(up_first ? down : up));
      open.push_back(std::move(up_first ? up : down));
    }
    if (params.record_bound_trace) result.bound_trace.push_back(global_bound());
  }

  result.wall_seconds = elapsed();
  result.has_incumbent = incumbent_value > -kInfinity;
  if (result.has_incumbent) {
    result.incumbent = incumbent_full;
    long double obj = 0.0;
    for (std::size_t j = 0; j < incumbent_full.size(); ++j) {
      obj += static_cast<long double>(problem.objective[j]) * incumbent_full[j];
    }
    result.objective = static_cast<double>(obj);
  }
  if (limit_hit) {
    result.status = SolveStatus::TimedOut;
    // The reduced objective equals sign * objective on every feasible point.
    result.bound = sign * global_bound();
  } else if (result.has_incumbent) {
    result.status = SolveStatus::Optimal;
    result.bound = result.objective;
  } else {
    result.status = SolveStatus::Infeasible;
  }
  return result;
}

Solution extract_solution(const Instance& instance, const Scenario& scenario, const ModelLayout& L,
                          const MipResult& result) {
  if (!result.has_incumbent) return Solution::empty_for(instance, result.status);
  if (result.incumbent.size() != L.num_variables()) throw std::invalid_argument("incumbent does not match the layout");
  Solution s = Solution::empty_for(instance, result.status);
  auto as_int = [](double v) { return static_cast<std::int64_t>(std::llround(v)); };
  for (std::size_t j = 0; j < L.stations; ++j) {
    s.open[j] = static_cast<std::uint8_t>(as_int(result.incumbent[L.x(j)]));
    s.connectors[j] = as_int(result.incumbent[L.u(j)]);
  }
  for (std::size_t i = 0; i < L.demands; ++i) {
    for (std::size_t j = 0; j < L.stations; ++j) {
      s.cover(i, j) = static_cast<std::uint8_t>(as_int(result.incumbent[L.y(i, j)]));
      for (std::size_t k = 0; k < L.vehicle_types; ++k) s.assign(i, j, k) = as_int(result.incumbent[L.v(i, j, k)]);
    }
  }
  s.revenue = revenue_of_assignment(instance, s);
  s.cost = cost_of_solution(instance, s);
  s.profit = s.revenue - s.cost;
  AuditReport audit = audit_solution(instance, scenario, s);
  if (!audit.feasible) {
    std::string msg = "branch-and-bound incumbent failed the audit:";
    for (const auto& v : audit.violations) msg += std::string(" ") + to_string(v.family) + "[" + v.where + "]";
    throw AuditFailure(msg);
  }
  return s;
}

Solution solve_with_branch_bound(const Instance& instance, const Scenario& scenario, const SolveParams& params) {
  BuiltModel built = build_mip(instance, scenario);
  MipResult result = solve_mip(built.problem, params);
  return extract_solution(instance, scenario, built.layout, result);
}

}  // namespace evsite
