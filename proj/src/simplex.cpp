#include "evsite/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace evsite {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
  }
  return "unknown";
}

BoundedSimplex::BoundedSimplex(const LpProblem& problem, SimplexOptions options)
    : options_(options), n_(problem.num_variables()), m_(problem.rows.size()), width_(n_ + m_) {
  if (problem.lower.size() != n_ || problem.upper.size() != n_) {
    throw std::invalid_argument("bound vectors must match the objective length");
  }
  for (std::size_t j = 0; j < n_; ++j) {
    if (!std::isfinite(problem.objective[j])) throw std::invalid_argument("objective coefficient is not finite");
    if (std::isnan(problem.lower[j]) || std::isnan(problem.upper[j]) || problem.lower[j] > problem.upper[j]) {
      throw std::invalid_argument("variable " + std::to_string(j) + " has lower > upper");
    }
  }

  a_.assign(m_ * width_, 0.0);
  b_.assign(m_, 0.0);
  row_scale_.assign(m_, 1.0);
  lower_.assign(width_, 0.0);
  upper_.assign(width_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    lower_[j] = problem.lower[j];
    upper_[j] = problem.upper[j];
  }
  for (std::size_t i = 0; i < m_; ++i) {
    const LinearRow& row = problem.rows[i];
    if (!std::isfinite(row.rhs)) throw std::invalid_argument("row " + std::to_string(i) + " has a non-finite rhs");
    double biggest = 0.0;
    for (std::size_t p = 0; p < row.index.size(); ++p) {
      if (row.index[p] < 0 || static_cast<std::size_t>(row.index[p]) >= n_) {
        throw std::invalid_argument("row " + std::to_string(i) + " references an unknown column");
      }
      if (!std::isfinite(row.coef[p])) throw std::invalid_argument("row " + std::to_string(i) + " has a non-finite coefficient");
      biggest = std::max(biggest, std::abs(row.coef[p]));
    }
    const double scale = biggest > 0 ? 1.0 / biggest : 1.0;
    row_scale_[i] = scale;
    for (std::size_t p = 0; p < row.index.size(); ++p) a_[i * width_ + row.index[p]] += row.coef[p] * scale;
    a_[i * width_ + n_ + i] = 1.0;
    b_[i] = row.rhs * scale;
    switch (row.sense) {
      case RowSense::LessEqual: lower_[n_ + i] = 0.0; upper_[n_ + i] = kInfinity; break;
      case RowSense::GreaterEqual: lower_[n_ + i] = -kInfinity; upper_[n_ + i] = 0.0; break;
      case RowSense::Equal: lower_[n_ + i] = 0.0; upper_[n_ + i] = 0.0; break;
    }
  }

  double biggest_cost = 0.0;
  for (double c : problem.objective) biggest_cost = std::max(biggest_cost, std::abs(c));
  cost_scale_ = biggest_cost > 0 ? biggest_cost : 1.0;
  cost_.assign(width_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) cost_[j] = problem.objective[j] / cost_scale_;

  d_.assign(width_, 0.0);
  state_.assign(width_, VarState::AtLower);
  reset_to_slack_basis();
}

namespace {

VarState resting_state(double lower, double upper) {
  if (std::isfinite(lower)) return VarState::AtLower;
  if (std::isfinite(upper)) return VarState::AtUpper;
  return VarState::FreeZero;
}

// Keeps a nonbasic state consistent with (possibly changed) bounds.
VarState repair_state(VarState s, double lower, double upper) {
  switch (s) {
    case VarState::Basic: return s;
    case VarState::AtLower: return std::isfinite(lower) ? s : resting_state(lower, upper);
    case VarState::AtUpper: return std::isfinite(upper) ? s : resting_state(lower, upper);
    case VarState::FreeZero: return resting_state(lower, upper);
  }
  return s;
}

}  // namespace

void BoundedSimplex::reset_to_slack_basis() {
  tableau_ = a_;
  head_.resize(m_);
  for (std::size_t i = 0; i < m_; ++i) head_[i] = n_ + i;
  for (std::size_t j = 0; j < n_; ++j) state_[j] = resting_state(lower_[j], upper_[j]);
  for (std::size_t i = 0; i < m_; ++i) state_[n_ + i] = VarState::Basic;
  pivots_since_refactor_ = 0;
  recompute_basic_values();
}

double BoundedSimplex::nonbasic_value(std::size_t var) const {
  switch (state_[var]) {
    case VarState::AtLower: return lower_[var];
    case VarState::AtUpper: return upper_[var];
    default: return 0.0;
  }
}

void BoundedSimplex::recompute_basic_values() {
  beta_.assign(m_, 0.0);
  std::vector<double> xn(width_, 0.0);
  for (std::size_t j = 0; j < width_; ++j) {
    if (state_[j] != VarState::Basic) xn[j] = nonbasic_value(j);
  }
  for (std::size_t r = 0; r < m_; ++r) {
    const double* t = &tableau_[r * width_];
    double sum = 0.0;
    for (std::size_t i = 0; i < m_; ++i) sum += t[n_ + i] * b_[i];
    for (std::size_t j = 0; j < width_; ++j) {
      if (xn[j] != 0.0) sum -= t[j] * xn[j];
    }
    beta_[r] = sum;
  }
}

double BoundedSimplex::infeasibility(std::size_t var, double value) const {
  const double tol = options_.feasibility_tolerance;
  if (value < lower_[var] - tol * std::max(1.0, std::abs(lower_[var]))) return lower_[var] - value;
  if (value > upper_[var] + tol * std::max(1.0, std::abs(upper_[var]))) return value - upper_[var];
  return 0.0;
}

double BoundedSimplex::total_infeasibility() const {
  double sum = 0.0;
  for (std::size_t r = 0; r < m_; ++r) sum += infeasibility(head_[r], beta_[r]);
  return sum;
}

void BoundedSimplex::compute_reduced_costs(Phase phase) {
  std::vector<double> cb(m_, 0.0);
  for (std::size_t r = 0; r < m_; ++r) {
    const std::size_t var = head_[r];
    if (phase == Phase::Two) {
      cb[r] = cost_[var];
    } else if (infeasibility(var, beta_[r]) > 0.0) {
      cb[r] = beta_[r] < lower_[var] ? 1.0 : -1.0;
    }
  }
  for (std::size_t j = 0; j < width_; ++j) d_[j] = phase == Phase::Two ? cost_[j] : 0.0;
  for (std::size_t r = 0; r < m_; ++r) {
    if (cb[r] == 0.0) continue;
    const double* t = &tableau_[r * width_];
    for (std::size_t j = 0; j < width_; ++j) d_[j] -= cb[r] * t[j];
  }
  for (std::size_t r = 0; r < m_; ++r) d_[head_[r]] = 0.0;
}

void BoundedSimplex::pivot(std::size_t row, std::size_t col) {
  double* prow = &tableau_[row * width_];
  const double inv = 1.0 / prow[col];
  for (std::size_t j = 0; j < width_; ++j) prow[j] *= inv;
  prow[col] = 1.0;
  for (std::size_t r = 0; r < m_; ++r) {
    if (r == row) continue;
    double* t = &tableau_[r * width_];
    const double f = t[col];
    if (f == 0.0) continue;
    for (std::size_t j = 0; j < width_; ++j) t[j] -= f * prow[j];
    t[col] = 0.0;
  }
  const double fd = d_[col];
  if (fd != 0.0) {
    for (std::size_t j = 0; j < width_; ++j) d_[j] -= fd * prow[j];
    d_[col] = 0.0;
  }
  ++pivots_since_refactor_;
}

BoundedSimplex::StepResult BoundedSimplex::iterate(Phase phase, bool bland) {
  const double opt_tol = options_.optimality_tolerance;
  std::size_t enter = width_;
  int dir = 0;
  double best = 0.0;
  for (std::size_t j = 0; j < width_; ++j) {
    const VarState s = state_[j];
    if (s == VarState::Basic || lower_[j] == upper_[j]) continue;
    int candidate_dir = 0;
    if ((s == VarState::AtLower || s == VarState::FreeZero) && d_[j] > opt_tol) candidate_dir = 1;
    else if ((s == VarState::AtUpper || s == VarState::FreeZero) && d_[j] < -opt_tol) candidate_dir = -1;
    if (candidate_dir == 0) continue;
    if (bland) {
      enter = j;
      dir = candidate_dir;
      break;
    }
    if (std::abs(d_[j]) > best) {
      best = std::abs(d_[j]);
      enter = j;
      dir = candidate_dir;
    }
  }
  if (enter == width_) return StepResult::Optimal;

  const double feas_tol = options_.feasibility_tolerance;
  const double piv_tol = options_.pivot_tolerance;
  const double flip = upper_[enter] - lower_[enter];  // inf when unbounded on a side

  // Limit on theta imposed by basic row r and the bound it lands on.
  struct Limit {
    double theta = kInfinity;
    double relaxed = kInfinity;
    bool to_upper = false;
  };
  auto limit_for = [&](std::size_t r) -> Limit {
    Limit out;
    const double alpha = tab(r, enter);
    if (std::abs(alpha) <= piv_tol) return out;
    const double rate = -dir * alpha;
    const std::size_t var = head_[r];
    const double value = beta_[r];
    const double lo = lower_[var];
    const double hi = upper_[var];
    const double tol_lo = feas_tol * std::max(1.0, std::abs(lo));
    const double tol_hi = feas_tol * std::max(1.0, std::abs(hi));
    if (rate < 0) {
      if (phase == Phase::One && value > hi + tol_hi) {
        out.theta = (value - hi) / -rate;
        out.relaxed = (value - hi + tol_hi) / -rate;
        out.to_upper = true;
      } else if (value >= lo - tol_lo && std::isfinite(lo)) {
        out.theta = std::max(0.0, value - lo) / -rate;
        out.relaxed = (value - lo + tol_lo) / -rate;
        out.to_upper = false;
      }
    } else {
      if (phase == Phase::One && value < lo - tol_lo) {
        out.theta = (lo - value) / rate;
        out.relaxed = (lo - value + tol_lo) / rate;
        out.to_upper = false;
      } else if (value <= hi + tol_hi && std::isfinite(hi)) {
        out.theta = std::max(0.0, hi - value) / rate;
        out.relaxed = (hi - value + tol_hi) / rate;
        out.to_upper = true;
      }
    }
    return out;
  };

  std::vector<Limit> limits(m_);
  double relaxed_min = kInfinity;
  for (std::size_t r = 0; r < m_; ++r) {
    limits[r] = limit_for(r);
    relaxed_min = std::min(relaxed_min, limits[r].relaxed);
  }

  std::size_t leave = m_;
  if (bland) {
    double theta_min = kInfinity;
    for (std::size_t r = 0; r < m_; ++r) theta_min = std::min(theta_min, limits[r].theta);
    if (std::isfinite(theta_min)) {
      const double tie = feas_tol * std::max(1.0, theta_min);
      for (std::size_t r = 0; r < m_; ++r) {
        if (limits[r].theta <= theta_min + tie && (leave == m_ || head_[r] < head_[leave])) leave = r;
      }
    }
  } else if (std::isfinite(relaxed_min)) {
    double best_alpha = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (limits[r].theta <= relaxed_min && std::abs(tab(r, enter)) > best_alpha) {
        best_alpha = std::abs(tab(r, enter));
        leave = r;
      }
    }
  }

  const double theta_row = leave < m_ ? limits[leave].theta : kInfinity;
  if (!std::isfinite(theta_row) && !std::isfinite(flip)) {
    if (phase == Phase::One) throw NumericalBreakdown("phase one direction is unbounded");
    ray_.assign(n_, 0.0);
    if (enter < n_) ray_[enter] = dir;
    for (std::size_t r = 0; r < m_; ++r) {
      if (head_[r] < n_) ray_[head_[r]] = -dir * tab(r, enter);
    }
    return StepResult::Unbounded;
  }

  if (flip <= theta_row) {
    for (std::size_t r = 0; r < m_; ++r) beta_[r] -= dir * tab(r, enter) * flip;
    state_[enter] = dir > 0 ? VarState::AtUpper : VarState::AtLower;
    return flip > 0 ? StepResult::Flipped : StepResult::Degenerate;
  }

  const double theta = theta_row;
  const double entering_value = (state_[enter] == VarState::Basic ? 0.0 : nonbasic_value(enter)) + dir * theta;
  for (std::size_t r = 0; r < m_; ++r) beta_[r] -= dir * tab(r, enter) * theta;
  const std::size_t leaving = head_[leave];
  state_[leaving] = limits[leave].to_upper ? VarState::AtUpper : VarState::AtLower;
  state_[enter] = VarState::Basic;
  head_[leave] = enter;
  beta_[leave] = entering_value;
  pivot(leave, enter);
  return theta > feas_tol ? StepResult::Pivoted : StepResult::Degenerate;
}

bool BoundedSimplex::refactor() { return install_basis(basis()); }

LpStatus BoundedSimplex::run_phase(Phase phase) {
  int stalled = 0;
  bool refactor_retry_used = false;
  compute_reduced_costs(phase);
  for (;;) {
    if (phase == Phase::One && total_infeasibility() == 0.0) return LpStatus::Optimal;
    if (iterations_ >= options_.iteration_limit) throw NumericalBreakdown("simplex iteration limit reached");
    if (pivots_since_refactor_ >= options_.refactor_interval) {
      if (!refactor()) {
        if (refactor_retry_used) throw NumericalBreakdown("basis factorization failed after refactorization retry");
        refactor_retry_used = true;
      }
      compute_reduced_costs(phase);
    }
    const bool bland = stalled >= options_.stall_threshold;
    const StepResult step = iterate(phase, bland);
    if (step != StepResult::Optimal) ++iterations_;
    switch (step) {
      case StepResult::Optimal:
        return phase == Phase::One ? LpStatus::Infeasible : LpStatus::Optimal;
      case StepResult::Unbounded:
        return LpStatus::Unbounded;
      case StepResult::Degenerate:
        ++stalled;
        break;
      case StepResult::Pivoted:
      case StepResult::Flipped:
        stalled = 0;
        break;
    }
    if (phase == Phase::One) compute_reduced_costs(phase);
  }
}

void BoundedSimplex::set_bounds(std::size_t column, double lower, double upper) {
  if (column >= n_) throw std::out_of_range("column out of range");
  if (std::isnan(lower) || std::isnan(upper) || lower > upper) throw std::invalid_argument("lower > upper");
  lower_[column] = lower;
  upper_[column] = upper;
  state_[column] = repair_state(state_[column], lower, upper);
}

Basis BoundedSimplex::basis() const { return Basis{state_}; }

bool BoundedSimplex::install_basis(const Basis& basis) {
  if (basis.state.size() != width_) return false;
  std::vector<char> target(width_, 0);
  std::size_t count = 0;
  for (std::size_t j = 0; j < width_; ++j) {
    if (basis.state[j] == VarState::Basic) {
      target[j] = 1;
      ++count;
    }
  }
  if (count != m_) {
    reset_to_slack_basis();
    return false;
  }
  tableau_ = a_;
  for (std::size_t i = 0; i < m_; ++i) head_[i] = n_ + i;
  for (std::size_t j = 0; j < width_; ++j) {
    if (!target[j] || j >= n_) continue;
    std::size_t best_row = m_;
    double best = 0.0;
    for (std::size_t r = 0; r < m_; ++r) {
      if (target[head_[r]]) continue;
      const double v = std::abs(tab(r, j));
      if (v > best) {
        best = v;
        best_row = r;
      }
    }
    if (best_row == m_ || best < 1e-9) {
      reset_to_slack_basis();
      return false;
    }
    pivot(best_row, j);
    head_[best_row] = j;
  }
  for (std::size_t j = 0; j < width_; ++j) {
    state_[j] = target[j] ? VarState::Basic
                          : repair_state(basis.state[j] == VarState::Basic ? VarState::AtLower : basis.state[j],
                                         lower_[j], upper_[j]);
  }
  pivots_since_refactor_ = 0;
  recompute_basic_values();
  return true;
}

void BoundedSimplex::fill_result(LpResult& result, LpStatus status) {
  result.status = status;
  result.iterations = iterations_;
  result.basis = basis();
  result.primal.assign(n_, 0.0);
  for (std::size_t j = 0; j < n_; ++j) {
    if (state_[j] != VarState::Basic) result.primal[j] = nonbasic_value(j);
  }
  for (std::size_t r = 0; r < m_; ++r) {
    if (head_[r] < n_) result.primal[head_[r]] = beta_[r];
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < n_; ++j) result.objective += cost_[j] * cost_scale_ * result.primal[j];
  result.duals.assign(m_, 0.0);
  result.reduced_costs.assign(n_, 0.0);
  if (status == LpStatus::Optimal) {
    compute_reduced_costs(Phase::Two);
    for (std::size_t i = 0; i < m_; ++i) result.duals[i] = -d_[n_ + i] * cost_scale_ * row_scale_[i];
    for (std::size_t j = 0; j < n_; ++j) result.reduced_costs[j] = d_[j] * cost_scale_;
  } else if (status == LpStatus::Infeasible) {
    compute_reduced_costs(Phase::One);
    result.certificate.assign(m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) result.certificate[i] = -d_[n_ + i] * row_scale_[i];
  } else {
    result.certificate = ray_;
  }
}

LpResult BoundedSimplex::solve() {
  iterations_ = 0;
  LpResult result;
  for (std::size_t j = 0; j < width_; ++j) state_[j] = repair_state(state_[j], lower_[j], upper_[j]);
  recompute_basic_values();
  for (int attempt = 0; attempt < 3; ++attempt) {
    if (run_phase(Phase::One) == LpStatus::Infeasible) {
      // Confirm on a fresh factorization before declaring infeasibility.
      if (refactor() && total_infeasibility() > 0.0 && run_phase(Phase::One) == LpStatus::Infeasible) {
        fill_result(result, LpStatus::Infeasible);
        return result;
      }
      if (total_infeasibility() > 0.0) continue;
    }
    const LpStatus status = run_phase(Phase::Two);
    if (status == LpStatus::Unbounded) {
      fill_result(result, status);
      return result;
    }
    // Drift check: the final basis must still be primal feasible when
    // rebuilt from the original rows.
    if (!refactor()) continue;
    if (total_infeasibility() == 0.0) {
      compute_reduced_costs(Phase::Two);
      bool dual_ok = true;
      for (std::size_t j = 0; j < width_ && dual_ok; ++j) {
        const VarState s = state_[j];
        if (s == VarState::Basic || lower_[j] == upper_[j]) continue;
        if ((s == VarState::AtLower || s == VarState::FreeZero) && d_[j] > options_.optimality_tolerance) dual_ok = false;
        if ((s == VarState::AtUpper || s == VarState::FreeZero) && d_[j] < -options_.optimality_tolerance) dual_ok = false;
      }
      if (dual_ok) {
        fill_result(result, LpStatus::Optimal);
        return result;
      }
    }
  }
  throw NumericalBreakdown("simplex failed to converge to a stable optimal basis");
}

LpResult solve_lp(const LpProblem& problem, const SimplexOptions& options, const std::optional<Basis>& hint) {
  BoundedSimplex solver(problem, options);
  if (hint) solver.install_basis(*hint);
  return solver.solve();
}

}  // namespace evsite
