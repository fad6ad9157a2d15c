#include "evsite/decomposition.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "evsite/simplex.hpp"

namespace evsite {

OpenSet OpenSet::of(const Instance& instance, std::uint64_t bits) {
  OpenSet s;
  s.bits = bits;
  for (std::size_t j = 0; j < instance.num_stations(); ++j) {
    if (s.contains(j)) s.station_cost += instance.stations[j].daily_open_cost;
  }
  return s;
}

OpenSet OpenSet::of_ids(const Instance& instance, std::span<const int> ids) {
  std::uint64_t bits = 0;
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= instance.num_stations() || id >= 63) {
      throw std::invalid_argument("station id out of range: " + std::to_string(id));
    }
    bits |= std::uint64_t{1} << id;
  }
  return of(instance, bits);
}

int OpenSet::size() const { return std::popcount(bits); }

std::vector<int> OpenSet::ids() const {
  std::vector<int> out;
  for (std::uint64_t b = bits; b; b &= b - 1) out.push_back(std::countr_zero(b));
  return out;
}

namespace {

bool in_range(const Instance& inst, const Scenario& sc, std::size_t i, std::size_t j) {
  return inst.travel_minutes.at(i, j) <= sc.d_max_minutes;
}

// ---------------------------------------------------------------------------
// Per-type recovery of v from station counts: a transportation problem with
// demand supplies, in-range arcs and station counts as sink capacities.

class MaxFlow {
 public:
  explicit MaxFlow(std::size_t n) : head_(n, -1), level_(n), it_(n) {}

  int add_edge(std::size_t from, std::size_t to, std::int64_t cap) {
    edges_.push_back({to, cap, head_[from]});
    head_[from] = static_cast<int>(edges_.size()) - 1;
    edges_.push_back({from, 0, head_[to]});
    head_[to] = static_cast<int>(edges_.size()) - 1;
    return static_cast<int>(edges_.size()) - 2;
  }

  std::int64_t flow_on(int edge) const { return edges_[static_cast<std::size_t>(edge) ^ 1].cap; }

  std::int64_t run(std::size_t s, std::size_t t) {
    std::int64_t total = 0;
    while (bfs(s, t)) {
      it_ = head_;
      while (std::int64_t f = dfs(s, t, std::numeric_limits<std::int64_t>::max())) total += f;
    }
    return total;
  }

 private:
  struct Edge {
    std::size_t to;
    std::int64_t cap;
    int next;
  };

  bool bfs(std::size_t s, std::size_t t) {
    std::fill(level_.begin(), level_.end(), -1);
    std::vector<std::size_t> queue{s};
    level_[s] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      for (int e = head_[queue[q]]; e >= 0; e = edges_[e].next) {
        if (edges_[e].cap > 0 && level_[edges_[e].to] < 0) {
          level_[edges_[e].to] = level_[queue[q]] + 1;
          queue.push_back(edges_[e].to);
        }
      }
    }
    return level_[t] >= 0;
  }

  std::int64_t dfs(std::size_t v, std::size_t t, std::int64_t pushed) {
    if (v == t) return pushed;
    for (int& e = it_[v]; e >= 0; e = edges_[e].next) {
      Edge& ed = edges_[e];
      if (ed.cap <= 0 || level_[ed.to] != level_[v] + 1) continue;
      if (std::int64_t f = dfs(ed.to, t, std::min(pushed, ed.cap))) {
        ed.cap -= f;
        edges_[static_cast<std::size_t>(e) ^ 1].cap += f;
        return f;
      }
    }
    return 0;
  }

  std::vector<Edge> edges_;
  std::vector<int> head_;
  std::vector<int> level_;
  std::vector<int> it_;
};

// ---------------------------------------------------------------------------
// Inner problem, aggregated per station and type. With n_jk vehicles of type
// k at open station j, an integral v exists iff for every station subset T
// the counts on T cover all demand whose in-range open stations lie inside T.
// Only the tight subsets are kept and they enter the LP lazily.

struct HallRow {
  std::size_t type;
  std::uint32_t subset;  // over local open-station indices
  std::int64_t need;
};

// Connectors on T must carry the load confined to T, in whole connectors.
struct RoundingCut {
  std::uint32_t subset;
  double need;
};

struct DemandGroup {
  std::uint32_t neighbours;  // local open stations in range
  std::vector<std::int64_t> count;
};

struct InnerModel {
  std::vector<std::size_t> stations;  // global ids of open stations
  std::size_t m = 0, K = 0;
  std::vector<std::int64_t> total;    // per type
  std::vector<HallRow> hall;
  std::vector<RoundingCut> rounding;
  std::vector<DemandGroup> groups;
  std::vector<double> charge_minutes, day_minutes;
  std::size_t fill_type = 0;          // finest type, settled by max-flow
  LpProblem lp;                       // columns: u_0..u_{m-1}, then n_{jk} at m + j*K + k

  std::size_t u_col(std::size_t j) const { return j; }
  std::size_t n_col(std::size_t j, std::size_t k) const { return m + j * K + k; }
};

constexpr std::size_t kMaxInnerStations = 24;

std::optional<InnerModel> build_inner(const Instance& inst, const Scenario& sc, const OpenSet& open) {
  InnerModel im;
  im.stations.reserve(open.size());
  for (int id : open.ids()) im.stations.push_back(static_cast<std::size_t>(id));
  im.m = im.stations.size();
  im.K = inst.num_vehicle_types();
  if (im.m > kMaxInnerStations) throw std::invalid_argument("too many open stations for the inner problem");
  const std::size_t m = im.m, K = im.K;
  const std::size_t full = std::size_t{1} << m;

  // Demand grouped by its in-range neighbourhood, then summed over subsets.
  std::vector<std::int64_t> sub(full * K, 0);
  im.total.assign(K, 0);
  for (std::size_t i = 0; i < inst.num_demands(); ++i) {
    std::uint32_t nb = 0;
    for (std::size_t l = 0; l < m; ++l) {
      if (in_range(inst, sc, i, im.stations[l])) nb |= 1u << l;
    }
    for (std::size_t k = 0; k < K; ++k) {
      const std::int64_t w = inst.demands[i].demand[k];
      if (w == 0) continue;
      if (nb == 0) return std::nullopt;
      sub[nb * K + k] = checked_add(sub[nb * K + k], w);
      im.total[k] = checked_add(im.total[k], w);
    }
  }
  for (std::size_t nb = 1; nb < full; ++nb) {
    DemandGroup g{static_cast<std::uint32_t>(nb), std::vector<std::int64_t>(sub.begin() + static_cast<std::ptrdiff_t>(nb * K),
                                                                          sub.begin() + static_cast<std::ptrdiff_t>(nb * K + K))};
    if (std::any_of(g.count.begin(), g.count.end(), [](std::int64_t w) { return w > 0; })) im.groups.push_back(std::move(g));
  }
  for (std::size_t k = 0; k < K; ++k) im.charge_minutes.push_back(inst.vehicle_types[k].charge_minutes);
  for (std::size_t l = 0; l < m; ++l) im.day_minutes.push_back(inst.stations[im.stations[l]].connector_daily_minutes);
  for (std::size_t k = 1; k < K; ++k) {
    if (im.total[k] > 0 && (im.total[im.fill_type] == 0 || im.charge_minutes[k] < im.charge_minutes[im.fill_type])) {
      im.fill_type = k;
    }
  }
  for (std::size_t l = 0; l < m; ++l) {
    for (std::size_t T = 0; T < full; ++T) {
      if (T >> l & 1) {
        for (std::size_t k = 0; k < K; ++k) sub[T * K + k] += sub[(T ^ (std::size_t{1} << l)) * K + k];
      }
    }
  }
  for (std::size_t T = 1; T < full; ++T) {
    double load = 0.0, day = 0.0;
    for (std::size_t k = 0; k < K; ++k) load += inst.vehicle_types[k].charge_minutes * static_cast<double>(sub[T * K + k]);
    for (std::size_t l = 0; l < m; ++l) {
      if (T >> l & 1) day = std::max(day, inst.stations[im.stations[l]].connector_daily_minutes);
    }
    const double need = std::ceil(load / day - 1e-9);
    if (need > load / day + 1e-9) im.rounding.push_back({static_cast<std::uint32_t>(T), need});
  }
  // A subset is tight when dropping any member lowers its demand; proper
  // subsets only, the full set is the equality row.
  for (std::size_t T = 1; T + 1 < full; ++T) {
    for (std::size_t k = 0; k < K; ++k) {
      const std::int64_t need = sub[T * K + k];
      if (need == 0) continue;
      bool tight = true;
      for (std::size_t b = T; b && tight; b &= b - 1) {
        const std::size_t low = b & (~b + 1);
        tight = sub[(T ^ low) * K + k] < need;
      }
      if (tight) im.hall.push_back({k, static_cast<std::uint32_t>(T), need});
    }
  }

  // LP columns and the always-present rows.
  LpProblem& lp = im.lp;
  lp.objective.assign(m + m * K, 0.0);
  lp.lower.assign(m + m * K, 0.0);
  lp.upper.assign(m + m * K, 0.0);
  for (std::size_t l = 0; l < m; ++l) {
    const auto& st = inst.stations[im.stations[l]];
    lp.objective[im.u_col(l)] = -1.0;
    lp.upper[im.u_col(l)] = st.max_connectors;
    LinearRow cap;
    cap.name = "cap";
    for (std::size_t k = 0; k < K; ++k) {
      cap.add(static_cast<int>(im.n_col(l, k)), inst.vehicle_types[k].charge_minutes);
      lp.upper[im.n_col(l, k)] = static_cast<double>(im.total[k]);
    }
    cap.add(static_cast<int>(im.u_col(l)), -st.connector_daily_minutes);
    cap.sense = RowSense::LessEqual;
    cap.rhs = 0.0;
    lp.rows.push_back(std::move(cap));
  }
  for (std::size_t k = 0; k < K; ++k) {
    LinearRow eq;
    eq.name = "total";
    for (std::size_t l = 0; l < m; ++l) eq.add(static_cast<int>(im.n_col(l, k)), 1.0);
    eq.sense = RowSense::Equal;
    eq.rhs = static_cast<double>(im.total[k]);
    lp.rows.push_back(std::move(eq));
  }
  return im;
}

LinearRow hall_row(const InnerModel& im, const HallRow& h) {
  LinearRow r;
  r.name = "hall";
  for (std::size_t l = 0; l < im.m; ++l) {
    if (h.subset >> l & 1u) r.add(static_cast<int>(im.n_col(l, h.type)), 1.0);
  }
  r.sense = RowSense::GreaterEqual;
  r.rhs = static_cast<double>(h.need);
  return r;
}

LinearRow rounding_row(const InnerModel& im, const RoundingCut& c) {
  LinearRow r;
  r.name = "round";
  for (std::size_t l = 0; l < im.m; ++l) {
    if (c.subset >> l & 1u) r.add(static_cast<int>(im.u_col(l)), 1.0);
  }
  r.sense = RowSense::GreaterEqual;
  r.rhs = c.need;
  return r;
}

double rounding_violation(const InnerModel& im, const RoundingCut& c, const std::vector<double>& x) {
  double lhs = 0.0;
  for (std::size_t l = 0; l < im.m; ++l) {
    if (c.subset >> l & 1u) lhs += x[im.u_col(l)];
  }
  return c.need - lhs;
}

double hall_violation(const InnerModel& im, const HallRow& h, const std::vector<double>& x) {
  double lhs = 0.0;
  for (std::size_t l = 0; l < im.m; ++l) {
    if (h.subset >> l & 1u) lhs += x[im.n_col(l, h.type)];
  }
  return static_cast<double>(h.need) - lhs;
}

struct InnerNode {
  std::vector<double> lower, upper;
};

constexpr double kIntTol = 1e-6;

// With connectors and every other type fixed to integers, the fill type is a
// single-commodity transportation problem into the leftover station time.
// Returns the completed vector with connectors trimmed to the actual loads.
std::optional<std::vector<double>> complete_fill(const InnerModel& im, const std::vector<double>& x) {
  const std::size_t m = im.m, f = im.fill_type, G = im.groups.size();
  const std::size_t src = G + m, sink = src + 1;
  MaxFlow flow(sink + 1);
  std::vector<int> station_edge(m);
  for (std::size_t g = 0; g < G; ++g) {
    const std::int64_t w = im.groups[g].count[f];
    if (w == 0) continue;
    flow.add_edge(src, g, w);
    for (std::size_t l = 0; l < m; ++l) {
      if (im.groups[g].neighbours >> l & 1u) flow.add_edge(g, G + l, w);
    }
  }
  for (std::size_t l = 0; l < m; ++l) {
    double left = im.day_minutes[l] * std::round(x[im.u_col(l)]);
    for (std::size_t k = 0; k < im.K; ++k) {
      if (k != f) left -= im.charge_minutes[k] * std::round(x[im.n_col(l, k)]);
    }
    const auto cap = static_cast<std::int64_t>(std::floor(left / im.charge_minutes[f] + 1e-9));
    station_edge[l] = flow.add_edge(G + l, sink, std::max<std::int64_t>(0, cap));
  }
  if (flow.run(src, sink) != im.total[f]) return std::nullopt;
  std::vector<double> out(x.size());
  for (std::size_t l = 0; l < m; ++l) {
    double load = 0.0;
    for (std::size_t k = 0; k < im.K; ++k) {
      const double n = k == f ? static_cast<double>(flow.flow_on(station_edge[l])) : std::round(x[im.n_col(l, k)]);
      out[im.n_col(l, k)] = n;
      load += im.charge_minutes[k] * n;
    }
    double u = std::ceil(load / im.day_minutes[l] - 1e-9);
    out[im.u_col(l)] = std::max(0.0, u);
  }
  return out;
}

// Depth-first branch-and-bound on the aggregated problem with lazily added
// subset rows. Returns the best integral (u, n) vector or nullopt.
std::optional<std::vector<double>> solve_inner(InnerModel& im) {
  const std::size_t m = im.m, cols = m + m * im.K;
  std::vector<char> active(im.hall.size(), 0), active_round(im.rounding.size(), 0);
  std::optional<std::vector<double>> best;
  double best_total = std::numeric_limits<double>::infinity();

  std::vector<InnerNode> stack{{im.lp.lower, im.lp.upper}};
  while (!stack.empty()) {
    InnerNode node = std::move(stack.back());
    stack.pop_back();
    LpProblem lp = im.lp;
    lp.lower = node.lower;
    lp.upper = node.upper;
    for (std::size_t h = 0; h < im.hall.size(); ++h) {
      if (active[h]) lp.rows.push_back(hall_row(im, im.hall[h]));
    }
    for (std::size_t c = 0; c < im.rounding.size(); ++c) {
      if (active_round[c]) lp.rows.push_back(rounding_row(im, im.rounding[c]));
    }
    LpResult r;
    for (;;) {
      r = solve_lp(lp);
      if (r.status != LpStatus::Optimal) break;
      bool added = false;
      for (std::size_t h = 0; h < im.hall.size(); ++h) {
        if (!active[h] && hall_violation(im, im.hall[h], r.primal) > kIntTol) {
          active[h] = 1;
          lp.rows.push_back(hall_row(im, im.hall[h]));
          added = true;
        }
      }
      for (std::size_t c = 0; c < im.rounding.size(); ++c) {
        if (!active_round[c] && rounding_violation(im, im.rounding[c], r.primal) > kIntTol) {
          active_round[c] = 1;
          lp.rows.push_back(rounding_row(im, im.rounding[c]));
          added = true;
        }
      }
      if (!added) break;
    }
    if (r.status != LpStatus::Optimal) continue;
    // Connector totals are integers.
    const double bound = std::ceil(-r.objective - kIntTol);
    if (bound >= best_total) continue;

    // Branch on the most fractional connector count, then on a count of a
    // coarse type; the fill type is settled by max-flow once those are whole.
    std::size_t branch = cols;
    auto pick = [&](auto&& eligible) {
      double best_dist = 0.0;
      for (std::size_t c = 0; c < cols; ++c) {
        if (!eligible(c)) continue;
        const double f = r.primal[c] - std::floor(r.primal[c]);
        const double dist = std::min(f, 1.0 - f);
        if (dist > kIntTol && dist > best_dist + 1e-12) {
          branch = c;
          best_dist = dist;
        }
      }
    };
    auto is_fill = [&](std::size_t c) { return c >= m && (c - m) % im.K == im.fill_type; };
    pick([&](std::size_t c) { return c < m; });
    if (branch == cols) pick([&](std::size_t c) { return c >= m && !is_fill(c); });
    if (branch == cols) {
      if (auto x = complete_fill(im, r.primal)) {
        double total = 0.0;
        for (std::size_t l = 0; l < m; ++l) total += (*x)[im.u_col(l)];
        if (total < best_total) {
          best_total = total;
          best = std::move(x);
        }
        continue;
      }
      pick(is_fill);
    }
    if (branch == cols) {
      std::vector<double> x(cols);
      for (std::size_t c = 0; c < cols; ++c) x[c] = std::round(r.primal[c]);
      double total = 0.0;
      for (std::size_t l = 0; l < m; ++l) total += x[im.u_col(l)];
      if (total < best_total) {
        best_total = total;
        best = std::move(x);
      }
      continue;
    }
    const double v = r.primal[branch];
    InnerNode down = node, up = std::move(node);
    down.upper[branch] = std::floor(v);
    up.lower[branch] = std::ceil(v);
    // Up first: more capacity reaches a feasible leaf sooner.
    stack.push_back(std::move(down));
    stack.push_back(std::move(up));
  }
  return best;
}

void check_inputs(const Instance& inst, const Scenario& sc) {
  std::vector<Finding> f = validate_instance(inst);
  if (f.empty()) f = validate_scenario(inst, sc);
  if (!f.empty()) {
    std::string msg = "invalid input";
    for (const auto& x : f) msg += "\n  " + x.path + ": " + x.message;
    throw std::invalid_argument(msg);
  }
  if (inst.num_stations() > 63) throw std::invalid_argument("enumeration supports at most 63 stations");
  if (sc.big_m.mode == BigM::Mode::Fixed) {
    std::int64_t widest = 0;
    for (const auto& d : inst.demands) widest = std::max(widest, std::accumulate(d.demand.begin(), d.demand.end(), std::int64_t{0}));
    if (sc.big_m.value < static_cast<double>(widest) || sc.big_m.value < static_cast<double>(inst.num_demands())) {
      throw std::invalid_argument("fixed big-M is small enough to bind; enumeration needs M >= max demand and M >= |I|");
    }
  }
}

// Total order on candidate results; smaller is better.
struct Key {
  Money cost;
  int size = 0;
  std::int64_t connectors = 0;
  std::uint64_t bits = 0;
};

// Lexicographic order of the sorted id lists. Equal sizes only.
bool lex_less(std::uint64_t a, std::uint64_t b) {
  if (a == b) return false;
  const std::uint64_t diff = a ^ b;
  return (a & diff & (~diff + 1)) != 0;
}

bool better(const Key& a, const Key& b) {
  if (a.cost != b.cost) return a.cost < b.cost;
  if (a.size != b.size) return a.size < b.size;
  if (a.connectors != b.connectors) return a.connectors < b.connectors;
  return lex_less(a.bits, b.bits);
}

// Admissible open sets: forced stations plus any free ones, by cardinality
// and then by mask value.
class SubsetStream {
 public:
  SubsetStream(std::uint64_t forced, std::vector<int> free, int max_size)
      : forced_(forced), free_(std::move(free)) {
    const int base = std::popcount(forced);
    max_extra_ = std::min<int>(max_size - base, static_cast<int>(free_.size()));
    extra_ = 0;
    local_ = 0;
    done_ = max_extra_ < 0;
  }

  bool next(std::uint64_t& out) {
    std::lock_guard lock(mu_);
    if (done_) return false;
    out = forced_;
    for (std::uint64_t b = local_; b; b &= b - 1) out |= std::uint64_t{1} << free_[std::countr_zero(b)];
    advance();
    return true;
  }

 private:
  void advance() {
    const std::size_t n = free_.size();
    if (extra_ > 0) {
      // Gosper's hack within the current cardinality.
      const std::uint64_t c = local_ & (~local_ + 1);
      const std::uint64_t r = local_ + c;
      const std::uint64_t nxt = (((r ^ local_) >> 2) / c) | r;
      if (n < 64 && (nxt >> n) == 0) {
        local_ = nxt;
        return;
      }
    }
    ++extra_;
    if (extra_ > max_extra_) {
      done_ = true;
      return;
    }
    local_ = (std::uint64_t{1} << extra_) - 1;
  }

  std::mutex mu_;
  std::uint64_t forced_;
  std::vector<int> free_;
  int max_extra_ = 0;
  int extra_ = 0;
  std::uint64_t local_ = 0;
  bool done_ = false;
};

}  // namespace

bool coverage_feasible(const Instance& instance, const Scenario& scenario, const OpenSet& open) {
  for (std::size_t i = 0; i < instance.num_demands(); ++i) {
    int reach = 0;
    for (std::size_t j = 0; j < instance.num_stations(); ++j) reach += open.contains(j) && in_range(instance, scenario, i, j);
    if (reach < scenario.redundancy) return false;
  }
  return true;
}

std::optional<InnerAssignment> inner_min_connectors(const Instance& instance, const Scenario& scenario,
                                                    const OpenSet& open) {
  const std::size_t I = instance.num_demands(), J = instance.num_stations(), K = instance.num_vehicle_types();
  InnerAssignment out;
  out.assigned.assign(I * J * K, 0);
  out.connectors.assign(J, 0);

  // Cheap capacity screen before any LP.
  double load = 0.0, capacity = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) load += instance.vehicle_types[k].charge_minutes * static_cast<double>(instance.demands[i].demand[k]);
  }
  for (int j : open.ids()) capacity += instance.stations[j].connector_daily_minutes * instance.stations[j].max_connectors;
  if (load > capacity * (1 + 1e-12)) return std::nullopt;

  auto model = build_inner(instance, scenario, open);
  if (!model) return std::nullopt;
  InnerModel& im = *model;
  if (load == 0.0) return out;

  auto x = solve_inner(im);
  if (!x) return std::nullopt;

  // Recover v per type by max-flow against the station counts.
  const std::size_t src = I + im.m, sink = src + 1;
  for (std::size_t k = 0; k < K; ++k) {
    if (im.total[k] == 0) continue;
    MaxFlow flow(sink + 1);
    std::vector<std::pair<int, std::pair<std::size_t, std::size_t>>> arcs;
    for (std::size_t i = 0; i < I; ++i) {
      const std::int64_t w = instance.demands[i].demand[k];
      if (w == 0) continue;
      flow.add_edge(src, i, w);
      for (std::size_t l = 0; l < im.m; ++l) {
        if (in_range(instance, scenario, i, im.stations[l])) arcs.push_back({flow.add_edge(i, I + l, w), {i, l}});
      }
    }
    for (std::size_t l = 0; l < im.m; ++l) {
      flow.add_edge(I + l, sink, static_cast<std::int64_t>((*x)[im.n_col(l, k)]));
    }
    if (flow.run(src, sink) != im.total[k]) throw std::logic_error("inner assignment lost demand in flow recovery");
    for (const auto& [edge, where] : arcs) {
      out.assigned[(where.first * J + im.stations[where.second]) * K + k] = flow.flow_on(edge);
    }
  }
  // Connectors from the recovered loads; never above the aggregated ones.
  for (std::size_t l = 0; l < im.m; ++l) {
    const std::size_t j = im.stations[l];
    double station_load = 0.0;
    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t k = 0; k < K; ++k) {
        station_load += instance.vehicle_types[k].charge_minutes * static_cast<double>(out.assigned[(i * J + j) * K + k]);
      }
    }
    const double c = instance.stations[j].connector_daily_minutes;
    std::int64_t need = static_cast<std::int64_t>(std::ceil(station_load / c));
    if (need > 0 && static_cast<double>(need - 1) * c >= station_load) --need;
    out.connectors[j] = need;
    out.total_connectors += need;
  }
  return out;
}

Solution solve_by_enumeration(const Instance& instance, const Scenario& scenario, const EnumerationOptions& options,
                              EnumerationStats* stats) {
  check_inputs(instance, scenario);
  const std::size_t I = instance.num_demands(), J = instance.num_stations(), K = instance.num_vehicle_types();

  std::uint64_t forced = 0;
  std::vector<int> free;
  double max_c = 0.0;
  for (std::size_t j = 0; j < J; ++j) {
    if (instance.stations[j].forced_open) {
      forced |= std::uint64_t{1} << j;
    } else {
      free.push_back(static_cast<int>(j));
    }
    max_c = std::max(max_c, instance.stations[j].connector_daily_minutes);
  }
  double load = 0.0;
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t k = 0; k < K; ++k) load += instance.vehicle_types[k].charge_minutes * static_cast<double>(instance.demands[i].demand[k]);
  }
  auto connector_floor = [](double l, double c) {
    if (l <= 0.0) return std::int64_t{0};
    auto n = static_cast<std::int64_t>(std::ceil(l / c));
    if (n > 0 && static_cast<double>(n - 1) * c >= l) --n;
    return n;
  };
  const std::int64_t global_lb = connector_floor(load, max_c);

  SubsetStream stream(forced, free, scenario.max_stations);
  std::mutex best_mu;
  std::optional<Key> best;
  std::optional<InnerAssignment> best_inner;
  std::atomic<std::int64_t> n_subsets{0}, n_cov{0}, n_pruned{0}, n_inner{0}, n_inf{0};
  std::exception_ptr failure;
  const auto start = std::chrono::steady_clock::now();
  std::atomic<bool> timed_out{false};

  auto worker = [&] {
    try {
      std::uint64_t bits;
      while (!timed_out && stream.next(bits)) {
        if (std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() > options.time_limit_seconds) {
          timed_out = true;
          break;
        }
        ++n_subsets;
        const OpenSet open = OpenSet::of(instance, bits);
        if (!coverage_feasible(instance, scenario, open)) {
          ++n_cov;
          continue;
        }
        double set_max_c = 0.0;
        for (int j : open.ids()) set_max_c = std::max(set_max_c, instance.stations[j].connector_daily_minutes);
        const std::int64_t conn_lb = std::max(global_lb, connector_floor(load, set_max_c));
        const Key lower{open.station_cost + instance.connector_daily_cost.times(conn_lb), open.size(), conn_lb, bits};
        {
          std::lock_guard lock(best_mu);
          if (best && !better(lower, *best)) {
            ++n_pruned;
            continue;
          }
        }
        ++n_inner;
        auto inner = inner_min_connectors(instance, scenario, open);
        if (!inner) {
          ++n_inf;
          continue;
        }
        const Key key{open.station_cost + instance.connector_daily_cost.times(inner->total_connectors), open.size(),
                      inner->total_connectors, bits};
        std::lock_guard lock(best_mu);
        if (!best || better(key, *best)) {
          best = key;
          best_inner = std::move(inner);
        }
      }
    } catch (...) {
      std::lock_guard lock(best_mu);
      if (!failure) failure = std::current_exception();
    }
  };

  int threads = options.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  if (stats) {
    *stats = {n_subsets.load(), n_cov.load(), n_pruned.load(), n_inner.load(), n_inf.load()};
  }
  if (timed_out) return Solution::empty_for(instance, SolveStatus::TimedOut);
  if (!best) return Solution::empty_for(instance, SolveStatus::Infeasible);

  Solution s = Solution::empty_for(instance, SolveStatus::Optimal);
  for (std::size_t j = 0; j < J; ++j) {
    s.open[j] = (best->bits >> j & 1u) ? 1 : 0;
    s.connectors[j] = best_inner->connectors[j];
  }
  for (std::size_t i = 0; i < I; ++i) {
    for (std::size_t j = 0; j < J; ++j) s.cover(i, j) = s.open[j] && in_range(instance, scenario, i, j);
  }
  s.assigned = std::move(best_inner->assigned);
  s.revenue = revenue_of_assignment(instance, s);
  s.cost = cost_of_solution(instance, s);
  s.profit = s.revenue - s.cost;
  AuditReport audit = audit_solution(instance, scenario, s);
  if (!audit.feasible) {
    std::string msg = "enumeration result failed the audit:";
    for (const auto& v : audit.violations) msg += std::string(" ") + to_string(v.family) + "[" + v.where + "]";
    throw AuditFailure(msg);
  }
  return s;
}

}  // namespace evsite
