#include <charconv>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "evsite/io.hpp"

namespace evsite::io {

namespace {

constexpr const char* kObjectiveRow = "COST";
constexpr const char* kMaximizeComment = "* OBJSENSE MAXIMIZE";
constexpr const char* kIntOrg = "    MARKER                 'MARKER'                 'INTORG'\n";
constexpr const char* kIntEnd = "    MARKER                 'MARKER'                 'INTEND'\n";

std::string number(double v) {
  if (v == 0.0) return "0";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw std::runtime_error("cannot format number");
  return std::string(buf, p);
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string base36(std::size_t v, std::size_t width) {
  static const char digits[] = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  std::string out;
  do {
    out.insert(out.begin(), digits[v % 36]);
    v /= 36;
  } while (v);
  if (out.size() < width) out.insert(0, width - out.size(), '0');
  return out;
}

bool plain(const std::string& name) {
  if (name.empty() || name.size() > 8) return false;
  for (char c : name) {
    if (c <= ' ' || c == '#' || c == '$' || c == '*') return false;
  }
  return true;
}

// Unique fixed-format names for a sequence of entities.
class Namer {
 public:
  explicit Namer(std::set<std::string> reserved) : used_(std::move(reserved)) {}

  std::string take(const std::string& name, std::size_t index, std::size_t stride) {
    std::string n = mps_name(name, index);
    for (std::size_t bump = 1; used_.count(n); ++bump) n = mps_name(name + "#", index + bump * stride);
    used_.insert(n);
    return n;
  }

 private:
  std::set<std::string> used_;
};

std::vector<std::string> tokens(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* begin = s.data();
  if (!s.empty() && s[0] == '+') ++begin;
  auto [p, ec] = std::from_chars(begin, s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) {
    if (s == "Inf" || s == "inf" || s == "Infinity" || s == "1e30") return kInfinity;
    if (s == "-Inf" || s == "-inf" || s == "-Infinity" || s == "-1e30") return -kInfinity;
    throw MpsError(line, "not a number: " + s);
  }
  if (std::abs(v) >= 1e30) return v > 0 ? kInfinity : -kInfinity;
  return v;
}

enum class Section { None, Name, ObjSense, Rows, Columns, Rhs, Ranges, Bounds, End };

int rank(Section s) { return static_cast<int>(s); }

const char* section_name(Section s) {
  switch (s) {
    case Section::None: return "(start)";
    case Section::Name: return "NAME";
    case Section::ObjSense: return "OBJSENSE";
    case Section::Rows: return "ROWS";
    case Section::Columns: return "COLUMNS";
    case Section::Rhs: return "RHS";
    case Section::Ranges: return "RANGES";
    case Section::Bounds: return "BOUNDS";
    case Section::End: return "ENDATA";
  }
  return "?";
}

std::optional<Section> section_of(const std::string& word) {
  static const std::map<std::string, Section> table{
      {"NAME", Section::Name},       {"OBJSENSE", Section::ObjSense}, {"ROWS", Section::Rows},
      {"COLUMNS", Section::Columns}, {"RHS", Section::Rhs},           {"RANGES", Section::Ranges},
      {"BOUNDS", Section::Bounds},   {"ENDATA", Section::End}};
  auto it = table.find(word);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

}  // namespace

MpsError::MpsError(std::size_t line, const std::string& message)
    : std::runtime_error("MPS line " + std::to_string(line) + ": " + message), line_(line) {}

std::string mps_name(const std::string& name, std::size_t index) {
  if (plain(name)) return name;
  std::string prefix;
  for (char c : name) {
    if (prefix.size() == 3) break;
    if (c > ' ' && c != '#' && c != '$' && c != '*') prefix += c;
  }
  if (prefix.empty()) prefix = "N";
  return prefix + "#" + base36(index, 4);
}

std::string export_mps(const MipProblem& problem, const std::string& name) {
  const std::size_t n = problem.variables.size(), m = problem.rows.size();
  if (problem.objective.size() != n) throw std::invalid_argument("objective length does not match the columns");
  const std::size_t stride = n + m + 1;
  Namer row_names({kObjectiveRow});
  std::vector<std::string> rname(m);
  for (std::size_t r = 0; r < m; ++r) rname[r] = row_names.take(problem.rows[r].name, r, stride);
  Namer col_names({});
  std::vector<std::string> cname(n);
  for (std::size_t c = 0; c < n; ++c) cname[c] = col_names.take(problem.variables[c].name, m + c, stride);

  // Column-major entries, rows in order within a column.
  std::vector<std::vector<std::pair<std::size_t, double>>> cols(n);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = problem.rows[r];
    if (row.index.size() != row.coef.size()) throw std::invalid_argument("row " + row.name + " is malformed");
    std::map<int, double> merged;
    for (std::size_t e = 0; e < row.index.size(); ++e) {
      if (row.index[e] < 0 || static_cast<std::size_t>(row.index[e]) >= n) throw std::invalid_argument("row " + row.name + " references a missing column");
      merged[row.index[e]] += row.coef[e];
    }
    for (const auto& [c, v] : merged) {
      if (v != 0.0) cols[static_cast<std::size_t>(c)].push_back({r, v});
    }
  }

  const double sign = problem.maximize ? -1.0 : 1.0;
  std::string out;
  if (problem.maximize) {
    out += std::string(kMaximizeComment) + "\n";
    out += "* objective negated: the COST row holds -c, minimize it\n";
  }
  out += "NAME          " + (name.empty() ? std::string("EVSITE") : name) + "\n";
  out += "ROWS\n";
  out += " N  " + std::string(kObjectiveRow) + "\n";
  for (std::size_t r = 0; r < m; ++r) {
    const char* t = problem.rows[r].sense == RowSense::LessEqual ? "L" : problem.rows[r].sense == RowSense::Equal ? "E" : "G";
    out += std::string(" ") + t + "  " + rname[r] + "\n";
  }
  out += "COLUMNS\n";
  bool in_int = false;
  auto entry = [&](const std::string& col, const std::string& row, double v) {
    out += "    " + pad(col, 8) + "  " + pad(row, 8) + "  " + number(v) + "\n";
  };
  for (std::size_t c = 0; c < n; ++c) {
    const bool integer = problem.variables[c].integer;
    if (integer != in_int) {
      out += integer ? kIntOrg : kIntEnd;
      in_int = integer;
    }
    const double obj = sign * problem.objective[c];
    bool wrote = false;
    if (obj != 0.0) {
      entry(cname[c], kObjectiveRow, obj);
      wrote = true;
    }
    for (const auto& [r, v] : cols[c]) {
      entry(cname[c], rname[r], v);
      wrote = true;
    }
    if (!wrote) entry(cname[c], kObjectiveRow, 0.0);
  }
  if (in_int) out += kIntEnd;
  out += "RHS\n";
  for (std::size_t r = 0; r < m; ++r) {
    if (problem.rows[r].rhs != 0.0) entry("RHS", rname[r], problem.rows[r].rhs);
  }
  out += "RANGES\n";
  out += "BOUNDS\n";
  auto bound = [&](const char* type, const std::string& col, std::optional<double> v) {
    out += std::string(" ") + type + " " + pad("BND", 8) + "  ";
    out += v ? pad(col, 8) + "  " + number(*v) : col;
    out += "\n";
  };
  for (std::size_t c = 0; c < n; ++c) {
    const auto& var = problem.variables[c];
    const double lo = var.lower, hi = var.upper;
    if (lo == hi) {
      bound("FX", cname[c], lo);
      continue;
    }
    if (lo == -kInfinity && hi == kInfinity) {
      bound("FR", cname[c], std::nullopt);
      continue;
    }
    if (lo == -kInfinity) {
      bound("MI", cname[c], std::nullopt);
    } else if (lo != 0.0) {
      bound("LO", cname[c], lo);
    }
    if (hi != kInfinity) {
      bound("UP", cname[c], hi);
    } else if (var.integer) {
      bound("PL", cname[c], std::nullopt);
    }
  }
  out += "ENDATA\n";
  return out;
}

MipProblem parse_mps(std::string_view text) {
  MipProblem p;
  p.maximize = false;
  Section current = Section::None;
  bool negated_objective = false;
  bool seen_rows = false, seen_columns = false;
  std::string objective_row;
  std::unordered_map<std::string, std::size_t> row_index;
  std::unordered_map<std::string, std::size_t> col_index;
  std::set<std::pair<std::size_t, std::size_t>> seen_entries;  // (row+1 or 0, column)
  bool in_int = false;
  std::vector<char> bounded;
  std::size_t line_no = 0;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string_view::npos) {
      if (end == text.size()) break;
      continue;
    }
    if (line[0] == '*') {
      if (current == Section::None && tokens(line) == tokens(kMaximizeComment)) {
        p.maximize = true;
        negated_objective = true;
      }
      if (end == text.size()) break;
      continue;
    }
    const auto tok = tokens(line);
    const bool header = line[0] != ' ' && line[0] != '\t';
    if (header) {
      auto sec = section_of(tok[0]);
      if (!sec) throw MpsError(line_no, "unknown section " + tok[0]);
      if (rank(*sec) <= rank(current)) {
        throw MpsError(line_no, std::string("section ") + section_name(*sec) + " out of order after " + section_name(current));
      }
      if (rank(*sec) > rank(Section::Rows) && !seen_rows) throw MpsError(line_no, std::string(section_name(*sec)) + " before ROWS");
      if (rank(*sec) > rank(Section::Columns) && !seen_columns) {
        throw MpsError(line_no, std::string(section_name(*sec)) + " before COLUMNS");
      }
      if (current == Section::Columns && in_int) throw MpsError(line_no, "INTORG marker without INTEND");
      current = *sec;
      if (current == Section::Name) p.name = tok.size() > 1 ? tok[1] : "";
      if (current == Section::Rows) seen_rows = true;
      if (current == Section::Columns) seen_columns = true;
      if (current == Section::ObjSense && tok.size() > 1) {
        if (tok[1] == "MAX" || tok[1] == "MAXIMIZE") {
          p.maximize = true;
        } else if (tok[1] != "MIN" && tok[1] != "MINIMIZE") {
          throw MpsError(line_no, "unknown objective sense " + tok[1]);
        }
      }
      if (current == Section::End) {
        if (!seen_columns) throw MpsError(line_no, "ENDATA before COLUMNS");
        for (std::size_t c = 0; c < p.variables.size(); ++c) {
          if (negated_objective) p.objective[c] = -p.objective[c];
          if (p.objective[c] == 0.0) p.objective[c] = 0.0;  // drop a negative zero
        }
        return p;
      }
      continue;
    }

    switch (current) {
      case Section::ObjSense:
        if (tok[0] == "MAX" || tok[0] == "MAXIMIZE") {
          p.maximize = true;
        } else if (tok[0] != "MIN" && tok[0] != "MINIMIZE") {
          throw MpsError(line_no, "unknown objective sense " + tok[0]);
        }
        break;
      case Section::Rows: {
        if (tok.size() != 2) throw MpsError(line_no, "expected a row type and name");
        if (row_index.count(tok[1]) || tok[1] == objective_row) throw MpsError(line_no, "duplicate row " + tok[1]);
        if (tok[0] == "N") {
          if (!objective_row.empty()) throw MpsError(line_no, "only one objective row is supported");
          objective_row = tok[1];
          break;
        }
        LinearRow r;
        r.name = tok[1];
        if (tok[0] == "L") {
          r.sense = RowSense::LessEqual;
        } else if (tok[0] == "G") {
          r.sense = RowSense::GreaterEqual;
        } else if (tok[0] == "E") {
          r.sense = RowSense::Equal;
        } else {
          throw MpsError(line_no, "unknown row type " + tok[0]);
        }
        row_index[r.name] = p.rows.size();
        p.rows.push_back(std::move(r));
        break;
      }
      case Section::Columns: {
        if (tok.size() == 3 && tok[1] == "'MARKER'") {
          if (tok[2] == "'INTORG'") {
            if (in_int) throw MpsError(line_no, "nested INTORG");
            in_int = true;
          } else if (tok[2] == "'INTEND'") {
            if (!in_int) throw MpsError(line_no, "INTEND without INTORG");
            in_int = false;
          } else {
            throw MpsError(line_no, "unknown marker " + tok[2]);
          }
          break;
        }
        if (tok.size() != 3 && tok.size() != 5) throw MpsError(line_no, "expected column, row, value [, row, value]");
        auto it = col_index.find(tok[0]);
        std::size_t c;
        if (it == col_index.end()) {
          c = p.variables.size();
          col_index[tok[0]] = c;
          p.variables.push_back({tok[0], 0.0, kInfinity, in_int, 0});
          p.objective.push_back(0.0);
          bounded.push_back(0);
        } else {
          c = it->second;
          if (c + 1 != p.variables.size()) throw MpsError(line_no, "column " + tok[0] + " is split across the section");
        }
        for (std::size_t t = 1; t + 1 < tok.size(); t += 2) {
          const double v = parse_number(tok[t + 1], line_no);
          std::size_t key;
          if (tok[t] == objective_row) {
            key = 0;
            p.objective[c] = v;
          } else {
            auto r = row_index.find(tok[t]);
            if (r == row_index.end()) throw MpsError(line_no, "unknown row " + tok[t]);
            key = r->second + 1;
            if (v != 0.0) p.rows[r->second].add(static_cast<int>(c), v);
          }
          if (!seen_entries.insert({key, c}).second) throw MpsError(line_no, "duplicate entry for " + tok[0] + " in " + tok[t]);
        }
        break;
      }
      case Section::Rhs: {
        if (tok.size() < 2) throw MpsError(line_no, "expected [set] row value");
        const std::size_t first = tok.size() % 2 == 0 ? 0 : 1;
        for (std::size_t t = first; t + 1 < tok.size(); t += 2) {
          if (tok[t] == objective_row) throw MpsError(line_no, "objective constants are not supported");
          auto r = row_index.find(tok[t]);
          if (r == row_index.end()) throw MpsError(line_no, "unknown row " + tok[t]);
          p.rows[r->second].rhs = parse_number(tok[t + 1], line_no);
        }
        break;
      }
      case Section::Ranges:
        throw MpsError(line_no, "RANGES entries are not supported");
      case Section::Bounds: {
        const std::string& type = tok[0];
        const bool valueless = type == "FR" || type == "MI" || type == "PL" || type == "BV";
        const std::size_t want = valueless ? 2 : 3;
        if (tok.size() != want && tok.size() != want + 1) throw MpsError(line_no, "malformed bound");
        const std::string& col = tok.size() == want + 1 ? tok[2] : tok[1];
        auto it = col_index.find(col);
        if (it == col_index.end()) throw MpsError(line_no, "unknown column " + col);
        MipVariable& var = p.variables[it->second];
        const double v = valueless ? 0.0 : parse_number(tok.back(), line_no);
        if (type == "UP") {
          var.upper = v;
        } else if (type == "LO") {
          var.lower = v;
        } else if (type == "FX") {
          var.lower = var.upper = v;
        } else if (type == "FR") {
          var.lower = -kInfinity;
          var.upper = kInfinity;
        } else if (type == "MI") {
          var.lower = -kInfinity;
        } else if (type == "PL") {
          var.upper = kInfinity;
        } else if (type == "BV") {
          var.lower = 0.0;
          var.upper = 1.0;
          var.integer = true;
        } else if (type == "LI") {
          var.lower = v;
          var.integer = true;
        } else if (type == "UI") {
          var.upper = v;
          var.integer = true;
        } else {
          throw MpsError(line_no, "unknown bound type " + type);
        }
        break;
      }
      default:
        throw MpsError(line_no, std::string("data outside a section after ") + section_name(current));
    }
    if (end == text.size()) break;
  }
  throw MpsError(line_no, "missing ENDATA");
}

}  // namespace evsite::io
