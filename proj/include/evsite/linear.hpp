#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace evsite {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class RowSense { LessEqual, Equal, GreaterEqual };

// Sparse row a^T x (sense) rhs. Indices are kept strictly ascending.
struct LinearRow {
  std::string name;
  std::vector<int> index;
  std::vector<double> coef;
  RowSense sense = RowSense::LessEqual;
  double rhs = 0.0;

  void add(int column, double value) {
    if (value == 0.0) return;
    index.push_back(column);
    coef.push_back(value);
  }
  double activity(const std::vector<double>& x) const {
    double sum = 0.0;
    for (std::size_t p = 0; p < index.size(); ++p) sum += coef[p] * x[index[p]];
    return sum;
  }
  bool operator==(const LinearRow&) const = default;
};

// Sorts entries by column and merges duplicates; drops exact zeros.
void normalize_row(LinearRow& row);

// True when `activity` satisfies the row within `tolerance`, scaled by the
// row's magnitude.
bool row_satisfied(const LinearRow& row, double activity, double tolerance);

}  // namespace evsite
