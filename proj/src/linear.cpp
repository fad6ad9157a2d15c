#include "evsite/linear.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace evsite {

void normalize_row(LinearRow& row) {
  std::vector<std::size_t> order(row.index.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return row.index[a] < row.index[b]; });
  std::vector<int> index;
  std::vector<double> coef;
  for (std::size_t p : order) {
    if (!index.empty() && index.back() == row.index[p]) {
      coef.back() += row.coef[p];
    } else {
      index.push_back(row.index[p]);
      coef.push_back(row.coef[p]);
    }
  }
  row.index.clear();
  row.coef.clear();
  for (std::size_t p = 0; p < index.size(); ++p) {
    if (coef[p] != 0.0) {
      row.index.push_back(index[p]);
      row.coef.push_back(coef[p]);
    }
  }
}

bool row_satisfied(const LinearRow& row, double activity, double tolerance) {
  double scale = std::max(1.0, std::abs(row.rhs));
  for (double c : row.coef) scale = std::max(scale, std::abs(c));
  double slack = tolerance * scale;
  switch (row.sense) {
    case RowSense::LessEqual: return activity <= row.rhs + slack;
    case RowSense::GreaterEqual: return activity >= row.rhs - slack;
    case RowSense::Equal: return std::abs(activity - row.rhs) <= slack;
  }
  return false;
}

}  // namespace evsite
