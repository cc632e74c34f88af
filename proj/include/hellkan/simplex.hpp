#pragma once

#include <cmath>
#include <vector>

#include "hellkan/numeric.hpp"

namespace hellkan::detail {

struct SimplexResult {
  double value = 0.0;
  std::vector<double> x;
  std::vector<double> dual;  // multipliers of the <= rows
  double residual = 0.0;     // complementary slackness residual
  bool ok = false;
};

// maximize c^T x s.t. A x <= rhs, x >= 0 with rhs >= 0 (the slack basis is
// feasible, so no phase 1); dense tableau with Bland's rule
inline SimplexResult simplex_max(const std::vector<std::vector<double>>& A,
                                 const std::vector<double>& rhs, const std::vector<double>& c) {
  const int rows = static_cast<int>(A.size());
  const int cols = static_cast<int>(c.size());
  const int width = cols + rows + 1;
  std::vector<std::vector<double>> T(rows + 1, std::vector<double>(width, 0.0));
  std::vector<int> basis(rows);
  for (int r = 0; r < rows; ++r) {
    for (int j = 0; j < cols; ++j) T[r][j] = A[r][j];
    T[r][cols + r] = 1.0;
    T[r][width - 1] = rhs[r];
    basis[r] = cols + r;
  }
  for (int j = 0; j < cols; ++j) T[rows][j] = -c[j];

  for (int iter = 0; iter < 50000; ++iter) {
    int piv_col = -1;
    for (int j = 0; j < width - 1; ++j)
      if (T[rows][j] < -1e-12) {
        piv_col = j;
        break;  // Bland's rule: lowest eligible index
      }
    if (piv_col < 0) break;
    int piv_row = -1;
    double best = inf;
    for (int r = 0; r < rows; ++r) {
      if (T[r][piv_col] > 1e-12) {
        double ratio = T[r][width - 1] / T[r][piv_col];
        if (ratio < best - 1e-15 ||
            (std::abs(ratio - best) <= 1e-15 && (piv_row < 0 || basis[r] < basis[piv_row]))) {
          best = ratio;
          piv_row = r;
        }
      }
    }
    if (piv_row < 0) return {};  // unbounded
    double p = T[piv_row][piv_col];
    for (int j = 0; j < width; ++j) T[piv_row][j] /= p;
    for (int r = 0; r <= rows; ++r) {
      if (r == piv_row) continue;
      double f = T[r][piv_col];
      if (f == 0.0) continue;
      for (int j = 0; j < width; ++j) T[r][j] -= f * T[piv_row][j];
    }
    basis[piv_row] = piv_col;
  }

  SimplexResult res;
  res.x.assign(cols, 0.0);
  for (int r = 0; r < rows; ++r)
    if (basis[r] < cols) res.x[basis[r]] = T[r][width - 1];
  res.value = 0.0;
  for (int j = 0; j < cols; ++j) res.value += c[j] * res.x[j];
  res.dual.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) res.dual[r] = T[rows][cols + r];
  double resid = 0.0;
  for (int r = 0; r < rows; ++r) {
    double slack = rhs[r];
    for (int j = 0; j < cols; ++j) slack -= A[r][j] * res.x[j];
    resid = std::max(resid, std::abs(res.dual[r] * slack));
    if (slack < -1e-9) return {};
  }
  for (int j = 0; j < cols; ++j) resid = std::max(resid, std::abs(T[rows][j] * res.x[j]));
  res.residual = resid;
  res.ok = true;
  return res;
}

}  // namespace hellkan::detail
