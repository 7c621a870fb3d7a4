#include "reslab/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_square(const Eigen::MatrixXd& cost) {
  if (cost.rows() != cost.cols())
    throw RejectedInput("assignment: cost matrix must be square");
}

bool try_kuhn(int row, const std::vector<std::vector<int>>& adj,
              std::vector<char>& used, std::vector<int>& col_row) {
  for (int j : adj[row]) {
    if (used[j]) continue;
    used[j] = 1;
    if (col_row[j] == -1 || try_kuhn(col_row[j], adj, used, col_row)) {
      col_row[j] = row;
      return true;
    }
  }
  return false;
}

bool matching_below(const Eigen::MatrixXd& cost, double threshold) {
  const int n = static_cast<int>(cost.rows());
  std::vector<std::vector<int>> adj(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cost(i, j) <= threshold) adj[i].push_back(j);
  std::vector<int> col_row(n, -1);
  for (int i = 0; i < n; ++i) {
    std::vector<char> used(n, 0);
    if (!try_kuhn(i, adj, used, col_row)) return false;
  }
  return true;
}

}  // namespace

Assignment solve_assignment(const Eigen::MatrixXd& cost) {
  require_square(cost);
  const int n = static_cast<int>(cost.rows());
  Assignment out;
  out.match.assign(n, -1);
  if (n == 0) return out;

  // Shortest augmenting path with dual potentials; column n is virtual.
  std::vector<int> col_row(n + 1, -1);
  std::vector<int> way(n + 1, n);
  std::vector<double> u(n, 0.0), v(n + 1, 0.0);
  for (int i = 0; i < n; ++i) {
    col_row[n] = i;
    int j0 = n;
    std::vector<double> minv(n + 1, kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = col_row[j0];
      int j1 = -1;
      double delta = kInf;
      for (int j = 0; j < n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[col_row[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (col_row[j0] != -1);
    do {
      const int j1 = way[j0];
      col_row[j0] = col_row[j1];
      j0 = j1;
    } while (j0 != n);
  }

  for (int j = 0; j < n; ++j)
    if (col_row[j] >= 0) out.match[col_row[j]] = j;
  for (int i = 0; i < n; ++i) out.cost += cost(i, out.match[i]);
  return out;
}

Assignment solve_assignment_lex(const Eigen::MatrixXd& cost, double tie_tol) {
  require_square(cost);
  const int n = static_cast<int>(cost.rows());
  const Assignment base = solve_assignment(cost);
  if (n <= 1) return base;

  const double slack =
      std::max(tie_tol, 1e-12 * (1.0 + std::abs(base.cost)));
  std::vector<int> cols(n);
  std::iota(cols.begin(), cols.end(), 0);
  Eigen::MatrixXd work = cost;
  std::vector<int> match(n, -1);
  double fixed = 0.0;

  for (int row = 0; row < n; ++row) {
    const int m = static_cast<int>(work.rows());
    int pick = -1;
    double pick_total = kInf;
    for (int cj = 0; cj < m; ++cj) {
      Eigen::MatrixXd reduced(m - 1, m - 1);
      for (int i = 1; i < m; ++i)
        for (int j = 0, q = 0; j < m; ++j)
          if (j != cj) reduced(i - 1, q++) = work(i, j);
      const double total =
          fixed + work(0, cj) +
          (m > 1 ? solve_assignment(reduced).cost : 0.0);
      if (total <= base.cost + slack) {
        pick = cj;
        pick_total = total;
        break;
      }
      if (total < pick_total) {
        pick = cj;
        pick_total = total;
      }
    }
    match[row] = cols[pick];
    fixed += work(0, pick);
    cols.erase(cols.begin() + pick);
    Eigen::MatrixXd next(m - 1, m - 1);
    for (int i = 1; i < m; ++i)
      for (int j = 0, q = 0; j < m; ++j)
        if (j != pick) next(i - 1, q++) = work(i, j);
    work = std::move(next);
  }

  Assignment out;
  out.match = std::move(match);
  for (int i = 0; i < n; ++i) out.cost += cost(i, out.match[i]);
  return out;
}

double bottleneck_value(const Eigen::MatrixXd& cost) {
  require_square(cost);
  const int n = static_cast<int>(cost.rows());
  if (n == 0) return 0.0;
  std::vector<double> vals(cost.data(), cost.data() + n * n);
  std::sort(vals.begin(), vals.end());
  vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
  std::size_t lo = 0, hi = vals.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (matching_below(cost, vals[mid]))
      hi = mid;
    else
      lo = mid + 1;
  }
  return vals[lo];
}

Assignment solve_bottleneck(const Eigen::MatrixXd& cost, double tie_tol) {
  require_square(cost);
  const int n = static_cast<int>(cost.rows());
  Assignment out;
  if (n == 0) return out;
  const double b = bottleneck_value(cost);
  // Forbid entries above the bottleneck with a large finite penalty so the
  // additive solver stays in feasible territory.
  const double big = 1e50;
  Eigen::MatrixXd restricted = cost;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (cost(i, j) > b) restricted(i, j) = big;
  out = solve_assignment_lex(restricted, tie_tol);
  out.cost = b;
  return out;
}

}  // namespace reslab
