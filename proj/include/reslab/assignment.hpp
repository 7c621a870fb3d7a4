#pragma once

#include <vector>

#include <Eigen/Dense>

namespace reslab {

struct Assignment {
  std::vector<int> match;  // match[i] = column assigned to row i
  double cost = 0.0;       // sum of the assigned entries
};

// Minimum-cost perfect assignment on a square cost matrix, shortest
// augmenting path with dual potentials. Deterministic for fixed input.
Assignment solve_assignment(const Eigen::MatrixXd& cost);

// Among assignments with cost within tie_tol of the optimum, returns the
// one whose match vector is lexicographically smallest. Re-solves reduced
// problems row by row, so keep it to small matrices.
Assignment solve_assignment_lex(const Eigen::MatrixXd& cost, double tie_tol);

// Minimum over perfect assignments of the largest assigned entry.
double bottleneck_value(const Eigen::MatrixXd& cost);

// A matching achieving bottleneck_value(cost); ties between such matchings
// are broken by minimizing the additive cost, then lexicographically.
// Assignment::cost holds the bottleneck value, not the additive cost.
Assignment solve_bottleneck(const Eigen::MatrixXd& cost, double tie_tol = 0.0);

}  // namespace reslab
