#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "reslab/assignment.hpp"

using reslab::Assignment;
using reslab::bottleneck_value;
using reslab::solve_assignment;
using reslab::solve_assignment_lex;
using reslab::solve_bottleneck;

namespace {

double brute_min_cost(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (int i = 0; i < n; ++i) cost += c(i, perm[i]);
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double brute_min_bottleneck(const Eigen::MatrixXd& c) {
  const int n = static_cast<int>(c.rows());
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double worst = 0.0;
    for (int i = 0; i < n; ++i) worst = std::max(worst, c(i, perm[i]));
    best = std::min(best, worst);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

bool is_permutation_matching(const std::vector<int>& match) {
  std::vector<int> seen(match.size(), 0);
  for (int col : match) {
    if (col < 0 || col >= static_cast<int>(match.size())) return false;
    if (seen[col]++) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("assignment agrees with exhaustive search") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      Eigen::MatrixXd c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = u(rng);
      const Assignment a = solve_assignment(c);
      REQUIRE(is_permutation_matching(a.match));
      double cost = 0.0;
      for (int i = 0; i < n; ++i) cost += c(i, a.match[i]);
      CHECK(a.cost == doctest::Approx(cost).epsilon(1e-13));
      CHECK(a.cost == doctest::Approx(brute_min_cost(c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("assignment handles ties and duplicate rows") {
  Eigen::MatrixXd c(3, 3);
  c << 1, 1, 1, 1, 1, 1, 1, 1, 1;
  const Assignment a = solve_assignment(c);
  REQUIRE(is_permutation_matching(a.match));
  CHECK(a.cost == doctest::Approx(3.0));
}

TEST_CASE("lexicographic tie break returns the smallest optimal matching") {
  Eigen::MatrixXd flat = Eigen::MatrixXd::Zero(4, 4);
  const Assignment a = solve_assignment_lex(flat, 0.0);
  CHECK(a.match == std::vector<int>{0, 1, 2, 3});

  // two optimal matchings, (0,1) and (1,0); lex prefers the identity
  Eigen::MatrixXd c(2, 2);
  c << 2, 3, 3, 2;
  CHECK(solve_assignment_lex(c, 0.0).match == std::vector<int>{0, 1});
  c << 3, 2, 2, 3;
  CHECK(solve_assignment_lex(c, 0.0).match == std::vector<int>{1, 0});

  // near-tie within the tolerance window
  c << 1.0, 1.0 + 1e-13, 1.0 + 1e-13, 1.0;
  CHECK(solve_assignment_lex(c, 1e-9).match == std::vector<int>{0, 1});
}

TEST_CASE("lex matching stays optimal on random instances") {
  std::mt19937_64 rng(321);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    Eigen::MatrixXd c(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) c(i, j) = u(rng);
    const Assignment plain = solve_assignment(c);
    const Assignment lex = solve_assignment_lex(c, 1e-12);
    CHECK(lex.cost == doctest::Approx(plain.cost).epsilon(1e-12));
    REQUIRE(is_permutation_matching(lex.match));
  }
}

TEST_CASE("bottleneck value agrees with exhaustive minimax") {
  std::mt19937_64 rng(456);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 40; ++trial) {
      Eigen::MatrixXd c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) c(i, j) = u(rng);
      CHECK(bottleneck_value(c) ==
            doctest::Approx(brute_min_bottleneck(c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("bottleneck matching achieves the bottleneck value") {
  std::mt19937_64 rng(789);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 25; ++trial) {
    Eigen::MatrixXd c(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) c(i, j) = u(rng);
    const double value = bottleneck_value(c);
    const Assignment a = solve_bottleneck(c);
    REQUIRE(is_permutation_matching(a.match));
    double worst = 0.0;
    for (int i = 0; i < 5; ++i) worst = std::max(worst, c(i, a.match[i]));
    CHECK(worst == doctest::Approx(value).epsilon(1e-12));
    CHECK(a.cost == doctest::Approx(value).epsilon(1e-12));
  }
}
