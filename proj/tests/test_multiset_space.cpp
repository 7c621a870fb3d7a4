#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include "reslab/errors.hpp"
#include "reslab/multiset_space.hpp"

using reslab::BasedMultiset;
using reslab::Complex;
using reslab::multiset_distance;
using reslab::phi_norm;
using reslab::PNorm;

namespace {

// Reference route: pad both sides with base copies and try every
// permutation. The winning matched-distance list is fed through the same
// phi_norm as the production code.
double brute_distance(const BasedMultiset& a, const BasedMultiset& b,
                      PNorm p) {
  const auto av = a.expanded();
  const auto bv = b.expanded();
  const int m = static_cast<int>(av.size());
  const int n = static_cast<int>(bv.size());
  const int big = m + n;
  if (big == 0) return 0.0;
  std::vector<Complex> rows(av), cols(bv);
  rows.insert(rows.end(), n, Complex{0.0, 0.0});
  cols.insert(cols.end(), m, Complex{0.0, 0.0});

  std::vector<int> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best_key = std::numeric_limits<double>::infinity();
  std::vector<double> d(big), best_dists;
  do {
    double key = 0.0;
    for (int i = 0; i < big; ++i) {
      d[i] = std::abs(rows[i] - cols[perm[i]]);
      if (p == PNorm::Inf)
        key = std::max(key, d[i]);
      else if (p == PNorm::One)
        key += d[i];
      else
        key += d[i] * d[i];
    }
    if (key < best_key) {
      best_key = key;
      best_dists = d;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return phi_norm(best_dists, p);
}

BasedMultiset random_multiset(std::mt19937_64& rng, int max_support) {
  std::uniform_int_distribution<int> n(0, max_support);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<Complex> vals;
  const int k = n(rng);
  for (int i = 0; i < k; ++i) vals.emplace_back(u(rng), u(rng));
  return BasedMultiset::from_values(vals, 1e-9);
}

}  // namespace

TEST_CASE("worked values for the two four-point multisets") {
  const BasedMultiset a({{Complex{1, 0}, 1}, {Complex{-1, 0}, 1}});
  const BasedMultiset b({{Complex{0, 1}, 1}, {Complex{0, -1}, 1}});
  CHECK(multiset_distance(a, b, PNorm::One) ==
        doctest::Approx(2.0 * std::numbers::sqrt2).epsilon(1e-12));
  CHECK(multiset_distance(a, b, PNorm::Inf) ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(multiset_distance(a, b, PNorm::Two) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("distance to the empty multiset is the norm of the support") {
  const BasedMultiset a({{Complex{0, 3}, 1}});
  const BasedMultiset empty;
  CHECK(multiset_distance(a, empty, PNorm::One) == doctest::Approx(3.0));
  CHECK(multiset_distance(empty, empty, PNorm::Two) == 0.0);

  // each copy of a multiple value pays its own way to the base
  const BasedMultiset twice({{Complex{0, 3}, 2}});
  CHECK(multiset_distance(twice, empty, PNorm::One) == doctest::Approx(6.0));
  CHECK(multiset_distance(twice, empty, PNorm::Inf) == doctest::Approx(3.0));
}

TEST_CASE("construction validates and merges") {
  CHECK_THROWS_AS(BasedMultiset({{Complex{0, 0}, 1}}), reslab::RejectedInput);
  CHECK_THROWS_AS(BasedMultiset({{Complex{1, 0}, 0}}), reslab::RejectedInput);
  const BasedMultiset merged(
      {{Complex{1, 0}, 1}, {Complex{1, 0}, 2}, {Complex{2, 0}, 1}});
  REQUIRE(merged.support().size() == 2);
  CHECK(merged.support()[0].second == 3);
  CHECK(merged.total_mult() == 4);

  const std::vector<Complex> vals{Complex{1e-12, 0}, Complex{1, 1}};
  const BasedMultiset collapsed = BasedMultiset::from_values(vals, 1e-9);
  CHECK(collapsed.total_mult() == 1);
}

TEST_CASE("metric axioms on random triples") {
  std::mt19937_64 rng(2024);
  bool symmetric = true, triangle = true, reflexive = true, separating = true;
  for (int trial = 0; trial < 300; ++trial) {
    const BasedMultiset x = random_multiset(rng, 6);
    const BasedMultiset y = random_multiset(rng, 6);
    const BasedMultiset z = random_multiset(rng, 6);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf}) {
      const double xy = multiset_distance(x, y, p);
      const double yx = multiset_distance(y, x, p);
      const double xz = multiset_distance(x, z, p);
      const double zy = multiset_distance(z, y, p);
      if (std::abs(xy - yx) > 1e-10) symmetric = false;
      if (xy > xz + zy + 1e-10) triangle = false;
      if (multiset_distance(x, x, p) != 0.0) reflexive = false;
      if (xy == 0.0 && !(x.support() == y.support())) separating = false;
    }
  }
  CHECK(symmetric);
  CHECK(triangle);
  CHECK(reflexive);
  CHECK(separating);
}

TEST_CASE("solver agrees exactly with the brute-force augmented matching") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const BasedMultiset a = random_multiset(rng, 4);
    const BasedMultiset b = random_multiset(rng, 4);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf}) {
      const double fast = multiset_distance(a, b, p);
      const double slow = brute_distance(a, b, p);
      CHECK(fast == slow);
    }
  }
  // a few full-size instances at the top of the brute-force budget
  for (int trial = 0; trial < 6; ++trial) {
    const BasedMultiset a = random_multiset(rng, 5);
    const BasedMultiset b = random_multiset(rng, 5);
    CHECK(multiset_distance(a, b, PNorm::One) ==
          brute_distance(a, b, PNorm::One));
    CHECK(multiset_distance(a, b, PNorm::Two) ==
          brute_distance(a, b, PNorm::Two));
  }
}

TEST_CASE("bottleneck distance is dominated by the additive ones") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 100; ++trial) {
    const BasedMultiset a = random_multiset(rng, 5);
    const BasedMultiset b = random_multiset(rng, 5);
    const double d1 = multiset_distance(a, b, PNorm::One);
    const double d2 = multiset_distance(a, b, PNorm::Two);
    const double di = multiset_distance(a, b, PNorm::Inf);
    CHECK(di <= d2 + 1e-12);
    CHECK(d2 <= d1 + 1e-12);
  }
}

TEST_CASE("phi_norm rejects negatives and is order independent") {
  CHECK_THROWS_AS(phi_norm(std::vector<double>{1.0, -0.5}, PNorm::One),
                  reslab::RejectedInput);
  const std::vector<double> fwd{0.1, 0.7, 0.3, 1e-17, 0.9};
  std::vector<double> rev(fwd.rbegin(), fwd.rend());
  for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf})
    CHECK(phi_norm(fwd, p) == phi_norm(rev, p));
}
