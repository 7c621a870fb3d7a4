#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "reslab/errors.hpp"
#include "reslab/flow_oracle.hpp"
#include "reslab/operator_models.hpp"
#include "reslab/resolvent_core.hpp"

using namespace reslab;

namespace {

// eigenvalues of H0 + sV below lambda, straight from the eigensolver
int count_below(const RiggedModel& m, double s, double lambda) {
  const CMatrix h = m.h0 + s * perturbation(m);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  int n = 0;
  for (int i = 0; i < es.eigenvalues().size(); ++i)
    if (es.eigenvalues()[i] < lambda) ++n;
  return n;
}

}  // namespace

TEST_CASE("worked example crossing at s = (lambda^2 - 1)/lambda") {
  const RiggedModel m = make_rank_one(
      {-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2), 1.0);
  const double lambda = 1.2;
  const auto recs = crossings(m, lambda);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].s_star ==
        doctest::Approx((lambda * lambda - 1.0) / lambda).epsilon(1e-9));
  CHECK(recs[0].direction == 1);
  CHECK(recs[0].multiplicity == 1);
  CHECK_FALSE(recs[0].degenerate);
  CHECK(recs[0].hf_slope > 0.0);
  CHECK(net_flow(recs) == 1);
}

TEST_CASE("no crossings above the reach of the perturbation") {
  const RiggedModel m = make_rank_one(
      {-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2), 1.0);
  // ||V|| = 1, so no eigenvalue can reach 3 from {-1, 1} with s in [0, 1]
  CHECK(crossings(m, 3.0).empty());
  CHECK(crossings(m, -3.0).empty());
}

TEST_CASE("crossings match endpoint counting on random models") {
  std::mt19937_64 rng(2718);
  for (int trial = 0; trial < 40; ++trial) {
    const RiggedModel m = random_finite_model(5, rng);
    const double lambda = m.h0_eigenvalues[2] + 0.37;
    const auto recs = crossings(m, lambda);
    int flow = 0;
    for (const auto& r : recs) {
      CHECK(r.s_star >= 0.0);
      CHECK(r.s_star <= 1.0);
      flow += r.direction * r.multiplicity;
    }
    CHECK(flow == count_below(m, 0.0, lambda) - count_below(m, 1.0, lambda));
    // records sorted by crossing location
    for (std::size_t i = 0; i + 1 < recs.size(); ++i)
      CHECK(recs[i].s_star <= recs[i + 1].s_star);
  }
}

TEST_CASE("crossing set equals the real resonances in the unit interval") {
  std::mt19937_64 rng(9001);
  for (int trial = 0; trial < 30; ++trial) {
    const RiggedModel m = random_finite_model(4, rng);
    // a level strictly between consecutive eigenvalues of H0
    const double lambda =
        0.5 * (m.h0_eigenvalues[1] + m.h0_eigenvalues[2]);
    const auto recs = crossings(m, lambda);

    std::vector<double> from_resonances;
    for (Complex r : resonance_spectrum(m, Complex{lambda, 0.0}).resonances())
      if (std::abs(r.imag()) < 1e-9 && r.real() > -1e-12 &&
          r.real() < 1.0 + 1e-12)
        from_resonances.push_back(r.real());
    std::sort(from_resonances.begin(), from_resonances.end());

    REQUIRE(recs.size() == from_resonances.size());
    for (std::size_t i = 0; i < recs.size(); ++i)
      CHECK(std::abs(recs[i].s_star - from_resonances[i]) < 1e-8);
  }
}

TEST_CASE("hellmann-feynman slope agrees with a finite difference") {
  const RiggedModel m = make_rank_one(
      {-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2), 1.0);
  const auto recs = crossings(m, 1.2);
  REQUIRE(recs.size() == 1);
  const double s = recs[0].s_star;
  const double h = 1e-6;
  auto top_eig = [&](double sv) {
    Eigen::SelfAdjointEigenSolver<CMatrix> es(m.h0 + sv * perturbation(m));
    return es.eigenvalues()[recs[0].eigen_index];
  };
  const double fd = (top_eig(s + h) - top_eig(s - h)) / (2.0 * h);
  CHECK(recs[0].hf_slope == doctest::Approx(fd).epsilon(1e-4));
}

TEST_CASE("infinite kinds are rejected") {
  CMatrix one = CMatrix::Identity(1, 1);
  const RiggedModel jac = make_half_line_jacobi({1}, one);
  CHECK_THROWS_AS(crossings(jac, 0.5), Unsupported);
}
