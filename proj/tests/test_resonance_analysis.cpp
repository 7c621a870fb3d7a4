#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "reslab/domain_carving.hpp"
#include "reslab/errors.hpp"
#include "reslab/operator_models.hpp"
#include "reslab/resonance_analysis.hpp"
#include "reslab/resolvent_core.hpp"

using namespace reslab;

TEST_CASE("continuation follows the analytic sheet around the origin") {
  const RiggedModel fam = make_sqrt_branch_family(Complex{0.0, 0.0});
  // resonances are -1/(+-sqrt(z)); start on the +sqrt sheet at z = 1
  std::vector<Complex> waypoints;
  for (int k = 1; k <= 7; ++k) {
    const double th = std::numbers::pi * k / 8.0;
    waypoints.push_back(std::polar(1.0, th));
  }
  waypoints.push_back(Complex{-1.0, 0.0});
  const BranchTrajectory traj =
      continue_branch(fam, Complex{1.0, 0.0}, Complex{-1.0, 0.0}, waypoints);
  REQUIRE(traj.status == TrajectoryStatus::Ok);
  // -1/sqrt(z) continued along the upper arc lands at +i
  CHECK(std::abs(traj.values.back() - Complex{0.0, 1.0}) < 1e-9);
  CHECK(traj.path.back() == waypoints.back());
  // the walk ended on the real axis, so a boundary limit is recorded
  REQUIRE(traj.boundary_limit.has_value());
  CHECK(std::abs(*traj.boundary_limit - Complex{0.0, 1.0}) < 1e-9);
}

TEST_CASE("continuation through the branch point reports it") {
  const Complex z0{0.3, 0.4};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  const Complex start{1.3, 0.4};  // same height as the branch point
  const Complex start_r = resonance_spectrum(fam, start).resonances()[0];
  const std::vector<Complex> waypoints{Complex{-0.7, 0.4}};
  const BranchTrajectory traj =
      continue_branch(fam, start, start_r, waypoints);
  CHECK(traj.status == TrajectoryStatus::HitBranchPoint);
  // the reported leg brackets the branch point
  const double lo = std::min(traj.failure_interval.first.real(),
                             traj.failure_interval.second.real());
  const double hi = std::max(traj.failure_interval.first.real(),
                             traj.failure_interval.second.real());
  CHECK(lo <= z0.real());
  CHECK(hi >= z0.real());
}

TEST_CASE("continuation rejects a bad starting value") {
  const RiggedModel fam = make_sqrt_branch_family(Complex{0.0, 0.0});
  CHECK_THROWS_AS(
      continue_branch(fam, Complex{1.0, 0.0}, Complex{5.0, 5.0},
                      std::vector<Complex>{Complex{1.0, 1.0}}),
      RejectedInput);
}

TEST_CASE("monodromy of the square root family has period two") {
  const Complex z0{0.3, 0.4};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  const MonodromyResult loop = monodromy_loop(fam, z0, 0.25);
  REQUIRE(loop.resolved);
  CHECK(loop.period == 2);
  REQUIRE(loop.permutation.size() == 2);
  CHECK(loop.permutation[0] == 1);
  CHECK(loop.permutation[1] == 0);

  // a loop that encloses no branch point is trivial
  const MonodromyResult off = monodromy_loop(fam, z0 + 1.0, 0.25);
  REQUIRE(off.resolved);
  CHECK(off.period == 1);
}

TEST_CASE("monodromy closure on the two branch point family") {
  const Complex a{-0.4, 0.3};
  const Complex b{0.6, 0.3};
  const RiggedModel fam = make_two_branch_family(a, b);
  const MonodromyResult la = monodromy_loop(fam, a, 0.2);
  const MonodromyResult lb = monodromy_loop(fam, b, 0.2);
  REQUIRE(la.resolved);
  REQUIRE(lb.resolved);
  CHECK(la.period == 2);
  CHECK(lb.period == 2);
  // around both: the two transpositions compose to the identity
  const MonodromyResult both =
      monodromy_loop(fam, (a + b) / 2.0, std::abs(b - a));
  REQUIRE(both.resolved);
  CHECK(both.period == 1);
}

TEST_CASE("discriminant closed forms") {
  const Complex z0{0.1, 0.2};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  // (sigma1 - sigma2)^2 = 4 (z - z0)
  const Complex z = z0 + 0.25;
  CHECK(std::abs(discriminant_at(fam, z) - 1.0) < 1e-12);
  CHECK(std::abs(discriminant_at(fam, z0)) < 1e-12);

  const RiggedModel ctrl = make_absorbing_control(Complex{0.0, 0.5});
  CHECK(std::abs(discriminant_at(ctrl, Complex{1.0, 1.0}) - 1.0) < 1e-15);
}

TEST_CASE("branch point detection refines to the planted location") {
  const Complex z0{0.5, 0.5};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  DetectOptions opts;
  opts.grid_re = 24;
  opts.grid_im = 16;
  opts.threads = 2;
  const Rect rect{-1.0, 2.0, 0.05, 1.5};
  const auto reports = detect_branch_points(fam, rect, opts);
  REQUIRE(reports.size() == 1);
  CHECK(std::abs(reports[0].location - z0) < 1e-6);
  CHECK(reports[0].kind == SingularityKind::BranchPoint);
  CHECK(reports[0].period == 2);

  const RiggedModel two =
      make_two_branch_family(Complex{-0.4, 0.6}, Complex{1.2, 0.4});
  auto pair_reports = detect_branch_points(two, rect, opts);
  REQUIRE(pair_reports.size() == 2);
  // detection order follows the grid scan, so match by real part
  std::sort(pair_reports.begin(), pair_reports.end(),
            [](const SingularityReport& a, const SingularityReport& b) {
              return a.location.real() < b.location.real();
            });
  CHECK(std::abs(pair_reports[0].location - Complex{-0.4, 0.6}) < 1e-6);
  CHECK(std::abs(pair_reports[1].location - Complex{1.2, 0.4}) < 1e-6);
}

TEST_CASE("detection survives a grid that ties two nodes around the target") {
  // 32 columns over [-1, 2] put re = 0.5 exactly between two nodes, and
  // |D| rounds to the same double on both.  The minima scan must still
  // promote one of them instead of dropping the pair.
  const Complex z0{0.5, 0.5};
  DetectOptions opts;
  opts.grid_re = 32;
  opts.grid_im = 20;
  opts.threads = 2;
  const Rect rect{-1.0, 2.0, 0.05, 1.5};
  const auto reports = detect_branch_points(make_sqrt_branch_family(z0), rect, opts);
  REQUIRE(reports.size() == 1);
  CHECK(std::abs(reports[0].location - z0) < 1e-6);
  CHECK(reports[0].kind == SingularityKind::BranchPoint);

  AbsorbingSweepOptions sweep;
  sweep.grid_re = 24;
  sweep.grid_im = 16;
  sweep.threads = 2;
  const AbsorbingSweepReport hit = absorbing_sweep(
      make_absorbing_control(Complex{0.0, 0.5}), Rect{-1.0, 1.0, 0.1, 1.0}, sweep);
  REQUIRE(hit.suspects.size() == 1);
  CHECK(std::abs(hit.suspects[0].location - Complex{0.0, 0.5}) < 1e-4);
}

TEST_CASE("classification separates branch points from absorbing points") {
  const Complex z0{0.3, 0.4};
  const SingularityReport branch =
      classify_singularity(make_sqrt_branch_family(z0), z0);
  CHECK(branch.kind == SingularityKind::BranchPoint);
  CHECK(branch.period == 2);

  const SingularityReport regular =
      classify_singularity(make_sqrt_branch_family(z0), z0 + 0.8);
  CHECK(regular.kind == SingularityKind::Regular);

  const SingularityReport absorbing =
      classify_singularity(make_absorbing_control(z0), z0);
  CHECK(absorbing.kind == SingularityKind::AbsorbingSuspect);
  CHECK(absorbing.min_sigma < 1e-4);
}

TEST_CASE("absorbing sweep flags the control and stays quiet on random models") {
  const Complex z0{0.1, 0.6};
  AbsorbingSweepOptions opts;
  opts.grid_re = 24;
  opts.grid_im = 16;
  opts.threads = 2;
  const Rect rect{-1.0, 1.0, 0.1, 1.2};
  const AbsorbingSweepReport hit =
      absorbing_sweep(make_absorbing_control(z0), rect, opts);
  REQUIRE(hit.suspects.size() == 1);
  CHECK(std::abs(hit.suspects[0].location - z0) < 1e-4);

  std::mt19937_64 rng(515);
  const RiggedModel rnd = random_finite_model(5, rng);
  const AbsorbingSweepReport quiet = absorbing_sweep(rnd, rect, opts);
  CHECK(quiet.suspects.empty());
}

TEST_CASE("impacting branches on the embedded block") {
  const RiggedModel block = make_embedded_block(0.0, 1.0, 600);
  const ImpactingSet mid = find_impacting(block, 0.5);
  REQUIRE(mid.branches.size() == 1);
  CHECK(mid.impacting_count() == 1);
  CHECK(std::abs(mid.branches[0].boundary_value - Complex{0.5, 0.0}) < 1e-8);

  const ImpactingSet neg = find_impacting(block, -0.5);
  CHECK(neg.impacting_count() == 0);
  REQUIRE(neg.branches.size() == 1);
  CHECK(std::abs(neg.branches[0].boundary_value - Complex{-0.5, 0.0}) < 1e-8);

  // half-line model never impacts: boundary values stay off the real line
  CMatrix one = CMatrix::Identity(1, 1);
  const RiggedModel jac = make_half_line_jacobi({1}, one);
  const ImpactingSet none = find_impacting(jac, 0.5);
  CHECK(none.impacting_count() == 0);
}

TEST_CASE("single-valuedness verification on the embedded block") {
  const RiggedModel block = make_embedded_block(0.0, 1.0, 600);
  const ConeRegion region({{-0.9, -0.15}, {0.15, 0.9}}, 0.1);
  std::vector<ImpactingSet> sets;
  for (double lam : {-0.8, -0.5, -0.2, 0.2, 0.5, 0.8})
    sets.push_back(find_impacting(block, lam));
  const SingleValuednessReport rep =
      verify_single_valuedness(block, region, sets);
  CHECK(rep.pass);
  CHECK(rep.global_branches == 1);
  CHECK(rep.impacting_chains == 1);
  CHECK(rep.min_verified_height > 0.0);
  CHECK(!rep.checks.empty());
  for (const auto& c : rep.checks) CHECK(c.pass);
}

TEST_CASE("ray survival away from the branch point") {
  const RiggedModel fam = make_sqrt_branch_family(Complex{0.0, 0.0});
  const Complex z1{1.0, 0.8};
  const Complex start_r = resonance_spectrum(fam, z1).resonances()[0];
  const Rect rect{-2.0, 2.0, 0.05, 2.0};
  const RayStats stats = ray_survival_stats(fam, z1, start_r, rect, 12);
  CHECK(stats.n_rays == 12);
  CHECK(stats.survived == 12);
  CHECK(stats.survival_fraction == doctest::Approx(1.0));
  CHECK(stats.failed_rays.empty());
}
