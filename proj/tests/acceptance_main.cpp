// Acceptance gate: one line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "reslab/domain_carving.hpp"
#include "reslab/enumeration.hpp"
#include "reslab/flow_oracle.hpp"
#include "reslab/multiset_space.hpp"
#include "reslab/operator_models.hpp"
#include "reslab/resolvent_core.hpp"
#include "reslab/resonance_analysis.hpp"

using namespace reslab;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int index, const std::string& name, bool pass,
            const std::string& detail) {
  std::printf("[%s] %d. %s (%s)\n", pass ? "PASS" : "FAIL", index,
              name.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

// ---------------------------------------------------------------- 1

void criterion_pole_characterization() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> ux(-3.0, 3.0);
  std::uniform_real_distribution<double> uy(0.05, 2.0);
  double worst = 0.0;
  int checked = 0;
  for (int k = 0; k < 200; ++k) {
    const int dim = 2 + k % 7;
    const RiggedModel m = random_finite_model(dim, rng);
    for (int p = 0; p < 20; ++p) {
      const Complex z{ux(rng), uy(rng)};
      const CMatrix tj = sandwiched_tj(m, z);
      for (Complex r : resonance_spectrum(m, z).resonances()) {
        worst = std::max(worst, pole_residual(tj, r));
        ++checked;
      }
    }
  }
  const double dt = seconds_since(t0);
  report(1, "pole characterization on 200 random models",
         worst < 1e-8 && dt < 30.0,
         "max residual " + fmt(worst) + " over " + std::to_string(checked) +
             " resonances, " + fmt(dt) + "s");
}

// ---------------------------------------------------------------- 2

void criterion_rank_one_closed_forms() {
  const RiggedModel scalar =
      make_rank_one({0.0}, CVector::Constant(1, 1.0), 1.0);
  const RiggedModel twolevel = make_rank_one(
      {-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2), 1.0);

  double worst = 0.0;
  int points = 0;
  for (int i = 0; i < 10; ++i) {
    for (int k = 0; k < 10; ++k) {
      const Complex z{-2.0 + 4.0 * i / 9.0, 0.1 + 1.9 * k / 9.0};
      const auto r1 = resonance_spectrum(scalar, z).resonances();
      const auto r2 = resonance_spectrum(twolevel, z).resonances();
      if (r1.size() != 1 || r2.size() != 1) {
        worst = 1.0;
        continue;
      }
      worst = std::max(worst, std::abs(r1[0] - z));
      worst = std::max(worst, std::abs(r2[0] - (z * z - 1.0) / z));
      ++points;
    }
  }

  std::mt19937_64 rng(202);
  std::uniform_int_distribution<int> ud(2, 6);
  std::uniform_real_distribution<double> ue(-3.0, 3.0);
  std::uniform_real_distribution<double> us(0.1, 3.0);
  std::uniform_real_distribution<double> uc(-1.0, 1.0);
  std::vector<Complex> grid;
  for (int i = 0; i < 10; ++i)
    for (int k = 0; k < 10; ++k)
      grid.emplace_back(-3.0 + 6.0 * i / 9.0, 0.1 + 1.9 * k / 9.0);
  bool herglotz_ok = true;
  for (int trial = 0; trial < 50; ++trial) {
    const int dim = ud(rng);
    std::vector<double> diag(dim);
    for (double& d : diag) d = ue(rng);
    CVector phi(dim);
    for (int i = 0; i < dim; ++i) phi[i] = Complex{uc(rng), uc(rng)};
    if (phi.norm() < 1e-3) phi[0] += 1.0;
    const RiggedModel m = make_rank_one(diag, phi, us(rng));
    const HerglotzReport h = herglotz_check(m, grid);
    if (!h.pass || !(h.min_im > 0.0)) herglotz_ok = false;
  }

  report(2, "rank-one closed forms and Herglotz property",
         worst < 1e-10 && points == 100 && herglotz_ok,
         "max closed-form error " + fmt(worst) + ", 50 Herglotz models");
}

// ---------------------------------------------------------------- 3

double brute_metric(const BasedMultiset& a, const BasedMultiset& b, PNorm p) {
  const auto av = a.expanded();
  const auto bv = b.expanded();
  const int big = static_cast<int>(av.size() + bv.size());
  if (big == 0) return 0.0;
  std::vector<Complex> rows(av), cols(bv);
  rows.insert(rows.end(), bv.size(), Complex{0.0, 0.0});
  cols.insert(cols.end(), av.size(), Complex{0.0, 0.0});
  std::vector<int> perm(big);
  std::iota(perm.begin(), perm.end(), 0);
  double best_key = std::numeric_limits<double>::infinity();
  std::vector<double> d(big), best;
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
      best = d;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return phi_norm(best, p);
}

void criterion_multiset_metric() {
  const BasedMultiset wa({{Complex{1, 0}, 1}, {Complex{-1, 0}, 1}});
  const BasedMultiset wb({{Complex{0, 1}, 1}, {Complex{0, -1}, 1}});
  bool worked =
      std::abs(multiset_distance(wa, wb, PNorm::One) -
               2.0 * std::numbers::sqrt2) < 1e-12 &&
      std::abs(multiset_distance(wa, wb, PNorm::Inf) - 1.0) < 1e-12;

  std::mt19937_64 rng(303);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  auto draw = [&](int max_support) {
    std::uniform_int_distribution<int> n(0, max_support);
    std::vector<Complex> vals;
    const int k = n(rng);
    for (int i = 0; i < k; ++i) vals.emplace_back(u(rng), u(rng));
    return BasedMultiset::from_values(vals, 1e-9);
  };

  bool axioms = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const BasedMultiset x = draw(6), y = draw(6), z = draw(6);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf}) {
      const double xy = multiset_distance(x, y, p);
      if (std::abs(xy - multiset_distance(y, x, p)) > 1e-10) axioms = false;
      if (xy >
          multiset_distance(x, z, p) + multiset_distance(z, y, p) + 1e-10)
        axioms = false;
    }
  }

  bool exact = true;
  for (int trial = 0; trial < 150; ++trial) {
    const BasedMultiset x = draw(3), y = draw(3);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf})
      if (multiset_distance(x, y, p) != brute_metric(x, y, p)) exact = false;
  }
  for (int trial = 0; trial < 10; ++trial) {
    const BasedMultiset x = draw(5), y = draw(5);
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf})
      if (multiset_distance(x, y, p) != brute_metric(x, y, p)) exact = false;
  }

  report(3, "multiset metric axioms, worked values, brute force",
         worked && axioms && exact,
         std::string("worked ") + (worked ? "ok" : "BAD") + ", axioms " +
             (axioms ? "ok" : "BAD") + ", exactness " +
             (exact ? "ok" : "BAD"));
}

// ---------------------------------------------------------------- 4

void criterion_enumeration() {
  auto diag_family = [](double t) {
    return BasedMultiset::from_values(
        std::vector<Complex>{Complex{t, 0.0}, Complex{1.0 - t, 0.0}}, 0.0);
  };
  auto offdiag_family = [](double t) {
    return BasedMultiset::from_values(
        std::vector<Complex>{Complex{t, 0.0}, Complex{-t, 0.0}}, 0.0);
  };

  bool pointwise = true;
  bool jumps_ok = true;
  for (int fam = 0; fam < 2; ++fam) {
    double prev_jump = 0.0;
    for (int level = 0; level <= 4; ++level) {
      const int n = 32 << level;
      SpectralPath path;
      for (int i = 0; i <= n; ++i) {
        const double t = static_cast<double>(i) / n;
        path.params.push_back(t);
        path.spectra.push_back(fam == 0 ? diag_family(t) : offdiag_family(t));
      }
      const SelectedFunctions sel = enumerate_path(path);
      if (sel.status != EnumStatus::Ok) {
        pointwise = false;
        break;
      }
      // live branch values must reproduce the analytic spectrum pointwise
      for (std::size_t k = 0; k < path.params.size(); ++k) {
        const double t = path.params[k];
        std::vector<double> live;
        for (const auto& br : sel.branches) {
          const int idx = static_cast<int>(k) - br.start;
          if (idx >= 0 && idx < static_cast<int>(br.values.size())) {
            const Complex v = br.values[idx];
            if (std::abs(v) > 0.0) live.push_back(v.real());
          }
        }
        std::vector<double> expect;
        if (fam == 0) {
          if (t != 0.0) expect.push_back(t);
          if (t != 1.0) expect.push_back(1.0 - t);
        } else {
          if (t != 0.0) {
            expect.push_back(t);
            expect.push_back(-t);
          }
        }
        std::sort(live.begin(), live.end());
        std::sort(expect.begin(), expect.end());
        if (live.size() != expect.size()) {
          pointwise = false;
          continue;
        }
        for (std::size_t i = 0; i < live.size(); ++i)
          if (std::abs(live[i] - expect[i]) > 1e-12) pointwise = false;
      }
      const double jump = sel.max_jump();
      if (level > 0 && !(jump <= prev_jump / 1.5)) jumps_ok = false;
      prev_jump = jump;
    }
  }
  report(4, "continuous enumeration on the two reference families",
         pointwise && jumps_ok,
         std::string("pointwise ") + (pointwise ? "ok" : "BAD") +
             ", jump halving " + (jumps_ok ? "ok" : "BAD"));
}

// ---------------------------------------------------------------- 5

void criterion_egorov() {
  const auto t0 = Clock::now();
  CMatrix one = CMatrix::Identity(1, 1);
  const RiggedModel model = make_half_line_jacobi({1}, one);
  auto evaluator = [&](Complex z) { return eval_T(model, z).matrix; };
  EgorovOptions opts;
  opts.threads = 2;
  const EgorovCertificate cert =
      egorov_compact(evaluator, {-1.5, 1.5}, 0.1, opts);

  bool witnesses_ok = true;
  for (const auto& w : cert.witnesses) {
    if (!(w.deviation < 1.0 / w.m)) witnesses_ok = false;
    if (!recheck_witness(evaluator, cert, w)) witnesses_ok = false;
  }

  const double jump_at = 0.0037;
  auto jump_eval = [&](Complex z) {
    CMatrix t(1, 1);
    t(0, 0) = z.real() < jump_at ? 0.0 : 1.0;
    return t;
  };
  const EgorovCertificate jump_cert =
      egorov_compact(jump_eval, {-1.0, 1.0}, 0.05, opts);
  const bool jump_excluded = !jump_cert.region.contains(jump_at);

  const double dt = seconds_since(t0);
  report(5, "Egorov certificate at grid scale",
         cert.ok && cert.uncovered_measure < 0.1 && witnesses_ok &&
             jump_excluded && dt < 120.0,
         "uncovered " + fmt(cert.uncovered_measure) + ", " +
             std::to_string(cert.witnesses.size()) + " witnesses, jump " +
             (jump_excluded ? "excluded" : "NOT excluded") + ", " + fmt(dt) +
             "s");
}

// ---------------------------------------------------------------- 6

void criterion_branch_detection() {
  const Complex z0{0.5, 0.5};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  DetectOptions opts;
  opts.threads = 2;
  const auto reports =
      detect_branch_points(fam, Rect{-1.0, 2.0, 0.05, 1.5}, opts);
  const bool found = reports.size() == 1 &&
                     std::abs(reports[0].location - z0) < 1e-6 &&
                     reports[0].kind == SingularityKind::BranchPoint &&
                     reports[0].period == 2;

  const Complex a{-0.4, 0.3}, b{0.6, 0.3};
  const RiggedModel two = make_two_branch_family(a, b);
  const MonodromyResult la = monodromy_loop(two, a, 0.2);
  const MonodromyResult lb = monodromy_loop(two, b, 0.2);
  const MonodromyResult lab =
      monodromy_loop(two, (a + b) / 2.0, std::abs(b - a));
  const bool closure = la.resolved && lb.resolved && lab.resolved &&
                       la.period == 2 && lb.period == 2 && lab.period == 1;

  const double err =
      reports.size() == 1 ? std::abs(reports[0].location - z0) : 1.0;
  report(6, "branch detection and monodromy closure", found && closure,
         "location error " + fmt(err) + ", closure " +
             (closure ? "ok" : "BAD"));
}

// ---------------------------------------------------------------- 7

void criterion_impacting_scenario() {
  const RiggedModel block = make_embedded_block(0.0, 1.0, 800);
  auto evaluator = [&](Complex z) { return eval_T(block, z).matrix; };
  EgorovOptions eopts;
  eopts.threads = 2;
  const EgorovCertificate cert =
      egorov_compact(evaluator, {-1.0, 1.0}, 0.1, eopts);

  bool carved = cert.ok && !cert.region.contains(0.0);

  // lambda grid: measure quantiles of the carved compact
  std::vector<double> lambdas;
  const double total = cert.region.measure();
  for (int i = 0; i < 9; ++i) {
    double target = total * (i + 0.5) / 9.0;
    for (const auto& [lo, hi] : cert.region.intervals()) {
      if (target <= hi - lo) {
        lambdas.push_back(lo + target);
        break;
      }
      target -= hi - lo;
    }
  }

  bool boundary_ok = true;
  int impacting_lambdas = 0;
  std::vector<ImpactingSet> sets;
  for (double lam : lambdas) {
    const ImpactingSet set = find_impacting(block, lam);
    sets.push_back(set);
    const bool inside = lam > 1e-6 && lam < 1.0 - 1e-6;
    if (inside) {
      if (set.impacting_count() != 1) boundary_ok = false;
      ++impacting_lambdas;
      for (const auto& br : set.branches)
        if (br.impacting &&
            std::abs(br.boundary_value - Complex{lam, 0.0}) > 1e-8)
          boundary_ok = false;
    } else if (set.impacting_count() != 0) {
      boundary_ok = false;
    }
  }
  const SingleValuednessReport verify =
      verify_single_valuedness(block, cert.region, sets);
  const bool one_branch = verify.impacting_chains == 1 && verify.pass;

  // the half-line control never impacts
  CMatrix one = CMatrix::Identity(1, 1);
  const RiggedModel jac = make_half_line_jacobi({1}, one);
  bool control_ok = true;
  for (double lam : {-1.2, -0.6, 0.0, 0.6, 1.2})
    if (find_impacting(jac, lam).impacting_count() != 0) control_ok = false;

  report(7, "impacting resonances with a carved domain",
         carved && boundary_ok && one_branch && control_ok,
         std::string("carve ") + (carved ? "ok" : "BAD") + ", boundary " +
             (boundary_ok ? "ok" : "BAD") + ", chains " +
             std::to_string(verify.impacting_chains) + ", control " +
             (control_ok ? "ok" : "BAD"));
}

// ---------------------------------------------------------------- 8

void criterion_oracle_equivalence() {
  std::mt19937_64 rng(808);
  bool equal = true;
  double max_gap = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int dim = 2 + trial % 7;
    const RiggedModel m = random_finite_model(dim, rng);
    // lambda strictly inside the widest interior gap of H0
    int gi = 0;
    double gw = -1.0;
    for (int i = 0; i + 1 < dim; ++i) {
      const double w = m.h0_eigenvalues[i + 1] - m.h0_eigenvalues[i];
      if (w > gw) {
        gw = w;
        gi = i;
      }
    }
    const double lambda =
        0.5 * (m.h0_eigenvalues[gi] + m.h0_eigenvalues[gi + 1]);

    const auto recs = crossings(m, lambda);
    std::vector<double> res;
    for (Complex r : resonance_spectrum(m, Complex{lambda, 0.0}).resonances())
      if (std::abs(r.imag()) < 1e-9 && r.real() > -1e-12 &&
          r.real() < 1.0 + 1e-12)
        res.push_back(r.real());
    std::sort(res.begin(), res.end());
    if (recs.size() != res.size()) {
      equal = false;
      continue;
    }
    for (std::size_t i = 0; i < recs.size(); ++i) {
      const double gap = std::abs(recs[i].s_star - res[i]);
      max_gap = std::max(max_gap, gap);
      if (gap > 1e-8) equal = false;
    }
  }

  const RiggedModel worked = make_rank_one(
      {-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2), 1.0);
  const auto wr = crossings(worked, 1.2);
  const bool worked_ok =
      wr.size() == 1 && std::abs(wr[0].s_star - 11.0 / 30.0) < 1e-8;

  report(8, "crossing oracle equals the resonance route", equal && worked_ok,
         "max |s* - r| " + fmt(max_gap) + ", worked example " +
             (worked_ok ? "ok" : "BAD"));
}

// ---------------------------------------------------------------- 9

void criterion_absorbing_sweep() {
  std::mt19937_64 rng(909);
  AbsorbingSweepOptions opts;
  opts.threads = 2;
  int suspects = 0;
  double min_sigma = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 50; ++trial) {
    const RiggedModel m = random_finite_model(6, rng);
    const AbsorbingSweepReport rep =
        absorbing_sweep(m, Rect{-3.0, 3.0, 0.05, 1.5}, opts);
    min_sigma = std::min(min_sigma, rep.min_sigma_seen);
    suspects += static_cast<int>(rep.suspects.size());
    for (const auto& s : rep.suspects)
      std::printf("    reportable event: absorbing suspect at (%g, %g), "
                  "min |sigma| %g\n",
                  s.location.real(), s.location.imag(), s.min_sigma);
  }
  report(9, "absorbing sweep over 50 random models", suspects == 0,
         std::to_string(suspects) + " suspects, global min |sigma| " +
             fmt(min_sigma));
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_pole_characterization();
  criterion_rank_one_closed_forms();
  criterion_multiset_metric();
  criterion_enumeration();
  criterion_egorov();
  criterion_branch_detection();
  criterion_impacting_scenario();
  criterion_oracle_equivalence();
  criterion_absorbing_sweep();
  if (g_failures == 0)
    std::printf("all 9 criteria passed\n");
  else
    std::printf("%d criteria FAILED\n", g_failures);
  return g_failures;
}
