#include "reslab/selftest.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "reslab/domain_carving.hpp"
#include "reslab/enumeration.hpp"
#include "reslab/errors.hpp"
#include "reslab/flow_oracle.hpp"
#include "reslab/multiset_space.hpp"
#include "reslab/operator_models.hpp"
#include "reslab/resolvent_core.hpp"
#include "reslab/resonance_analysis.hpp"
#include "reslab/scenario.hpp"

namespace reslab {

namespace {

struct Suite {
  std::ostream& out;
  int failures = 0;

  void check(const std::string& name, bool pass,
             const std::string& detail = "") {
    if (pass) {
      out << "[ok]   " << name << "\n";
    } else {
      ++failures;
      out << "[FAIL] " << name;
      if (!detail.empty()) out << ": " << detail;
      out << "\n";
    }
  }
};

Complex jacobi_w(Complex z) {
  // |w| < 1 root of w^2 - z w + 1 = 0
  const Complex s = std::sqrt(z * z - 4.0);
  const Complex a = (z + s) / 2.0;
  const Complex b = (z - s) / 2.0;
  return std::abs(a) < std::abs(b) ? a : b;
}

void metric_checks(Suite& s) {
  const BasedMultiset a({{Complex{1, 0}, 1}, {Complex{-1, 0}, 1}});
  const BasedMultiset b({{Complex{0, 1}, 1}, {Complex{0, -1}, 1}});
  const double d1 = multiset_distance(a, b, PNorm::One);
  const double dinf = multiset_distance(a, b, PNorm::Inf);
  const double d2 = multiset_distance(a, b, PNorm::Two);
  s.check("metric worked value p=1",
          std::abs(d1 - 2.0 * std::numbers::sqrt2) < 1e-12,
          "got " + std::to_string(d1));
  s.check("metric worked value p=inf", std::abs(dinf - 1.0) < 1e-12,
          "got " + std::to_string(dinf));
  s.check("metric worked value p=2", std::abs(d2 - 2.0) < 1e-12,
          "got " + std::to_string(d2));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::uniform_int_distribution<int> n(0, 4);
  auto draw = [&]() {
    std::vector<Complex> vals;
    const int k = n(rng);
    for (int i = 0; i < k; ++i) vals.emplace_back(u(rng), u(rng));
    return BasedMultiset::from_values(vals, 1e-12);
  };
  bool symmetric = true, triangle = true, identity = true;
  for (int trial = 0; trial < 40; ++trial) {
    const auto x = draw(), y = draw(), w = draw();
    for (PNorm p : {PNorm::One, PNorm::Two, PNorm::Inf}) {
      const double xy = multiset_distance(x, y, p);
      const double yx = multiset_distance(y, x, p);
      const double xw = multiset_distance(x, w, p);
      const double wy = multiset_distance(w, y, p);
      if (std::abs(xy - yx) > 1e-10) symmetric = false;
      if (xy > xw + wy + 1e-10) triangle = false;
      if (multiset_distance(x, x, p) > 1e-12) identity = false;
    }
  }
  s.check("metric symmetry", symmetric);
  s.check("metric triangle inequality", triangle);
  s.check("metric identity", identity);
}

void green_checks(Suite& s) {
  const Complex z{0.3, 0.2};
  const Complex w = jacobi_w(z);
  const Complex g11 = jacobi_green(1, 1, z);
  s.check("jacobi Green worked value G(1,1) = -w",
          std::abs(g11 + w) < 1e-13);

  // boundary value on (-2, 2): limit from above
  const double lam = 0.7;
  const Complex wb{lam / 2.0, -std::sqrt(4.0 - lam * lam) / 2.0};
  const Complex gb = jacobi_green(1, 1, Complex{lam, 0.0});
  s.check("jacobi boundary limit from above", std::abs(gb + wb) < 1e-13);

  CMatrix coupling(1, 1);
  coupling(0, 0) = 1.0;
  const RiggedModel model = make_half_line_jacobi({1}, coupling, 2000);
  const CMatrix closed = eval_T(model, z).matrix;
  const CMatrix truncated =
      sandwiched_resolvent_truncated(model, z, model.truncation_dim);
  s.check("truncation oracle agreement",
          (closed - truncated).norm() < 1e-8,
          "defect " + std::to_string((closed - truncated).norm()));
}

void pole_checks(Suite& s) {
  std::mt19937_64 rng(11);
  const RiggedModel model = random_finite_model(5, rng);
  const Complex z{0.25, 0.6};
  const CMatrix tj = sandwiched_tj(model, z);
  const SigmaMultiset spec = resonance_spectrum(model, z);
  double worst = 0.0;
  for (Complex r : spec.resonances())
    worst = std::max(worst, pole_residual(tj, r));
  s.check("pole characterization residual", worst < 1e-8,
          "max " + std::to_string(worst));

  bool off_pole_large = true;
  for (Complex sig : spec.sigmas) {
    const Complex s_probe = 1.1 * sig;
    bool clear = true;
    for (Complex other : spec.sigmas)
      if (other != sig &&
          std::abs(s_probe - other) < 0.1 * (std::abs(sig) + std::abs(other)))
        clear = false;
    if (clear && pole_residual(tj, -1.0 / s_probe) < 1e-6)
      off_pole_large = false;
  }
  s.check("determinant away from poles", off_pole_large);
}

void rank_one_checks(Suite& s) {
  const RiggedModel model =
      make_rank_one({-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2),
                    1.0);
  const Complex z{0.0, 1.0};
  const auto rs = resonance_spectrum(model, z).resonances();
  s.check("rank-one closed form r(i) = 2i",
          rs.size() == 1 && std::abs(rs[0] - Complex{0.0, 2.0}) < 1e-12);

  std::vector<Complex> grid;
  for (int i = 0; i < 8; ++i)
    for (int k = 1; k <= 4; ++k)
      grid.emplace_back(-1.5 + i * 0.4, 0.2 * k);
  s.check("rank-one Herglotz", herglotz_check(model, grid).pass);

  const RiggedModel block = make_embedded_block(0.0, 1.0, 600);
  const auto rb = resonance_spectrum(block, Complex{0.4, 0.3}).resonances();
  s.check("embedded block closed form r(z) = z",
          rb.size() == 1 && std::abs(rb[0] - Complex{0.4, 0.3}) < 1e-12);
}

void cone_checks(Suite& s) {
  bool rejects_lower = false;
  try {
    (void)in_cone(0.0, Complex{0.0, -0.1});
  } catch (const RejectedInput&) {
    rejects_lower = true;
  }
  s.check("cone membership",
          in_cone(0.0, Complex{0.0, 0.0}) && in_cone(0.0, Complex{0.5, 0.5}) &&
              in_cone(0.0, Complex{-0.3, 0.4}) &&
              !in_cone(0.0, Complex{1.0, 0.5}) && rejects_lower);

  bool ok = true;
  const double lam = 0.3;
  for (Complex z : {Complex{1.1, 0.2}, Complex{-0.8, 0.6}, Complex{0.35, 0.9},
                    Complex{2.0, 0.05}}) {
    const auto segs = segment_decompose(lam, z);
    if (segs.empty() || segs.size() > 3) ok = false;
    if (std::abs(segs.front().first - Complex{lam, 0.0}) > 1e-12) ok = false;
    if (std::abs(segs.back().second - z) > 1e-12) ok = false;
    const double budget = std::abs(z - Complex{lam, 0.0}) + 1e-12;
    for (std::size_t i = 0; i < segs.size(); ++i) {
      const auto& [a, b] = segs[i];
      if (i > 0 && std::abs(a - segs[i - 1].second) > 1e-12) ok = false;
      if (std::abs(b - a) > budget) ok = false;
      const double ang = std::arg(b - a);
      const double fold = ang < 0 ? ang + std::numbers::pi : ang;
      if (fold < std::numbers::pi / 4 - 1e-9 ||
          fold > 3 * std::numbers::pi / 4 + 1e-9)
        ok = false;
    }
  }
  s.check("segment decomposition", ok);
}

void flow_checks(Suite& s) {
  const RiggedModel model =
      make_rank_one({-1.0, 1.0}, CVector::Constant(2, 1.0 / std::numbers::sqrt2),
                    1.0);
  const double lam = 1.2;
  const auto recs = crossings(model, lam);
  const double expected = (lam * lam - 1.0) / lam;
  s.check("flow oracle worked value",
          recs.size() == 1 && std::abs(recs[0].s_star - expected) < 1e-8 &&
              recs[0].direction == 1,
          recs.empty() ? "no crossing found"
                       : "s* = " + std::to_string(recs[0].s_star));
}

void enumeration_checks(Suite& s) {
  // eigenvalues +-t, no collision on [0.1, 1]
  SpectralPath path;
  for (int i = 0; i <= 30; ++i) {
    const double t = 0.1 + 0.9 * i / 30.0;
    path.params.push_back(t);
    path.spectra.push_back(
        BasedMultiset({{Complex{t, 0.0}, 1}, {Complex{-t, 0.0}, 1}}));
  }
  const SelectedFunctions sel = enumerate_path(path);
  bool ok = sel.status == EnumStatus::Ok && sel.branches.size() == 2;
  if (ok)
    for (const auto& br : sel.branches)
      if (br.values.size() != path.params.size()) ok = false;
  s.check("continuous enumeration on a clean family", ok);

  // square-root collision at t = 1/2: both matchings across the collision
  // cost the same, so the step stays ambiguous at every depth
  auto family = [](double t) {
    const Complex root = std::sqrt(Complex{t - 0.5, 0.0});
    return BasedMultiset::from_values(
        std::vector<Complex>{1.0 + root, 1.0 - root});
  };
  const RefineResult refined =
      refine_until_resolved(family, {0.2, 0.81}, 0.05, 12);
  s.check("collision flagged for refinement",
          !refined.resolved && refined.failed_interval.first <= 0.5 &&
              refined.failed_interval.second >= 0.5);
}

void classify_checks(Suite& s) {
  const Complex z0{0.3, 0.4};
  const RiggedModel fam = make_sqrt_branch_family(z0);
  const SingularityReport rep = classify_singularity(fam, z0);
  s.check("sqrt family classified as branch point",
          rep.kind == SingularityKind::BranchPoint && rep.period == 2,
          rep.evidence);

  const RiggedModel ctrl = make_absorbing_control(Complex{0.1, 0.5});
  const SingularityReport rep2 = classify_singularity(ctrl, Complex{0.1, 0.5});
  s.check("absorbing control flagged",
          rep2.kind == SingularityKind::AbsorbingSuspect, rep2.evidence);
}

void scenario_checks(Suite& s) {
  const nlohmann::json good = {
      {"name", "demo"},
      {"model", {{"kind", "sqrt_branch"}, {"z0", {0.0, 0.5}}}},
      {"experiments",
       {{{"type", "classify"}, {"candidate", {0.0, 0.5}}}}}};
  bool parsed = false;
  try {
    (void)parse_scenario(good);
    parsed = true;
  } catch (const ScenarioError&) {
  }
  s.check("scenario parses", parsed);

  nlohmann::json bad = good;
  bad["model"]["extra"] = 1;
  std::string msg;
  try {
    (void)parse_scenario(bad);
  } catch (const ScenarioError& e) {
    msg = e.what();
  }
  s.check("unknown key rejected with its path",
          msg.find("$.model") != std::string::npos &&
              msg.find("extra") != std::string::npos,
          msg);
}

}  // namespace

int run_selftest(std::ostream& out) {
  Suite s{out};
  metric_checks(s);
  green_checks(s);
  pole_checks(s);
  rank_one_checks(s);
  cone_checks(s);
  flow_checks(s);
  enumeration_checks(s);
  classify_checks(s);
  scenario_checks(s);
  out << (s.failures == 0 ? "selftest: all checks passed\n"
                          : "selftest: FAILURES\n");
  return s.failures;
}

}  // namespace reslab
