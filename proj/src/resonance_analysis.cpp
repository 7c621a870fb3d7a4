#include "reslab/resonance_analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "reslab/assignment.hpp"
#include "reslab/enumeration.hpp"
#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool is_half_line(const RiggedModel& model) {
  return model.kind == ModelKind::HalfLineJacobi ||
         model.kind == ModelKind::EmbeddedBlock;
}

double effective_r_abs(const ContinuationOptions& opts, double j_norm,
                       double tau_abs) {
  const double cap = 0.1 / opts.resolvent.tau_sigma_rel;
  const double base =
      opts.r_abs > 0.0
          ? opts.r_abs
          : 1e8 * std::max(j_norm, 1e-8) / std::max(tau_abs, 1e-300);
  return std::min(base, cap);
}

bool strictly_growing(const std::vector<double>& recent, std::size_t run) {
  if (recent.size() < run) return false;
  for (std::size_t i = recent.size() - run; i + 1 < recent.size(); ++i)
    if (!(recent[i] < recent[i + 1])) return false;
  return true;
}

std::vector<Complex> full_sigma(const RiggedModel& model, Complex z) {
  const CMatrix tj = sandwiched_tj(model, z);
  Eigen::ComplexEigenSolver<CMatrix> solver(tj, false);
  if (solver.info() != Eigen::Success)
    throw Error("eigensolver failed on T_z J");
  std::vector<Complex> out(solver.eigenvalues().data(),
                           solver.eigenvalues().data() + tj.rows());
  return out;
}

double min_sigma_at(const RiggedModel& model, Complex z) {
  double m = kInf;
  for (Complex s : full_sigma(model, z)) m = std::min(m, std::abs(s));
  return m;
}

std::vector<int> cycle_type(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<char> seen(n, 0);
  std::vector<int> lengths;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (int j = i; !seen[j]; j = perm[j]) {
      seen[j] = 1;
      ++len;
    }
    lengths.push_back(len);
  }
  std::sort(lengths.begin(), lengths.end());
  return lengths;
}

int permutation_order(const std::vector<int>& perm) {
  const int n = static_cast<int>(perm.size());
  std::vector<char> seen(n, 0);
  long long order = 1;
  for (int i = 0; i < n; ++i) {
    if (seen[i]) continue;
    int len = 0;
    for (int j = i; !seen[j]; j = perm[j]) {
      seen[j] = 1;
      ++len;
    }
    order = std::lcm(order, static_cast<long long>(len));
  }
  return static_cast<int>(order);
}

// Shrinking 3x3 pattern search for a local minimum of |objective|.
// Halves the stencil only when the center wins, so a minimum drifting
// out of the stencil is followed rather than lost.
Complex pattern_search(const std::function<double(Complex)>& objective,
                       Complex start, double h_re, double h_im, int shrinks,
                       double* final_value) {
  Complex c = start;
  double fc = objective(c);
  int done = 0;
  for (int it = 0; it < shrinks * 8 && done < shrinks; ++it) {
    Complex best = c;
    double fb = fc;
    for (int di = -1; di <= 1; ++di) {
      for (int dj = -1; dj <= 1; ++dj) {
        if (di == 0 && dj == 0) continue;
        const Complex cand = c + Complex{di * h_re, dj * h_im};
        const double f = objective(cand);
        if (f < fb) {
          fb = f;
          best = cand;
        }
      }
    }
    if (best == c) {
      h_re *= 0.5;
      h_im *= 0.5;
      ++done;
    } else {
      c = best;
      fc = fb;
    }
  }
  if (final_value) *final_value = fc;
  return c;
}

struct GridMinimum {
  Complex z;
  double value = 0.0;
};

// Interior local minima of a sampled surface, one node per tied plateau,
// plus the median of the finite samples as a scale.
std::vector<GridMinimum> interior_minima(
    const std::function<double(Complex)>& objective, const Rect& region,
    int grid_re, int grid_im, int threads, double* median_scale,
    GridMinimum* global_min) {
  const double dre = region.width() / (grid_re - 1);
  const double dim = region.height() / (grid_im - 1);
  std::vector<double> surface(static_cast<std::size_t>(grid_re) * grid_im);
  parallel_for(grid_re * grid_im, threads, [&](int idx) {
    const int i = idx % grid_re;
    const int j = idx / grid_re;
    const Complex z{region.re_lo + i * dre, region.im_lo + j * dim};
    double v;
    try {
      v = objective(z);
    } catch (const Error&) {
      v = kInf;
    }
    surface[idx] = v;
  });

  std::vector<double> finite;
  for (double v : surface)
    if (std::isfinite(v)) finite.push_back(v);
  if (finite.empty()) {
    *median_scale = 1.0;
    return {};
  }
  std::nth_element(finite.begin(), finite.begin() + finite.size() / 2,
                   finite.end());
  *median_scale = std::max(finite[finite.size() / 2],
                           std::numeric_limits<double>::min());

  if (global_min) {
    global_min->value = kInf;
    for (int idx = 0; idx < grid_re * grid_im; ++idx) {
      if (surface[idx] < global_min->value) {
        global_min->value = surface[idx];
        global_min->z = Complex{region.re_lo + (idx % grid_re) * dre,
                                region.im_lo + (idx / grid_re) * dim};
      }
    }
  }

  std::vector<GridMinimum> minima;
  for (int j = 1; j + 1 < grid_im; ++j) {
    for (int i = 1; i + 1 < grid_re; ++i) {
      const int idx = j * grid_re + i;
      const double v = surface[idx];
      if (!std::isfinite(v)) continue;
      // A surface sampled symmetrically around its minimum can tie two
      // adjacent nodes to the same double, and a strictly-less test then
      // rejects both.  Ties lose against the earliest node in scan order,
      // so each tied plateau still promotes exactly one representative.
      bool lowest = true;
      for (int dj = -1; dj <= 1 && lowest; ++dj)
        for (int di = -1; di <= 1 && lowest; ++di) {
          if (di == 0 && dj == 0) continue;
          const int nidx = (j + dj) * grid_re + (i + di);
          if (surface[nidx] < v || (surface[nidx] == v && nidx < idx))
            lowest = false;
        }
      if (lowest)
        minima.push_back(
            {Complex{region.re_lo + i * dre, region.im_lo + j * dim}, v});
    }
  }
  return minima;
}

}  // namespace

BranchTrajectory continue_branch(const RiggedModel& model, Complex start_z,
                                 Complex start_r,
                                 std::span<const Complex> waypoints,
                                 const ContinuationOptions& opts) {
  BranchTrajectory traj;
  const SigmaMultiset s0 =
      resonance_spectrum(model, start_z, opts.resolvent);
  const std::vector<Complex> rs0 = s0.resonances();
  if (rs0.empty())
    throw RejectedInput("no resonance to continue at start_z");
  int best = 0;
  for (std::size_t i = 1; i < rs0.size(); ++i)
    if (std::abs(rs0[i] - start_r) < std::abs(rs0[best] - start_r))
      best = static_cast<int>(i);
  if (std::abs(rs0[best] - start_r) >
      opts.start_tol * (1.0 + std::abs(start_r)))
    throw RejectedInput("start_r does not match a resonance at start_z");

  Complex z_cur = start_z;
  Complex r_cur = rs0[best];
  traj.path = {z_cur};
  traj.values = {r_cur};
  const double r_abs_eff =
      effective_r_abs(opts, model.coupling.norm(), s0.tau);
  std::vector<double> recent = {std::abs(r_cur)};
  const std::size_t run = static_cast<std::size_t>(opts.diverge_run) + 1;

  for (Complex target : waypoints) {
    std::vector<std::pair<Complex, int>> stack = {{target, 0}};
    while (!stack.empty()) {
      const auto [zt, depth] = stack.back();
      if (is_half_line(model) && zt.imag() < 0.0) {
        traj.status = TrajectoryStatus::LeftDomain;
        traj.failure_interval = {z_cur, zt};
        return traj;
      }
      bool accepted = false;
      bool culled = false;
      Complex r_next;
      try {
        const SigmaMultiset st =
            resonance_spectrum(model, zt, opts.resolvent);
        const std::vector<Complex> rs = st.resonances();
        if (rs.empty()) {
          culled = true;
        } else {
          double d1 = kInf, d2 = kInf;
          int pick = -1;
          for (std::size_t i = 0; i < rs.size(); ++i) {
            const double d = std::abs(rs[i] - r_cur);
            if (d < d1) {
              d2 = d1;
              d1 = d;
              pick = static_cast<int>(i);
            } else if (d < d2) {
              d2 = d;
            }
          }
          if (d2 >= opts.margin_ratio * d1) {
            accepted = true;
            r_next = rs[pick];
          }
        }
      } catch (const SingularPoint&) {
        // a resolvent pole sits on or near this step; bisect around it
      }
      if (accepted) {
        stack.pop_back();
        z_cur = zt;
        r_cur = r_next;
        traj.path.push_back(z_cur);
        traj.values.push_back(r_cur);
        recent.push_back(std::abs(r_cur));
        if (recent.size() > run) recent.erase(recent.begin());
        if (recent.size() == run && strictly_growing(recent, run) &&
            recent.back() > r_abs_eff) {
          traj.status = TrajectoryStatus::Diverged;
          return traj;
        }
        continue;
      }
      if (culled && recent.size() >= 2 && strictly_growing(recent, 2)) {
        // the branch outran the cull radius while growing
        traj.status = TrajectoryStatus::Diverged;
        traj.failure_interval = {z_cur, zt};
        return traj;
      }
      if (depth >= opts.max_bisect) {
        traj.status = TrajectoryStatus::HitBranchPoint;
        traj.failure_interval = {z_cur, zt};
        return traj;
      }
      stack.push_back({0.5 * (z_cur + zt), depth + 1});
    }
  }
  if (!waypoints.empty() && waypoints.back().imag() == 0.0)
    traj.boundary_limit = r_cur;
  return traj;
}

Complex discriminant_at(const RiggedModel& model, Complex z) {
  if (model.nf < 2) return 1.0;
  const std::vector<Complex> sigma = full_sigma(model, z);
  Complex d = 1.0;
  for (std::size_t i = 0; i < sigma.size(); ++i)
    for (std::size_t j = i + 1; j < sigma.size(); ++j) {
      const Complex diff = sigma[i] - sigma[j];
      d *= diff * diff;
    }
  return d;
}

MonodromyResult monodromy_loop(const RiggedModel& model, Complex center,
                               double radius,
                               [[maybe_unused]] const ContinuationOptions& opts) {
  if (!(radius > 0.0)) throw RejectedInput("loop radius must be positive");
  MonodromyResult result;

  auto point = [&](double t) {
    const double a = 2.0 * std::numbers::pi * t;
    return center + radius * Complex{std::cos(a), std::sin(a)};
  };
  auto eval = [&](double t) {
    return BasedMultiset::from_values(full_sigma(model, point(t)), 0.0);
  };

  // Scale the refinement threshold by the smallest eigenvalue gap seen
  // on a coarse pass around the circle.
  double gap = kInf;
  double scale = 0.0;
  for (int k = 0; k < 8; ++k) {
    const std::vector<Complex> s = full_sigma(model, point(k / 8.0));
    for (std::size_t i = 0; i < s.size(); ++i) {
      scale = std::max(scale, std::abs(s[i]));
      for (std::size_t j = i + 1; j < s.size(); ++j)
        gap = std::min(gap, std::abs(s[i] - s[j]));
    }
  }
  const double eta = std::isfinite(gap) && gap > 0.0
                         ? 0.3 * gap
                         : 0.1 * (1.0 + scale);

  // A closed loop aliases under purely distance-driven refinement: the
  // endpoint multisets coincide, so [0,1] in one piece looks like a
  // no-op.  Refine over a mandatory subdivision of the circle and stitch.
  EnumerationOptions eopts;
  const int arcs = 16;
  SpectralPath stitched;
  for (int a = 0; a < arcs; ++a) {
    const RefineResult ref = refine_until_resolved(
        eval, {a / static_cast<double>(arcs), (a + 1) / static_cast<double>(arcs)},
        eta, 10, eopts);
    result.samples += static_cast<int>(ref.path.params.size());
    if (!ref.resolved) return result;
    const std::size_t skip = a == 0 ? 0 : 1;
    for (std::size_t i = skip; i < ref.path.params.size(); ++i) {
      stitched.params.push_back(ref.path.params[i]);
      stitched.spectra.push_back(ref.path.spectra[i]);
    }
  }
  const SelectedFunctions sel = enumerate_path(stitched, eopts);
  if (sel.status != EnumStatus::Ok) return result;

  const std::size_t n_params = stitched.params.size();
  std::vector<Complex> first, last;
  for (const auto& b : sel.branches) {
    if (b.absorbed || b.start != 0 || b.values.size() != n_params)
      return result;  // a branch died or was born along the loop
    first.push_back(b.values.front());
    last.push_back(b.values.back());
  }
  const int n = static_cast<int>(first.size());
  if (n == 0) return result;

  std::vector<int> perm(n, -1);
  std::vector<char> taken(n, 0);
  const double match_tol =
      std::isfinite(gap) && gap > 0.0 ? 0.45 * gap : 0.1 * (1.0 + scale);
  for (int i = 0; i < n; ++i) {
    int pick = -1;
    double dist = kInf;
    for (int j = 0; j < n; ++j) {
      const double d = std::abs(last[i] - first[j]);
      if (d < dist) {
        dist = d;
        pick = j;
      }
    }
    if (pick < 0 || taken[pick] || dist > match_tol) return result;
    taken[pick] = 1;
    perm[i] = pick;
  }
  result.permutation = perm;
  result.period = permutation_order(perm);
  result.resolved = true;
  return result;
}

SingularityReport classify_singularity(const RiggedModel& model,
                                       Complex candidate,
                                       const ClassifyOptions& opts) {
  SingularityReport report;
  report.location = candidate;
  try {
    report.residual_discriminant = std::abs(discriminant_at(model, candidate));
    report.min_sigma = min_sigma_at(model, candidate);
  } catch (const Error&) {
    report.residual_discriminant = kInf;
    report.min_sigma = 0.0;
  }

  // Two loops per attempt: the inner radius must reproduce the cycle
  // structure of the outer one, otherwise the probe is inconsistent and
  // we shrink.
  double radius = opts.probe_radius;
  MonodromyResult mono;
  bool consistent = false;
  for (int attempt = 0; attempt <= opts.retries && !consistent; ++attempt) {
    const MonodromyResult outer =
        monodromy_loop(model, candidate, radius, opts.cont);
    const MonodromyResult inner =
        monodromy_loop(model, candidate, 0.5 * radius, opts.cont);
    if (outer.resolved && inner.resolved && outer.period == inner.period &&
        cycle_type(outer.permutation) == cycle_type(inner.permutation)) {
      mono = outer;
      consistent = true;
      break;
    }
    radius *= 0.5;
  }
  if (!consistent) {
    report.kind = SingularityKind::Unresolved;
    report.evidence =
        "monodromy loops stayed ambiguous or inconsistent after retries";
    return report;
  }
  report.monodromy = mono.permutation;
  report.period = mono.period;
  if (mono.period > 1) {
    report.kind = SingularityKind::BranchPoint;
    std::ostringstream ev;
    ev << "nontrivial monodromy of period " << mono.period << " at radius "
       << radius;
    report.evidence = ev.str();
    return report;
  }

  // Trivial monodromy: walk every inbound ray at half-decade steps and
  // watch 1/min|sigma|.  A ray counts as divergent when that quantity
  // blows past the escape radius after escalating strictly through the
  // five samples leading into the crossing.
  const double tau_abs =
      resonance_spectrum(model, candidate + radius, opts.cont.resolvent).tau;
  const double r_bar =
      effective_r_abs(opts.cont, model.coupling.norm(), tau_abs);
  const int steps = 2 * static_cast<int>(opts.ray_decades) + 1;
  int positive = 0;
  for (int k = 0; k < opts.rays; ++k) {
    const double a = 2.0 * std::numbers::pi * k / opts.rays;
    const Complex dir{std::cos(a), std::sin(a)};
    std::vector<double> inv;
    inv.reserve(steps);
    bool valid = true;
    for (int t = 0; t < steps; ++t) {
      const double s =
          radius * std::pow(10.0, -opts.ray_decades * t / (steps - 1));
      double m;
      try {
        m = min_sigma_at(model, candidate + s * dir);
      } catch (const Error&) {
        valid = false;
        break;
      }
      inv.push_back(m > 0.0 ? 1.0 / m : kInf);
    }
    if (!valid) continue;
    int cross = -1;
    for (int t = 0; t < static_cast<int>(inv.size()); ++t) {
      if (inv[t] > r_bar) {
        cross = t;
        break;
      }
    }
    // A crossing at the widest radius says nothing about the candidate
    // itself; demand a full escalation window.
    if (cross < 4) continue;
    bool escalates = true;
    for (int t = cross - 4; t < cross; ++t)
      if (!(inv[t] < inv[t + 1])) escalates = false;
    if (escalates) ++positive;
  }
  if (positive == opts.rays) {
    report.kind = SingularityKind::AbsorbingSuspect;
    std::ostringstream ev;
    ev << "1/min |sigma| escalated past " << r_bar << " on all " << opts.rays
       << " rays";
    report.evidence = ev.str();
  } else if (positive > 0) {
    report.kind = SingularityKind::Unresolved;
    std::ostringstream ev;
    ev << positive << " of " << opts.rays << " rays escalated past "
       << r_bar;
    report.evidence = ev.str();
  } else {
    report.kind = SingularityKind::Regular;
    report.evidence = "trivial monodromy and no radial blow-up";
  }
  return report;
}

std::vector<SingularityReport> detect_branch_points(
    const RiggedModel& model, const Rect& region, const DetectOptions& opts) {
  if (model.nf < 2) return {};
  if (!(region.width() > 0.0) || !(region.height() > 0.0))
    throw RejectedInput("detection region must have positive area");
  if (opts.grid_re < 4 || opts.grid_im < 4)
    throw RejectedInput("detection grid too coarse");

  auto objective = [&](Complex z) {
    return std::abs(discriminant_at(model, z));
  };
  double scale = 1.0;
  const std::vector<GridMinimum> minima =
      interior_minima(objective, region, opts.grid_re, opts.grid_im,
                      opts.threads, &scale, nullptr);

  const double dre = region.width() / (opts.grid_re - 1);
  const double dim = region.height() / (opts.grid_im - 1);
  std::vector<Complex> located;
  for (const GridMinimum& gm : minima) {
    double residual = 0.0;
    const Complex z_hat = pattern_search(objective, gm.z, dre, dim,
                                         opts.refine_iters, &residual);
    if (!(residual < opts.accept_drop * scale)) continue;
    if (!region.contains(z_hat)) continue;
    bool dup = false;
    for (Complex seen : located)
      if (std::abs(seen - z_hat) < opts.merge_tol) dup = true;
    if (dup) continue;
    located.push_back(z_hat);
  }

  std::vector<SingularityReport> reports;
  for (Complex z_hat : located)
    reports.push_back(classify_singularity(model, z_hat, opts.classify));
  return reports;
}

AbsorbingSweepReport absorbing_sweep(const RiggedModel& model,
                                     const Rect& region,
                                     const AbsorbingSweepOptions& opts) {
  if (!(region.width() > 0.0) || !(region.height() > 0.0))
    throw RejectedInput("sweep region must have positive area");
  AbsorbingSweepReport report;

  auto objective = [&](Complex z) { return min_sigma_at(model, z); };
  double scale = 1.0;
  GridMinimum global;
  const std::vector<GridMinimum> minima =
      interior_minima(objective, region, opts.grid_re, opts.grid_im,
                      opts.threads, &scale, &global);
  report.min_sigma_seen = global.value;
  report.argmin_z = global.z;

  const double dre = region.width() / (opts.grid_re - 1);
  const double dim = region.height() / (opts.grid_im - 1);
  std::vector<Complex> located;
  for (const GridMinimum& gm : minima) {
    double refined = 0.0;
    const Complex z_hat = pattern_search(objective, gm.z, dre, dim,
                                         opts.refine_iters, &refined);
    if (refined < report.min_sigma_seen) {
      report.min_sigma_seen = refined;
      report.argmin_z = z_hat;
    }
    if (!(refined < opts.suspect_drop * scale)) continue;
    if (!region.contains(z_hat)) continue;
    bool dup = false;
    for (Complex seen : located)
      if (std::abs(seen - z_hat) < 1e-6) dup = true;
    if (dup) continue;
    located.push_back(z_hat);
  }
  report.candidates_examined = static_cast<int>(located.size());

  for (Complex z_hat : located) {
    SingularityReport sr = classify_singularity(model, z_hat, opts.classify);
    if (sr.kind == SingularityKind::AbsorbingSuspect)
      report.suspects.push_back(std::move(sr));
    else
      report.other_events.push_back(std::move(sr));
  }
  return report;
}

int ImpactingSet::impacting_count() const {
  int n = 0;
  for (const auto& b : branches)
    if (b.impacting) ++n;
  return n;
}

namespace {

std::optional<ImpactingSet> impacting_attempt(const RiggedModel& model,
                                              double lambda,
                                              const ImpactingOptions& opts) {
  ImpactingSet set;
  set.lambda = lambda;
  const Complex z_top{lambda, opts.y_top};
  SigmaMultiset top;
  try {
    top = resonance_spectrum(model, z_top, opts.cont.resolvent);
  } catch (const Error&) {
    return std::nullopt;
  }
  const std::vector<Complex> rs = top.resonances();

  std::vector<Complex> waypoints;
  for (int k = 1; k < opts.ladder_size; ++k) {
    const double f = static_cast<double>(k) / (opts.ladder_size - 1);
    waypoints.push_back(
        {lambda, opts.y_top * std::pow(opts.y_bottom / opts.y_top, f)});
  }
  waypoints.push_back({lambda, 0.0});

  for (std::size_t i = 0; i < rs.size(); ++i) {
    BranchTrajectory traj;
    try {
      traj = continue_branch(model, z_top, rs[i], waypoints, opts.cont);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (traj.status != TrajectoryStatus::Ok || !traj.boundary_limit)
      return std::nullopt;
    ImpactingBranch branch;
    branch.branch_id = static_cast<int>(i);
    branch.top_value = rs[i];
    branch.boundary_value = *traj.boundary_limit;
    branch.impacting =
        std::abs(branch.boundary_value.imag()) <= opts.tau_real &&
        branch.boundary_value.real() >= -opts.margin &&
        branch.boundary_value.real() <= 1.0 + opts.margin;
    set.branches.push_back(branch);
  }
  return set;
}

}  // namespace

ImpactingSet find_impacting(const RiggedModel& model, double lambda,
                            const ImpactingOptions& opts) {
  if (!(opts.y_top > opts.y_bottom && opts.y_bottom > 0.0))
    throw RejectedInput("impacting ladder heights out of order");
  if (opts.ladder_size < 2) throw RejectedInput("ladder needs >= 2 levels");

  if (auto set = impacting_attempt(model, lambda, opts)) return *set;
  for (double sign : {1.0, -1.0}) {
    const double shifted = lambda + sign * opts.h_perturb;
    if (auto set = impacting_attempt(model, shifted, opts)) {
      std::ostringstream note;
      note << "vertical at " << lambda << " failed; used perturbed vertical "
           << shifted;
      set->note = note.str();
      set->lambda = lambda;
      return *set;
    }
  }
  ImpactingSet failed;
  failed.lambda = lambda;
  failed.note = "continuation failed on the vertical and both perturbations";
  return failed;
}

SingleValuednessReport verify_single_valuedness(
    const RiggedModel& model, const ConeRegion& region,
    std::span<const ImpactingSet> impacting, const VerifyOptions& opts) {
  SingleValuednessReport report;
  std::vector<const ImpactingSet*> sets;
  for (const auto& s : impacting)
    if (region.contains(s.lambda) && !s.branches.empty())
      sets.push_back(&s);
  std::sort(sets.begin(), sets.end(),
            [](const ImpactingSet* a, const ImpactingSet* b) {
              return a->lambda < b->lambda;
            });
  if (sets.empty()) {
    report.pass = true;  // nothing to verify
    return report;
  }

  // Chain branches across neighboring lambdas by nearest top values.
  struct Chain {
    std::vector<std::pair<int, int>> members;  // (set index, branch index)
    bool impacting = false;
  };
  std::vector<Chain> chains;
  std::vector<int> open;  // chain index per branch of the previous set
  for (std::size_t b = 0; b < sets[0]->branches.size(); ++b) {
    Chain c;
    c.members = {{0, static_cast<int>(b)}};
    open.push_back(static_cast<int>(chains.size()));
    chains.push_back(c);
  }
  for (std::size_t k = 1; k < sets.size(); ++k) {
    const auto& prev = sets[k - 1]->branches;
    const auto& cur = sets[k]->branches;
    std::vector<int> next_open(cur.size(), -1);
    if (prev.size() == cur.size() && !cur.empty()) {
      Eigen::MatrixXd cost(prev.size(), cur.size());
      for (std::size_t i = 0; i < prev.size(); ++i)
        for (std::size_t j = 0; j < cur.size(); ++j)
          cost(i, j) = std::abs(prev[i].top_value - cur[j].top_value);
      const Assignment match = solve_assignment(cost);
      for (std::size_t i = 0; i < prev.size(); ++i) {
        const int j = match.match[static_cast<int>(i)];
        next_open[j] = open[i];
        chains[open[i]].members.push_back(
            {static_cast<int>(k), j});
      }
    } else {
      for (std::size_t j = 0; j < cur.size(); ++j) {
        Chain c;
        c.members = {{static_cast<int>(k), static_cast<int>(j)}};
        next_open[j] = static_cast<int>(chains.size());
        chains.push_back(c);
      }
    }
    open = std::move(next_open);
  }
  for (auto& chain : chains)
    for (const auto& [si, bi] : chain.members)
      if (sets[si]->branches[bi].impacting) chain.impacting = true;

  report.global_branches = static_cast<int>(chains.size());
  for (const auto& chain : chains)
    if (chain.impacting) ++report.impacting_chains;

  report.min_verified_height = kInf;
  bool all_pass = true;
  int chain_id = 0;
  for (const auto& chain : chains) {
    ++chain_id;
    if (!chain.impacting) continue;
    // Evenly sampled member lambdas of this chain.
    const int take = std::min<int>(opts.lambda_samples,
                                   static_cast<int>(chain.members.size()));
    for (int t = 0; t < take; ++t) {
      const auto& [si, bi] =
          chain.members[static_cast<std::size_t>(t) *
                        (chain.members.size() - 1) /
                        std::max(1, take - 1)];
      const double lambda = sets[si]->lambda;
      const Complex r_top = sets[si]->branches[bi].top_value;
      for (int level = 0; level < opts.height_levels; ++level) {
        const double y =
            opts.impacting.y_top / std::pow(4.0, level + 1);
        BranchLoopCheck check;
        check.chain_id = chain_id - 1;
        check.lambda = lambda;
        check.height = y;

        const Complex center{lambda, y};
        const double rho = 0.5 * y;
        // walk down from the top to the loop start, then around
        const Complex loop_start = center + rho;
        std::vector<Complex> down = {loop_start};
        BranchTrajectory to_start;
        try {
          to_start = continue_branch(model, Complex{lambda, opts.impacting.y_top},
                                     r_top, down, opts.impacting.cont);
        } catch (const Error&) {
          check.pass = false;
          all_pass = false;
          report.checks.push_back(check);
          continue;
        }
        if (to_start.status != TrajectoryStatus::Ok) {
          check.pass = false;
          all_pass = false;
          report.checks.push_back(check);
          continue;
        }
        std::vector<Complex> loop;
        for (int p = 1; p <= opts.loop_points; ++p) {
          const double a = 2.0 * std::numbers::pi * p / opts.loop_points;
          loop.push_back(center + rho * Complex{std::cos(a), std::sin(a)});
        }
        BranchTrajectory around;
        try {
          around = continue_branch(model, loop_start, to_start.values.back(),
                                   loop, opts.impacting.cont);
        } catch (const Error&) {
          check.pass = false;
          all_pass = false;
          report.checks.push_back(check);
          continue;
        }
        if (around.status != TrajectoryStatus::Ok) {
          check.pass = false;
          all_pass = false;
          report.checks.push_back(check);
          continue;
        }
        check.defect =
            std::abs(around.values.back() - around.values.front());
        check.pass = check.defect <=
                     opts.defect_tol * (1.0 + std::abs(around.values.front()));
        if (check.pass)
          report.min_verified_height = std::min(report.min_verified_height, y);
        else
          all_pass = false;
        report.checks.push_back(check);
      }
    }
  }
  if (!std::isfinite(report.min_verified_height))
    report.min_verified_height = 0.0;
  report.pass = all_pass;
  return report;
}

RayStats ray_survival_stats(const RiggedModel& model, Complex z0,
                            Complex start_r, const Rect& region, int n_rays,
                            const ContinuationOptions& opts) {
  if (n_rays < 1) throw RejectedInput("need at least one ray");
  if (!region.contains(z0))
    throw RejectedInput("ray origin must lie inside the region");
  RayStats stats;
  stats.n_rays = n_rays;
  for (int k = 0; k < n_rays; ++k) {
    const double a = 2.0 * std::numbers::pi * k / n_rays;
    const Complex dir{std::cos(a), std::sin(a)};
    // distance to the rectangle boundary along this direction
    double t_max = kInf;
    if (dir.real() > 0) t_max = std::min(t_max, (region.re_hi - z0.real()) / dir.real());
    if (dir.real() < 0) t_max = std::min(t_max, (region.re_lo - z0.real()) / dir.real());
    if (dir.imag() > 0) t_max = std::min(t_max, (region.im_hi - z0.imag()) / dir.imag());
    if (dir.imag() < 0) t_max = std::min(t_max, (region.im_lo - z0.imag()) / dir.imag());
    const std::vector<Complex> waypoint = {z0 + 0.999 * t_max * dir};
    bool survived = false;
    try {
      const BranchTrajectory traj =
          continue_branch(model, z0, start_r, waypoint, opts);
      survived = traj.status == TrajectoryStatus::Ok;
    } catch (const Error&) {
      survived = false;
    }
    if (survived)
      ++stats.survived;
    else
      stats.failed_rays.push_back(k);
  }
  stats.survival_fraction =
      static_cast<double>(stats.survived) / stats.n_rays;
  return stats;
}

}  // namespace reslab
