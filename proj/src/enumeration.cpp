#include "reslab/enumeration.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>

#include "reslab/assignment.hpp"
#include "reslab/errors.hpp"

namespace reslab {

namespace {

constexpr double kBig = 1e50;

struct StepMatch {
  std::vector<int> match;  // row -> column in the padded square problem
  double phi = 0.0;        // step cost in Phi units
};

double matched_phi(const Eigen::MatrixXd& dist, const std::vector<int>& match,
                   PNorm p) {
  std::vector<double> d;
  d.reserve(match.size());
  for (std::size_t i = 0; i < match.size(); ++i)
    d.push_back(dist(i, match[i]));
  return phi_norm(d, p);
}

// Value pairs moved by a matching, base encoded as 0; sorted for
// comparison independent of row order.
std::vector<std::pair<Complex, Complex>> value_pairs(
    const std::vector<Complex>& a, const std::vector<Complex>& b,
    const std::vector<int>& match) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  std::vector<std::pair<Complex, Complex>> pairs;
  for (int i = 0; i < m + n; ++i) {
    const Complex from = i < m ? a[i] : Complex{0.0, 0.0};
    const int j = match[i];
    const Complex to = j < n ? b[j] : Complex{0.0, 0.0};
    if (i >= m && j >= n) continue;  // base to base carries nothing
    pairs.emplace_back(from, to);
  }
  auto key = [](const std::pair<Complex, Complex>& p) {
    return std::array<double, 4>{p.first.real(), p.first.imag(),
                                 p.second.real(), p.second.imag()};
  };
  std::sort(pairs.begin(), pairs.end(),
            [&](const auto& x, const auto& y) { return key(x) < key(y); });
  return pairs;
}

bool materially_different(const std::vector<Complex>& a,
                          const std::vector<Complex>& b,
                          const std::vector<int>& m1,
                          const std::vector<int>& m2, double tol) {
  const auto p1 = value_pairs(a, b, m1);
  const auto p2 = value_pairs(a, b, m2);
  if (p1.size() != p2.size()) return true;
  for (std::size_t k = 0; k < p1.size(); ++k) {
    if (std::abs(p1[k].first - p2[k].first) > tol) return true;
    if (std::abs(p1[k].second - p2[k].second) > tol) return true;
  }
  return false;
}

Eigen::MatrixXd distance_matrix(const std::vector<Complex>& a,
                                const std::vector<Complex>& b) {
  const int m = static_cast<int>(a.size());
  const int n = static_cast<int>(b.size());
  Eigen::MatrixXd dist(m + n, m + n);
  for (int i = 0; i < m + n; ++i) {
    for (int j = 0; j < m + n; ++j) {
      const Complex from = i < m ? a[i] : Complex{0.0, 0.0};
      const Complex to = j < n ? b[j] : Complex{0.0, 0.0};
      dist(i, j) = std::abs(from - to);
    }
  }
  return dist;
}

Eigen::MatrixXd step_cost(const Eigen::MatrixXd& dist, PNorm p) {
  switch (p) {
    case PNorm::One:
      return dist;
    case PNorm::Two:
      return dist.array().square();
    case PNorm::Inf: {
      // Restrict to edges below the bottleneck, then minimize additively
      // so ties between bottleneck matchings resolve deterministically.
      const double b = bottleneck_value(dist);
      Eigen::MatrixXd cost = dist;
      for (int i = 0; i < cost.rows(); ++i)
        for (int j = 0; j < cost.cols(); ++j)
          if (cost(i, j) > b) cost(i, j) = kBig;
      return cost;
    }
  }
  return dist;
}

}  // namespace

double EigenBranch::max_jump() const {
  double m = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    m = std::max(m, std::abs(values[k + 1] - values[k]));
  return m;
}

double EigenBranch::max_abs() const {
  double m = 0.0;
  for (Complex v : values) m = std::max(m, std::abs(v));
  return m;
}

double SelectedFunctions::max_jump() const {
  double m = 0.0;
  for (const auto& b : branches) m = std::max(m, b.max_jump());
  return m;
}

std::vector<int> SelectedFunctions::active_at_end(std::size_t n_params) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < branches.size(); ++i) {
    const auto& b = branches[i];
    if (b.absorbed) continue;
    if (b.start + b.values.size() == n_params) out.push_back(static_cast<int>(i));
  }
  return out;
}

SelectedFunctions enumerate_path(const SpectralPath& path,
                                 const EnumerationOptions& opts) {
  if (path.params.size() != path.spectra.size())
    throw RejectedInput("path: params and spectra must have equal length");
  if (path.params.empty()) throw RejectedInput("path must be nonempty");
  for (std::size_t i = 0; i + 1 < path.params.size(); ++i)
    if (!(path.params[i] < path.params[i + 1]))
      throw RejectedInput("path parameters must be strictly increasing");

  SelectedFunctions out;
  std::vector<int> active;  // indices into out.branches
  int next_id = 0;
  for (Complex v : path.spectra[0].expanded()) {
    EigenBranch b;
    b.id = next_id++;
    b.start = 0;
    b.values = {v};
    active.push_back(static_cast<int>(out.branches.size()));
    out.branches.push_back(std::move(b));
  }

  for (std::size_t m = 0; m + 1 < path.params.size(); ++m) {
    std::vector<Complex> a;
    a.reserve(active.size());
    for (int idx : active) a.push_back(out.branches[idx].values.back());
    const std::vector<Complex> b = path.spectra[m + 1].expanded();
    const int na = static_cast<int>(a.size());
    const int nb = static_cast<int>(b.size());
    if (na + nb == 0) continue;

    const Eigen::MatrixXd dist = distance_matrix(a, b);
    const Eigen::MatrixXd cost = step_cost(dist, opts.p);
    const Assignment opt = solve_assignment_lex(cost, 0.0);
    const double opt_phi = matched_phi(dist, opt.match, opts.p);

    // Probe for a rival matching: forbid one optimal edge at a time and
    // re-solve. A rival within collision_tol that moves values
    // differently makes the step ambiguous.
    bool ambiguous = false;
    for (int i = 0; i < na + nb && !ambiguous; ++i) {
      const int j = opt.match[i];
      if (i >= na && j >= nb) continue;
      Eigen::MatrixXd forbidden = cost;
      forbidden(i, j) = kBig;
      const Assignment alt = solve_assignment(forbidden);
      if (alt.cost >= kBig / 2) continue;
      const double alt_phi = matched_phi(dist, alt.match, opts.p);
      if (alt_phi <= opt_phi + opts.collision_tol &&
          materially_different(a, b, opt.match, alt.match,
                               opts.collision_tol))
        ambiguous = true;
    }
    if (ambiguous) {
      out.status = EnumStatus::NeedsRefinement;
      out.ambiguous_interval = {path.params[m], path.params[m + 1]};
      return out;
    }

    std::vector<int> next_active;
    for (int i = 0; i < na; ++i) {
      EigenBranch& branch = out.branches[active[i]];
      const int j = opt.match[i];
      if (j < nb) {
        branch.values.push_back(b[j]);
        next_active.push_back(active[i]);
      } else {
        branch.values.push_back({0.0, 0.0});
        branch.absorbed = true;
      }
    }
    for (int i = na; i < na + nb; ++i) {
      const int j = opt.match[i];
      if (j >= nb) continue;
      EigenBranch fresh;
      fresh.id = next_id++;
      fresh.start = static_cast<int>(m);
      fresh.values = {{0.0, 0.0}, b[j]};
      next_active.push_back(static_cast<int>(out.branches.size()));
      out.branches.push_back(std::move(fresh));
    }
    active = std::move(next_active);
  }
  return out;
}

RefineResult refine_until_resolved(
    const std::function<BasedMultiset(double)>& evaluator,
    std::pair<double, double> interval, double eta_step, int max_depth,
    const EnumerationOptions& opts) {
  const auto [lo, hi] = interval;
  if (!(lo < hi)) throw RejectedInput("interval must have positive length");
  if (!(eta_step > 0.0)) throw RejectedInput("eta_step must be positive");
  if (max_depth < 0) throw RejectedInput("max_depth must be >= 0");

  const double min_len = (hi - lo) / std::ldexp(1.0, max_depth);
  std::map<double, BasedMultiset> samples;
  samples.emplace(lo, evaluator(lo));
  samples.emplace(hi, evaluator(hi));

  RefineResult out;
  auto splittable = [&](double a, double b) {
    return (b - a) > min_len * (1.0 + 1e-9);
  };

  while (true) {
    // Distance pass: split every gap whose endpoints are still far apart.
    bool inserted = true;
    while (inserted) {
      inserted = false;
      for (auto it = samples.begin(); std::next(it) != samples.end(); ++it) {
        const auto nx = std::next(it);
        if (multiset_distance(it->second, nx->second, opts.p) < eta_step)
          continue;
        if (!splittable(it->first, nx->first)) continue;
        const double mid = 0.5 * (it->first + nx->first);
        samples.emplace(mid, evaluator(mid));
        inserted = true;
        break;
      }
    }

    SpectralPath path;
    for (const auto& [t, spec] : samples) {
      path.params.push_back(t);
      path.spectra.push_back(spec);
    }
    const SelectedFunctions sel = enumerate_path(path, opts);
    if (sel.status == EnumStatus::Ok) {
      for (auto it = samples.begin(); std::next(it) != samples.end(); ++it) {
        const auto nx = std::next(it);
        if (multiset_distance(it->second, nx->second, opts.p) >= eta_step) {
          out.resolved = false;
          out.failed_interval = {it->first, nx->first};
          break;
        }
      }
      out.path = std::move(path);
      return out;
    }
    const auto [a, b] = sel.ambiguous_interval;
    if (!splittable(a, b)) {
      out.resolved = false;
      out.failed_interval = sel.ambiguous_interval;
      out.path = std::move(path);
      return out;
    }
    samples.emplace(0.5 * (a + b), evaluator(0.5 * (a + b)));
  }
}

}  // namespace reslab
