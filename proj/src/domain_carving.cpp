#include "reslab/domain_carving.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "reslab/errors.hpp"
#include "reslab/parallel.hpp"

namespace reslab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

bool in_cone(double lambda, Complex z) {
  if (z.imag() < 0.0)
    throw RejectedInput("cone membership is defined for Im z >= 0");
  if (z.imag() == 0.0) return z.real() == lambda;
  return std::abs(z.real() - lambda) <= z.imag();
}

bool in_cone_eps(double lambda, Complex z, double eps) {
  if (!(eps > 0.0)) throw RejectedInput("cone height must be positive");
  return in_cone(lambda, z) && std::abs(z - Complex{lambda, 0.0}) <= eps;
}

ConeRegion::ConeRegion(std::vector<std::pair<double, double>> intervals,
                       double epsilon)
    : epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw RejectedInput("cone height must be positive");
  for (const auto& [lo, hi] : intervals)
    if (!(lo <= hi)) throw RejectedInput("interval endpoints out of order");
  std::sort(intervals.begin(), intervals.end());
  for (const auto& iv : intervals) {
    if (!intervals_.empty() && iv.first <= intervals_.back().second)
      intervals_.back().second = std::max(intervals_.back().second, iv.second);
    else
      intervals_.push_back(iv);
  }
}

double ConeRegion::measure() const {
  double total = 0.0;
  for (const auto& [lo, hi] : intervals_) total += hi - lo;
  return total;
}

double ConeRegion::min() const {
  if (intervals_.empty()) throw RejectedInput("empty region has no minimum");
  return intervals_.front().first;
}

double ConeRegion::max() const {
  if (intervals_.empty()) throw RejectedInput("empty region has no maximum");
  return intervals_.back().second;
}

bool ConeRegion::contains(double lambda) const {
  auto it = std::lower_bound(
      intervals_.begin(), intervals_.end(), lambda,
      [](const std::pair<double, double>& iv, double x) {
        return iv.second < x;
      });
  return it != intervals_.end() && it->first <= lambda;
}

bool ConeRegion::cone_contains(Complex z) const {
  if (z.imag() < 0.0)
    throw RejectedInput("cone membership is defined for Im z >= 0");
  if (z.imag() == 0.0) return contains(z.real());
  const double lo = z.real() - z.imag();
  const double hi = z.real() + z.imag();
  auto it = std::lower_bound(
      intervals_.begin(), intervals_.end(), lo,
      [](const std::pair<double, double>& iv, double x) {
        return iv.second < x;
      });
  return it != intervals_.end() && it->first <= hi;
}

bool ConeRegion::cone_eps_contains(Complex z) const {
  if (z.imag() < 0.0)
    throw RejectedInput("cone membership is defined for Im z >= 0");
  if (z.imag() > epsilon_) return false;
  if (z.imag() == 0.0) return contains(z.real());
  const double reach = std::sqrt(epsilon_ * epsilon_ - z.imag() * z.imag());
  const double d = std::min(z.imag(), reach);
  const double lo = z.real() - d;
  const double hi = z.real() + d;
  auto it = std::lower_bound(
      intervals_.begin(), intervals_.end(), lo,
      [](const std::pair<double, double>& iv, double x) {
        return iv.second < x;
      });
  return it != intervals_.end() && it->first <= hi;
}

std::vector<std::pair<Complex, Complex>> segment_decompose(double lambda,
                                                           Complex z) {
  if (z.imag() < 0.0)
    throw RejectedInput("decomposition target must have Im z >= 0");
  const Complex base{lambda, 0.0};
  if (z == base) return {};
  if (z.imag() == 0.0)
    throw RejectedInput("cannot reach a different real point inside cones");
  const double x = z.real() - lambda;
  const double y = z.imag();
  if (std::abs(x) <= y) return {{base, z}};
  // z sits outside the cone over lambda; route through the real point
  // lambda1 whose boundary ray passes through z.
  if (x > y) {
    const double l1 = z.real() - y;
    const Complex z1{0.5 * (lambda + l1), 0.5 * (l1 - lambda)};
    return {{base, z1}, {z1, Complex{l1, 0.0}}, {Complex{l1, 0.0}, z}};
  }
  const double l1 = z.real() + y;
  const Complex z1{0.5 * (lambda + l1), 0.5 * (lambda - l1)};
  return {{base, z1}, {z1, Complex{l1, 0.0}}, {Complex{l1, 0.0}, z}};
}

EgorovCertificate egorov_compact(
    const std::function<CMatrix(Complex)>& evaluator,
    std::pair<double, double> interval, double delta,
    const EgorovOptions& opts) {
  const auto [lo, hi] = interval;
  if (!(lo < hi)) throw RejectedInput("interval must have positive length");
  if (!(delta > 0.0)) throw RejectedInput("delta must be positive");
  if (opts.m_max < 1 || opts.n_max < 1 || opts.radii_per_ray < 1)
    throw RejectedInput("bad discretization options");

  EgorovCertificate cert;
  cert.interval = interval;
  cert.delta = delta;

  const int cells =
      std::max(8, static_cast<int>(std::lround(1.0 / opts.lambda_step_rel)));
  const double step = (hi - lo) / cells;
  cert.grid_step = step;
  std::vector<double> lambdas(cells);
  for (int k = 0; k < cells; ++k) lambdas[k] = lo + (k + 0.5) * step;

  std::vector<int> ladder;
  for (int n = 1; n <= opts.n_max; n *= 2) ladder.push_back(n);
  const int levels = static_cast<int>(ladder.size());

  std::vector<CMatrix> f_at(cells);
  std::vector<char> valid(cells, 1);
  parallel_for(cells, opts.threads, [&](int k) {
    try {
      f_at[k] = evaluator(Complex{lambdas[k], 0.0});
    } catch (const Error&) {
      valid[k] = 0;
    }
  });

  double norm_scale = 0.0;
  for (int k = 0; k < cells; ++k)
    if (valid[k]) norm_scale = std::max(norm_scale, f_at[k].norm());
  if (norm_scale <= 0.0) norm_scale = 1.0;
  cert.norm_scale = norm_scale;

  // raw deviation per scale from three rays and dyadic radii, then a
  // suffix max over scales: every sample inside the smaller cone is also
  // inside the bigger one, so the bigger cone may use it too.
  std::vector<std::vector<double>> dev(levels,
                                       std::vector<double>(cells, kInf));
  std::vector<std::vector<Complex>> at(levels, std::vector<Complex>(cells));
  // Boundary-ray offsets: the real component is shrunk by one part in 1e9
  // so that |Re z - lambda| <= Im z survives the rounding of lambda + dx
  // at every radius.  A rounded-to-nearest 1/sqrt(2) pair can land a hair
  // outside the inclusive cone test.
  const double diag = 0.70710678118654746;
  const double diag_in = diag * (1.0 - 1e-9);
  const Complex dirs[3] = {{-diag_in, diag}, {0.0, 1.0}, {diag_in, diag}};
  parallel_for(cells, opts.threads, [&](int k) {
    if (!valid[k]) return;
    for (int l = 0; l < levels; ++l) {
      const double eps = 1.0 / ladder[l];
      double worst = -1.0;
      Complex worst_z{lambdas[k], eps};
      for (Complex dir : dirs) {
        double rad = eps;
        for (int j = 0; j < opts.radii_per_ray; ++j) {
          const Complex z = Complex{lambdas[k], 0.0} + rad * dir;
          double d;
          try {
            d = (evaluator(z) - f_at[k]).norm() / norm_scale;
          } catch (const Error&) {
            d = kInf;
          }
          if (d > worst) {
            worst = d;
            worst_z = z;
          }
          rad *= 0.5;
        }
      }
      dev[l][k] = std::max(worst, 0.0);
      at[l][k] = worst_z;
    }
  });
  for (int l = levels - 2; l >= 0; --l) {
    for (int k = 0; k < cells; ++k) {
      if (dev[l + 1][k] > dev[l][k]) {
        dev[l][k] = dev[l + 1][k];
        at[l][k] = at[l + 1][k];
      }
    }
  }

  std::vector<char> mask(cells, 1);
  for (int k = 0; k < cells; ++k) mask[k] = valid[k];
  std::vector<int> level_of_m(opts.m_max + 1, levels - 1);
  for (int m = 1; m <= opts.m_max; ++m) {
    const double budget = std::ldexp(delta, -(m + 1));
    const double bar = 1.0 / m;
    int chosen = levels - 1;
    double chosen_defect = 0.0;
    for (int l = 0; l < levels; ++l) {
      int missing = 0;
      for (int k = 0; k < cells; ++k)
        if (dev[levels - 1][k] < bar && !(dev[l][k] < bar)) ++missing;
      const double defect = step * missing;
      if (defect < budget) {
        chosen = l;
        chosen_defect = defect;
        break;
      }
    }
    level_of_m[m] = chosen;
    cert.moduli.push_back({m, ladder[chosen], chosen_defect});
    for (int k = 0; k < cells; ++k)
      if (!(dev[chosen][k] < bar)) mask[k] = 0;
  }

  std::vector<std::pair<double, double>> pieces;
  for (int k = 0; k < cells; ++k) {
    if (!mask[k]) continue;
    const double a = lo + k * step;
    const double b = lo + (k + 1) * step;
    if (!pieces.empty() && pieces.back().second >= a - 0.25 * step)
      pieces.back().second = b;
    else
      pieces.emplace_back(a, b);
  }
  int finest_used = 1;
  for (int m = 1; m <= opts.m_max; ++m)
    finest_used = std::max(finest_used, ladder[level_of_m[m]]);
  cert.region = ConeRegion(std::move(pieces), 1.0 / finest_used);

  int uncovered = 0;
  for (int k = 0; k < cells; ++k)
    if (!mask[k]) ++uncovered;
  cert.uncovered_measure = step * uncovered;
  cert.ok = cert.uncovered_measure < delta;

  for (int m = 1; m <= opts.m_max; ++m) {
    const int l = level_of_m[m];
    std::vector<int> member;
    for (int k = 0; k < cells; ++k)
      if (mask[k]) member.push_back(k);
    if (member.empty()) continue;
    const int take =
        std::min<int>(opts.witnesses_per_level, static_cast<int>(member.size()));
    for (int t = 0; t < take; ++t) {
      const int k = member[static_cast<std::size_t>(t) * (member.size() - 1) /
                           std::max(1, take - 1)];
      EgorovWitness w;
      w.lambda = lambdas[k];
      w.z = at[l][k];
      w.deviation = dev[l][k];
      w.m = m;
      w.n0 = ladder[l];
      cert.witnesses.push_back(w);
    }
  }

  if (!cert.ok) {
    std::vector<int> bad;
    for (int k = 0; k < cells; ++k)
      if (!mask[k]) bad.push_back(k);
    std::sort(bad.begin(), bad.end(), [&](int a, int b) {
      return dev[levels - 1][a] > dev[levels - 1][b];
    });
    for (int i = 0; i < std::min<int>(8, static_cast<int>(bad.size())); ++i)
      cert.worst_offenders.push_back(lambdas[bad[i]]);
  }
  return cert;
}

bool recheck_witness(const std::function<CMatrix(Complex)>& evaluator,
                     const EgorovCertificate& cert, const EgorovWitness& w) {
  if (!in_cone_eps(w.lambda, w.z, 1.0 / w.n0)) return false;
  try {
    const CMatrix here = evaluator(Complex{w.lambda, 0.0});
    const CMatrix there = evaluator(w.z);
    const double d = (there - here).norm() / cert.norm_scale;
    return d < 1.0 / w.m;
  } catch (const Error&) {
    return false;
  }
}

ConeRegion carve_out_nullset(const ConeRegion& region,
                             std::span<const double> bad_points,
                             double delta) {
  if (!(delta > 0.0)) throw RejectedInput("delta must be positive");
  if (bad_points.empty())
    return ConeRegion(region.intervals(), region.epsilon());
  const double h = delta / (2.0 * static_cast<double>(bad_points.size()));
  std::vector<std::pair<double, double>> pieces = region.intervals();
  for (double b : bad_points) {
    const double cut_lo = b - h;
    const double cut_hi = b + h;
    std::vector<std::pair<double, double>> next;
    for (const auto& [a, c] : pieces) {
      if (c <= cut_lo || a >= cut_hi) {
        next.emplace_back(a, c);
        continue;
      }
      if (a <= cut_lo) next.emplace_back(a, cut_lo);
      if (c >= cut_hi) next.emplace_back(cut_hi, c);
    }
    pieces = std::move(next);
  }
  return ConeRegion(std::move(pieces), region.epsilon());
}

}  // namespace reslab
