#include "reslab/resolvent_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

void require_upper_or_real(Complex z) {
  if (z.imag() < 0.0)
    throw RejectedInput(
        "half-line kinds define T_z only for Im z >= 0");
}

}  // namespace

SandwichedResolvent eval_T(const RiggedModel& model, Complex z) {
  SandwichedResolvent out;
  out.z = z;
  out.boundary = z.imag() == 0.0;
  switch (model.kind) {
    case ModelKind::FiniteMatrix:
    case ModelKind::RankOne: {
      const RVector& ev = model.h0_eigenvalues;
      if (out.boundary) {
        for (int i = 0; i < ev.size(); ++i)
          if (std::abs(z.real() - ev[i]) < 1e-13 * (1.0 + std::abs(ev[i])))
            throw SingularPoint("z lies on an eigenvalue of H0");
      }
      const CMatrix fu = model.rigging * model.h0_eigenvectors;
      CVector weights(ev.size());
      for (int i = 0; i < ev.size(); ++i)
        weights[i] = 1.0 / (Complex(ev[i]) - z);
      out.matrix = fu * weights.asDiagonal() * fu.adjoint();
      return out;
    }
    case ModelKind::HalfLineJacobi: {
      require_upper_or_real(z);
      CMatrix t(model.nf, model.nf);
      for (int i = 0; i < model.nf; ++i)
        for (int j = 0; j < model.nf; ++j)
          t(i, j) = jacobi_green(model.sites[i], model.sites[j], z);
      out.matrix = std::move(t);
      return out;
    }
    case ModelKind::EmbeddedBlock: {
      require_upper_or_real(z);
      if (out.boundary &&
          std::abs(z.real() - model.block_level) <
              1e-13 * (1.0 + std::abs(model.block_level)))
        throw SingularPoint("z lies on the block eigenvalue");
      out.matrix = CMatrix::Constant(1, 1, 1.0 / (model.block_level - z));
      return out;
    }
    case ModelKind::SyntheticFamily: {
      CMatrix t = model.family(z);
      if (t.rows() != model.nf || t.cols() != model.nf)
        throw Error("synthetic family returned a matrix of the wrong size");
      out.matrix = std::move(t);
      return out;
    }
  }
  throw Unsupported("unknown model kind");
}

CMatrix sandwiched_tj(const RiggedModel& model, Complex z) {
  return eval_T(model, z).matrix * model.coupling;
}

std::vector<Complex> SigmaMultiset::resonances() const {
  std::vector<Complex> out;
  out.reserve(sigmas.size());
  for (Complex s : sigmas) out.push_back(-1.0 / s);
  return out;
}

// |det(I + r TJ)| normalized by the evaluation condition scale
// prod_k (1 + |r sigma_k|).  The eigenvalues of I + r TJ are
// lambda_k = 1 + r sigma_k, so each factor |lambda_k| / (1 + |lambda_k - 1|)
// lies in [0, 1] and the product never overflows.
double pole_residual(const CMatrix& tj, Complex r) {
  const auto n = tj.rows();
  const CMatrix a = CMatrix::Identity(n, n) + r * tj;
  Eigen::ComplexEigenSolver<CMatrix> solver(a, false);
  if (solver.info() == Eigen::Success) {
    double out = 1.0;
    for (int i = 0; i < n; ++i) {
      const Complex lam = solver.eigenvalues()[i];
      out *= std::abs(lam) / (1.0 + std::abs(lam - 1.0));
    }
    return out;
  }
  const double det = std::abs(a.partialPivLu().determinant());
  const double scale =
      std::pow(1.0 + std::abs(r) * tj.norm(), static_cast<double>(n));
  return std::min(1.0, det / scale);
}

SigmaMultiset resonance_spectrum(const RiggedModel& model, Complex z,
                                 const ResolventOptions& opts) {
  const CMatrix tj = sandwiched_tj(model, z);
  SigmaMultiset out;
  out.z = z;
  out.tau = opts.tau_sigma_rel * tj.norm();

  Eigen::ComplexEigenSolver<CMatrix> solver(tj, false);
  if (solver.info() != Eigen::Success)
    throw Error("eigensolver failed on T_z J");
  std::vector<Complex> kept;
  for (int i = 0; i < tj.rows(); ++i) {
    const Complex s = solver.eigenvalues()[i];
    if (std::abs(s) > out.tau)
      kept.push_back(s);
    else
      ++out.far_count;
  }

  if (opts.polish && !kept.empty()) {
    std::vector<Complex> rs;
    rs.reserve(kept.size());
    for (Complex s : kept) rs.push_back(-1.0 / s);
    const auto n = tj.rows();
    // Judge every candidate by the residual of the round-tripped value
    // -1/(-1/r): that is what the resonance accessor will hand back, and
    // the round trip costs an ulp or two.
    auto stored_residual = [&](Complex s) {
      return pole_residual(tj, -1.0 / s);
    };
    for (std::size_t k = 0; k < kept.size(); ++k) {
      double d_min = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < rs.size(); ++j)
        if (j != k) d_min = std::min(d_min, std::abs(rs[j] - rs[k]));
      const double step_cap = std::isfinite(d_min)
                                  ? 0.25 * d_min
                                  : 0.1 * (1.0 + std::abs(rs[k]));
      Complex best_s = kept[k];
      double best_res = stored_residual(best_s);
      Complex r = rs[k];
      for (int it = 0; it < 5 && best_res > 0.0; ++it) {
        const CMatrix a = CMatrix::Identity(n, n) + r * tj;
        const Complex trace = a.partialPivLu().solve(tj).trace();
        if (std::abs(trace) < 1e-300) break;
        const Complex r_hat = r - 1.0 / trace;
        if (std::abs(r_hat - rs[k]) >= step_cap) break;
        const Complex s_hat = -1.0 / r_hat;
        if (std::abs(s_hat) <= out.tau) break;
        const double res = stored_residual(s_hat);
        if (res < best_res) {
          best_res = res;
          best_s = s_hat;
        }
        r = r_hat;
      }
      kept[k] = best_s;
    }
  }

  std::sort(kept.begin(), kept.end(), [](Complex a, Complex b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    const double aa = std::arg(a), ab = std::arg(b);
    if (aa != ab) return aa < ab;
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  out.sigmas = std::move(kept);
  return out;
}

HerglotzReport herglotz_check(const RiggedModel& model,
                              std::span<const Complex> grid) {
  if (model.nf != 1)
    throw Unsupported("herglotz check needs a rank-one probe");
  const double s = model.coupling(0, 0).real();
  HerglotzReport report;
  report.min_im = std::numeric_limits<double>::infinity();
  if (s == 0.0) {
    report.pass = true;  // zero perturbation, nothing to check
    return report;
  }
  for (Complex z : grid) {
    if (z.imag() <= 0.0)
      throw RejectedInput("herglotz grid points must have Im z > 0");
    const Complex t = eval_T(model, z).matrix(0, 0);
    const Complex r = -1.0 / (s * t);
    const double val = s > 0.0 ? r.imag() : -r.imag();
    if (val < report.min_im) {
      report.min_im = val;
      report.argmin_z = z;
    }
  }
  report.pass = report.min_im > 0.0;
  return report;
}

}  // namespace reslab
