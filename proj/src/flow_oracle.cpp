#include "reslab/flow_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

struct FlowContext {
  const CMatrix* h0;
  CMatrix v;
  double v_norm;  // operator norm, the Lipschitz constant of eigenvalues
  double lambda;
  double s_tol;
  std::vector<CrossingRecord>* records;
};

RVector eigenvalues_at(const FlowContext& ctx, double s) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(*ctx.h0 + s * ctx.v,
                                                Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw Error("eigensolver failed along the coupling path");
  return solver.eigenvalues();
}

int count_below(const FlowContext& ctx, double s) {
  const RVector ev = eigenvalues_at(ctx, s);
  int n = 0;
  for (int i = 0; i < ev.size(); ++i)
    if (ev[i] < ctx.lambda) ++n;
  return n;
}

void record_crossing(const FlowContext& ctx, double a, double b, int na,
                     int nb) {
  const double s = 0.5 * (a + b);
  CrossingRecord rec;
  rec.s_star = s;
  rec.multiplicity = std::abs(nb - na);
  rec.direction = nb < na ? 1 : -1;
  rec.degenerate = rec.multiplicity > 1;

  Eigen::SelfAdjointEigenSolver<CMatrix> solver(*ctx.h0 + s * ctx.v);
  const RVector ev = solver.eigenvalues();
  int best = 0;
  for (int i = 1; i < ev.size(); ++i)
    if (std::abs(ev[i] - ctx.lambda) < std::abs(ev[best] - ctx.lambda))
      best = i;
  rec.eigen_index = best;
  const CVector u = solver.eigenvectors().col(best);
  rec.hf_slope = (u.adjoint() * ctx.v * u)(0, 0).real();
  // The counting route decides the direction; the Hellmann-Feynman slope
  // is a cross-check and a tangency detector.
  if (std::abs(rec.hf_slope) < 1e-12 ||
      (rec.hf_slope > 0 ? 1 : -1) != rec.direction)
    rec.degenerate = true;
  ctx.records->push_back(rec);
}

void scan(const FlowContext& ctx, double a, double b, int na, int nb) {
  const double width = b - a;
  if (width < ctx.s_tol) {
    if (na != nb) record_crossing(ctx, a, b, na, nb);
    return;
  }
  const double mid = 0.5 * (a + b);
  if (na == nb) {
    // Certify the cell crossing-free: no eigenvalue at mid is close
    // enough to lambda to reach it within the cell at slope <= ||V||.
    const RVector ev = eigenvalues_at(ctx, mid);
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < ev.size(); ++i)
      gap = std::min(gap, std::abs(ev[i] - ctx.lambda));
    if (gap > ctx.v_norm * 0.5 * width) return;
  }
  const int nm = count_below(ctx, mid);
  scan(ctx, a, mid, na, nm);
  scan(ctx, mid, b, nm, nb);
}

}  // namespace

std::vector<CrossingRecord> crossings(const RiggedModel& model, double lambda,
                                      const FlowOptions& opts) {
  if (model.kind != ModelKind::FiniteMatrix &&
      model.kind != ModelKind::RankOne)
    throw Unsupported("the flow oracle needs a finite model");
  if (opts.grid_n < 2) throw RejectedInput("grid_n must be >= 2");
  if (!(opts.s_tol > 0.0)) throw RejectedInput("s_tol must be positive");

  FlowContext ctx;
  ctx.h0 = &model.h0;
  ctx.v = perturbation(model);
  Eigen::SelfAdjointEigenSolver<CMatrix> vs(ctx.v, Eigen::EigenvaluesOnly);
  ctx.v_norm = vs.eigenvalues().cwiseAbs().maxCoeff();
  ctx.lambda = lambda;
  ctx.s_tol = opts.s_tol;
  std::vector<CrossingRecord> out;
  ctx.records = &out;

  if (opts.lambda_guard > 0.0) {
    for (double s : {0.0, 1.0}) {
      const RVector ev = eigenvalues_at(ctx, s);
      for (int i = 0; i < ev.size(); ++i)
        if (std::abs(ev[i] - lambda) < opts.lambda_guard)
          throw RejectedInput(
              "lambda too close to an endpoint eigenvalue for the guard");
    }
  }

  std::vector<int> counts(opts.grid_n);
  std::vector<double> ss(opts.grid_n);
  for (int k = 0; k < opts.grid_n; ++k) {
    ss[k] = static_cast<double>(k) / (opts.grid_n - 1);
    counts[k] = count_below(ctx, ss[k]);
  }
  for (int k = 0; k + 1 < opts.grid_n; ++k)
    scan(ctx, ss[k], ss[k + 1], counts[k], counts[k + 1]);
  std::sort(out.begin(), out.end(),
            [](const CrossingRecord& x, const CrossingRecord& y) {
              return x.s_star < y.s_star;
            });
  return out;
}

int net_flow(std::span<const CrossingRecord> records) {
  int total = 0;
  for (const auto& rec : records) total += rec.direction * rec.multiplicity;
  return total;
}

}  // namespace reslab
