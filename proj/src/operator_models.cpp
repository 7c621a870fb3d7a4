#include "reslab/operator_models.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "reslab/errors.hpp"

namespace reslab {

namespace {

void require_hermitian(const CMatrix& m, const std::string& name) {
  if (m.rows() != m.cols())
    throw RejectedInput(name + " must be square");
  if (!is_hermitian(m, 1e-12 * (1.0 + m.norm())))
    throw RejectedInput(name + " must be Hermitian");
}

void cache_eigendecomposition(RiggedModel& model) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(model.h0);
  if (solver.info() != Eigen::Success)
    throw Error("eigendecomposition of H0 failed");
  model.h0_eigenvalues = solver.eigenvalues();
  model.h0_eigenvectors = solver.eigenvectors();
}

}  // namespace

bool is_hermitian(const CMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

RiggedModel make_finite(CMatrix h0, CMatrix rigging, CMatrix coupling) {
  require_hermitian(h0, "h0");
  require_hermitian(coupling, "coupling");
  if (rigging.rows() < 1)
    throw RejectedInput("rigging must have at least one row");
  if (rigging.cols() != h0.rows())
    throw RejectedInput("rigging columns must match the dimension of h0");
  if (coupling.rows() != rigging.rows())
    throw RejectedInput("coupling size must match the rigging rank");

  RiggedModel model;
  model.kind = ModelKind::FiniteMatrix;
  model.h0 = std::move(h0);
  model.rigging = std::move(rigging);
  model.coupling = std::move(coupling);
  model.nf = static_cast<int>(model.rigging.rows());
  cache_eigendecomposition(model);
  return model;
}

RiggedModel make_finite(CMatrix h0, CMatrix coupling) {
  const auto n = h0.rows();
  return make_finite(std::move(h0), CMatrix::Identity(n, n),
                     std::move(coupling));
}

RiggedModel make_rank_one(const std::vector<double>& diag, const CVector& phi,
                          double scale) {
  const int n = static_cast<int>(diag.size());
  if (n == 0) throw RejectedInput("rank-one model needs a nonempty diagonal");
  if (phi.size() != n)
    throw RejectedInput("phi length must match the diagonal length");
  if (phi.norm() == 0.0) throw RejectedInput("phi must be nonzero");

  CMatrix h0 = CMatrix::Zero(n, n);
  for (int i = 0; i < n; ++i) h0(i, i) = diag[i];
  CMatrix rigging = phi.adjoint();
  CMatrix coupling(1, 1);
  coupling(0, 0) = scale;
  RiggedModel model =
      make_finite(std::move(h0), std::move(rigging), std::move(coupling));
  model.kind = ModelKind::RankOne;
  return model;
}

RiggedModel make_half_line_jacobi(std::vector<int> sites, CMatrix coupling,
                                  int truncation_dim) {
  if (sites.empty()) throw RejectedInput("sites must be nonempty");
  for (std::size_t i = 0; i < sites.size(); ++i) {
    if (sites[i] < 1) throw RejectedInput("sites must be >= 1");
    if (i > 0 && sites[i] <= sites[i - 1])
      throw RejectedInput("sites must be strictly increasing");
  }
  require_hermitian(coupling, "coupling");
  if (coupling.rows() != static_cast<Eigen::Index>(sites.size()))
    throw RejectedInput("coupling size must match the number of sites");
  if (truncation_dim < sites.back() + 10)
    throw RejectedInput("truncation_dim too small for the rigging sites");

  RiggedModel model;
  model.kind = ModelKind::HalfLineJacobi;
  model.sites = std::move(sites);
  model.coupling = std::move(coupling);
  model.nf = static_cast<int>(model.sites.size());
  model.truncation_dim = truncation_dim;
  model.ess_spectrum = {{-2.0, 2.0}};
  return model;
}

RiggedModel make_embedded_block(double lambda0, double v, int truncation_dim) {
  if (!(lambda0 > -2.0 && lambda0 < 2.0))
    throw RejectedInput("block level must lie strictly inside (-2, 2)");
  if (v == 0.0) throw RejectedInput("block coupling must be nonzero");
  if (truncation_dim < 10) throw RejectedInput("truncation_dim too small");

  RiggedModel model;
  model.kind = ModelKind::EmbeddedBlock;
  model.block_level = lambda0;
  model.coupling = CMatrix::Constant(1, 1, v);
  model.nf = 1;
  model.truncation_dim = truncation_dim;
  model.ess_spectrum = {{-2.0, 2.0}};
  return model;
}

RiggedModel make_synthetic(std::function<CMatrix(Complex)> family, int nf) {
  if (!family) throw RejectedInput("synthetic family must be callable");
  if (nf < 1) throw RejectedInput("synthetic rank must be >= 1");
  RiggedModel model;
  model.kind = ModelKind::SyntheticFamily;
  model.family = std::move(family);
  model.coupling = CMatrix::Identity(nf, nf);
  model.nf = nf;
  return model;
}

RiggedModel make_sqrt_branch_family(Complex z0) {
  return make_synthetic(
      [z0](Complex z) {
        CMatrix t = CMatrix::Zero(2, 2);
        t(0, 1) = 1.0;
        t(1, 0) = z - z0;
        return t;
      },
      2);
}

RiggedModel make_two_branch_family(Complex a, Complex b) {
  return make_synthetic(
      [a, b](Complex z) {
        CMatrix t = CMatrix::Zero(2, 2);
        t(0, 1) = 1.0;
        t(1, 0) = (z - a) * (z - b);
        return t;
      },
      2);
}

RiggedModel make_absorbing_control(Complex z0) {
  return make_synthetic(
      [z0](Complex z) { return CMatrix::Constant(1, 1, z - z0); }, 1);
}

RiggedModel random_finite_model(int dim, std::mt19937_64& rng) {
  if (dim < 1) throw RejectedInput("dimension must be >= 1");
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto random_matrix = [&](int rows, int cols) {
    CMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = Complex(gauss(rng), gauss(rng));
    return m;
  };

  CMatrix a = random_matrix(dim, dim);
  CMatrix h0 = 0.5 * (a + a.adjoint());
  std::uniform_int_distribution<int> rank(1, dim);
  const int nf = rank(rng);
  CMatrix rigging = random_matrix(nf, dim);
  CMatrix b = random_matrix(nf, nf);
  CMatrix coupling = 0.5 * (b + b.adjoint());
  return make_finite(std::move(h0), std::move(rigging), std::move(coupling));
}

CMatrix perturbation(const RiggedModel& model) {
  if (model.kind != ModelKind::FiniteMatrix && model.kind != ModelKind::RankOne)
    throw Unsupported("perturbation matrix is only available for finite kinds");
  return model.rigging.adjoint() * model.coupling * model.rigging;
}

Complex jacobi_root(Complex z) {
  if (std::abs(z - 2.0) < 1e-12 || std::abs(z + 2.0) < 1e-12)
    throw SingularPoint("band edge");
  if (z.imag() == 0.0 && std::abs(z.real()) < 2.0) {
    const double x = z.real();
    return {0.5 * x, -0.5 * std::sqrt(4.0 - x * x)};
  }
  const Complex s = std::sqrt(z * z - 4.0);
  const Complex w1 = 0.5 * (z + s);
  const Complex w2 = 0.5 * (z - s);
  return std::abs(w1) < std::abs(w2) ? w1 : w2;
}

Complex jacobi_green(int n, int m, Complex z) {
  if (n < 1 || m < 1) throw RejectedInput("sites are 1-based");
  const Complex w = jacobi_root(z);
  const int lo = std::min(n, m);
  const Complex w2 = w * w;
  Complex geom = 0.0;
  Complex pw = 1.0;
  for (int j = 0; j < lo; ++j) {
    geom += pw;
    pw *= w2;
  }
  return -std::pow(w, std::abs(n - m) + 1) * geom;
}

CMatrix truncated_hamiltonian(const RiggedModel& model, int trunc_dim) {
  switch (model.kind) {
    case ModelKind::FiniteMatrix:
    case ModelKind::RankOne:
      return model.h0;
    case ModelKind::HalfLineJacobi: {
      CMatrix h = CMatrix::Zero(trunc_dim, trunc_dim);
      for (int i = 0; i + 1 < trunc_dim; ++i) {
        h(i, i + 1) = 1.0;
        h(i + 1, i) = 1.0;
      }
      return h;
    }
    case ModelKind::EmbeddedBlock: {
      CMatrix h = CMatrix::Zero(trunc_dim + 1, trunc_dim + 1);
      h(0, 0) = model.block_level;
      for (int i = 1; i < trunc_dim; ++i) {
        h(i, i + 1) = 1.0;
        h(i + 1, i) = 1.0;
      }
      return h;
    }
    case ModelKind::SyntheticFamily:
      break;
  }
  throw Unsupported("no Hamiltonian for synthetic families");
}

CMatrix rigging_truncated(const RiggedModel& model, int trunc_dim) {
  switch (model.kind) {
    case ModelKind::FiniteMatrix:
    case ModelKind::RankOne:
      return model.rigging;
    case ModelKind::HalfLineJacobi: {
      CMatrix f = CMatrix::Zero(model.nf, trunc_dim);
      for (int i = 0; i < model.nf; ++i) {
        if (model.sites[i] > trunc_dim)
          throw RejectedInput("truncation does not cover all rigging sites");
        f(i, model.sites[i] - 1) = 1.0;
      }
      return f;
    }
    case ModelKind::EmbeddedBlock: {
      CMatrix f = CMatrix::Zero(1, trunc_dim + 1);
      f(0, 0) = 1.0;
      return f;
    }
    case ModelKind::SyntheticFamily:
      break;
  }
  throw Unsupported("no rigging matrix for synthetic families");
}

CMatrix sandwiched_resolvent_truncated(const RiggedModel& model, Complex z,
                                       int trunc_dim) {
  switch (model.kind) {
    case ModelKind::FiniteMatrix:
    case ModelKind::RankOne: {
      const CMatrix f = model.rigging;
      CMatrix shifted = model.h0;
      shifted.diagonal().array() -= z;
      return f * shifted.partialPivLu().solve(f.adjoint());
    }
    case ModelKind::HalfLineJacobi:
    case ModelKind::EmbeddedBlock: {
      const CMatrix f = rigging_truncated(model, trunc_dim);
      const int n = static_cast<int>(f.cols());
      Eigen::SparseMatrix<Complex> shifted(n, n);
      std::vector<Eigen::Triplet<Complex>> entries;
      entries.reserve(3 * n);
      const int offset = model.kind == ModelKind::EmbeddedBlock ? 1 : 0;
      if (offset == 1)
        entries.emplace_back(0, 0, Complex(model.block_level) - z);
      for (int i = offset; i < n; ++i) {
        entries.emplace_back(i, i, -z);
        if (i + 1 < n) {
          entries.emplace_back(i, i + 1, 1.0);
          entries.emplace_back(i + 1, i, 1.0);
        }
      }
      shifted.setFromTriplets(entries.begin(), entries.end());
      Eigen::SparseLU<Eigen::SparseMatrix<Complex>> lu(shifted);
      if (lu.info() != Eigen::Success)
        throw SingularPoint("truncated resolvent solve failed");
      CMatrix rhs = f.adjoint();
      CMatrix solved(n, model.nf);
      for (int j = 0; j < model.nf; ++j)
        solved.col(j) = lu.solve(CVector(rhs.col(j)));
      return f * solved;
    }
    case ModelKind::SyntheticFamily:
      break;
  }
  throw Unsupported("no truncation oracle for synthetic families");
}

}  // namespace reslab
