#pragma once

#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "reslab/types.hpp"

namespace reslab {

enum class ModelKind {
  FiniteMatrix,
  RankOne,
  HalfLineJacobi,
  EmbeddedBlock,
  SyntheticFamily,
};

// A self-adjoint base operator H0 together with factorized perturbation
// data V = F* J F. Finite kinds carry dense matrices and a cached
// eigendecomposition of H0. Half-line kinds carry closed-form resolvent
// data; their truncation size is used only by cross-check oracles.
// Synthetic kinds carry the sandwiched resolvent directly as a matrix
// family with identity coupling.
struct RiggedModel {
  ModelKind kind = ModelKind::FiniteMatrix;

  // finite kinds
  CMatrix h0;
  CMatrix rigging;   // nf x dim, maps the state space into the probe space
  CMatrix coupling;  // nf x nf Hermitian J

  RVector h0_eigenvalues;  // ascending
  CMatrix h0_eigenvectors;

  // half-line kinds
  std::vector<int> sites;  // delta rigging sites, 1-based, strictly increasing
  double block_level = 0.0;
  int truncation_dim = 0;

  // synthetic kind: z -> T_z, coupling is the identity
  std::function<CMatrix(Complex)> family;

  int nf = 0;
  std::vector<std::pair<double, double>> ess_spectrum;

  int dim() const { return static_cast<int>(h0.rows()); }
};

RiggedModel make_finite(CMatrix h0, CMatrix rigging, CMatrix coupling);
// Rigging F = identity, J given.
RiggedModel make_finite(CMatrix h0, CMatrix coupling);

// Diagonal H0, rank-one probe x -> <phi, x>, 1x1 coupling [scale].
// scale = 0 is allowed and yields the zero perturbation.
RiggedModel make_rank_one(const std::vector<double>& diag, const CVector& phi,
                          double scale);

// Free half-line Jacobi operator (unit hopping, zero diagonal) rigged by
// delta functionals at the given sites.
RiggedModel make_half_line_jacobi(std::vector<int> sites, CMatrix coupling,
                                  int truncation_dim = 2000);

// One eigenvalue lambda0 inside (-2, 2) glued to a free half-line Jacobi
// operator; the probe sees only the block coordinate, with coupling [v].
RiggedModel make_embedded_block(double lambda0, double v,
                                int truncation_dim = 2000);

RiggedModel make_synthetic(std::function<CMatrix(Complex)> family, int nf);

// T_z J = [[0, 1], [z - z0, 0]]: eigenvalues +-sqrt(z - z0), one square
// root branch point at z0.
RiggedModel make_sqrt_branch_family(Complex z0);
// T_z J = [[0, 1], [(z - a)(z - b), 0]]: branch points at a and b.
RiggedModel make_two_branch_family(Complex a, Complex b);
// T_z J = [[z - z0]]: the single resonance -1/(z - z0) blows up at z0.
// Positive control for absorbing-point detection.
RiggedModel make_absorbing_control(Complex z0);

// Random Hermitian model: GUE-like H0, dense rigging with 1 <= nf <= dim
// probe rows, Hermitian coupling. Deterministic for a fixed rng state.
RiggedModel random_finite_model(int dim, std::mt19937_64& rng);

// V = F* J F for finite kinds.
CMatrix perturbation(const RiggedModel& model);

// Root w of w^2 - z w + 1 = 0 with |w| < 1; for real z in (-2, 2) the
// boundary limit from the upper half-plane, which has Im w < 0. Band
// edges +-2 are rejected.
Complex jacobi_root(Complex z);

// Green's function of the free half-line Jacobi operator at 1-based
// sites: G(n, m; z) = -w^{|n-m|+1} * sum_{j<min(n,m)} w^{2j}.
Complex jacobi_green(int n, int m, Complex z);

// Dense truncation of H0 for cross-check oracles. Finite kinds ignore
// trunc_dim and return h0 itself.
CMatrix truncated_hamiltonian(const RiggedModel& model, int trunc_dim);
// Rigging matrix on the same truncated space.
CMatrix rigging_truncated(const RiggedModel& model, int trunc_dim);

// F (H_trunc - z)^{-1} F* computed by direct linear solves, sparse for
// the half-line kinds. Independent of the closed forms used by eval_T.
CMatrix sandwiched_resolvent_truncated(const RiggedModel& model, Complex z,
                                       int trunc_dim);

}  // namespace reslab
