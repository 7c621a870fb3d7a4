#pragma once

#include <span>
#include <vector>

#include "reslab/operator_models.hpp"
#include "reslab/types.hpp"

namespace reslab {

struct SandwichedResolvent {
  Complex z;
  CMatrix matrix;         // nf x nf
  bool boundary = false;  // z was taken on the real axis
};

// T_z = F R_z(H0) F* from the closed form of the model kind. Real z is a
// boundary evaluation where defined; spectral points raise SingularPoint.
// Half-line kinds reject Im z < 0, finite and synthetic kinds accept it.
SandwichedResolvent eval_T(const RiggedModel& model, Complex z);

// T_z J; synthetic families return family(z) directly.
CMatrix sandwiched_tj(const RiggedModel& model, Complex z);

struct ResolventOptions {
  double tau_sigma_rel = 1e-10;  // cull below tau_sigma_rel * ||T_z J||_F
  bool polish = true;            // Newton-polish each kept resonance
};

struct SigmaMultiset {
  Complex z;
  std::vector<Complex> sigmas;  // kept eigenvalues of T_z J, sorted by
                                // decreasing modulus, then by argument
  int far_count = 0;            // culled eigenvalues, resonances near infinity
  double tau = 0.0;             // absolute cull threshold used

  std::vector<Complex> resonances() const;  // r_j = -1 / sigma_j, same order
};

// Eigenvalues of T_z J above the cull threshold. Culled eigenvalues are
// counted in far_count rather than listed, since their resonances sit
// near infinity.
SigmaMultiset resonance_spectrum(const RiggedModel& model, Complex z,
                                 const ResolventOptions& opts = {});

// |det(I + r T_z J)| via LU. This is the pole characterization residual
// and shares no code with the eigensolver route.
double pole_residual(const CMatrix& tj, Complex r);

struct HerglotzReport {
  double min_im = 0.0;  // smallest Im r across the grid, sign-adjusted
  Complex argmin_z;
  bool pass = false;
};

// For rank-one probes: the resonance function is Herglotz when the
// coupling is positive (Im r > 0 on the upper half-plane) and
// anti-Herglotz when negative; the check flips the sign accordingly.
// Grid points must have Im z > 0.
HerglotzReport herglotz_check(const RiggedModel& model,
                              std::span<const Complex> grid);

}  // namespace reslab
