#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "reslab/types.hpp"

namespace reslab {

// Membership in the closed cone over lambda: the vertex itself plus the
// points of the open upper half-plane whose argument relative to lambda
// lies in [pi/4, 3pi/4]. Points below the real axis are rejected.
bool in_cone(double lambda, Complex z);

// Cone truncated at |z - lambda| <= eps.
bool in_cone_eps(double lambda, Complex z, double eps);

// Finite union of closed real intervals with a cone-height parameter.
class ConeRegion {
 public:
  ConeRegion() = default;
  ConeRegion(std::vector<std::pair<double, double>> intervals, double epsilon);

  const std::vector<std::pair<double, double>>& intervals() const {
    return intervals_;
  }
  double epsilon() const { return epsilon_; }
  bool empty() const { return intervals_.empty(); }
  double measure() const;
  double min() const;
  double max() const;
  bool contains(double lambda) const;
  // z in the untruncated cone over some point of the region.
  bool cone_contains(Complex z) const;
  // z in the eps-truncated cone over some point of the region.
  bool cone_eps_contains(Complex z) const;

 private:
  std::vector<std::pair<double, double>> intervals_;  // sorted, disjoint
  double epsilon_ = 0.0;
};

// Splits the straight connection from lambda to z into at most three
// segments whose undirected slopes stay within the cone angles and whose
// lengths are bounded by |z - lambda|. Needs Im z > 0 or z == lambda.
std::vector<std::pair<Complex, Complex>> segment_decompose(double lambda,
                                                           Complex z);

struct EgorovWitness {
  double lambda = 0.0;
  Complex z;              // sampled cone point realizing the deviation
  double deviation = 0.0; // normalized by norm_scale
  int m = 0;              // level: deviation < 1/m
  int n0 = 0;             // cone scale at that level
};

struct EgorovModuli {
  int m = 0;
  int n0 = 0;
  double defect = 0.0;  // grid measure of E^m_{n_max} minus E^m_{n0}
};

struct EgorovCertificate {
  ConeRegion region;
  std::pair<double, double> interval{0.0, 0.0};
  double delta = 0.0;
  double norm_scale = 1.0;
  double grid_step = 0.0;
  std::vector<EgorovModuli> moduli;
  std::vector<EgorovWitness> witnesses;
  double uncovered_measure = 0.0;  // grid measure of I minus the region
  bool ok = false;                 // uncovered_measure < delta
  std::vector<double> worst_offenders;  // grid points blocking certification
};

struct EgorovOptions {
  double lambda_step_rel = 1e-3;  // grid step relative to |I|
  int m_max = 8;
  int n_max = 4096;      // cone scales 1, 2, 4, ..., n_max
  int radii_per_ray = 4;
  int witnesses_per_level = 8;
  int threads = 1;
};

// Discretized carving of an almost-covering compact out of the interval:
// deviation of the evaluator over sampled cone points per scale, level
// sets per modulus 1/m, smallest scale whose defect against the finest
// scale stays under delta / 2^(m+1), then the intersection over m. The
// certificate records moduli, witnesses and the uncovered measure;
// ok = false flags a budget failure, with the worst offenders listed.
// Evaluator failures at a grid point exclude that point.
EgorovCertificate egorov_compact(
    const std::function<CMatrix(Complex)>& evaluator,
    std::pair<double, double> interval, double delta,
    const EgorovOptions& opts = {});

// Re-evaluates one witness against the evaluator: z must lie in the cone
// of scale 1/n0 over lambda and the normalized deviation must stay below
// 1/m. Used for offline certificate checks.
bool recheck_witness(const std::function<CMatrix(Complex)>& evaluator,
                     const EgorovCertificate& cert, const EgorovWitness& w);

// Removes an open interval of half-width delta / (2 * #points) around
// each bad point, so at most measure delta is lost in total.
ConeRegion carve_out_nullset(const ConeRegion& region,
                             std::span<const double> bad_points, double delta);

}  // namespace reslab
