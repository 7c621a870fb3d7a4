#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "reslab/domain_carving.hpp"
#include "reslab/operator_models.hpp"
#include "reslab/resolvent_core.hpp"
#include "reslab/types.hpp"

namespace reslab {

enum class TrajectoryStatus { Ok, HitBranchPoint, Diverged, LeftDomain };

struct BranchTrajectory {
  std::vector<Complex> path;    // accepted sample points, start included
  std::vector<Complex> values;  // tracked resonance at each sample
  TrajectoryStatus status = TrajectoryStatus::Ok;
  std::optional<Complex> boundary_limit;  // set when the walk ends on the axis
  std::pair<Complex, Complex> failure_interval{0.0, 0.0};
  std::string note;
};

struct ContinuationOptions {
  double margin_ratio = 3.0;  // runner-up resonance must be this much farther
  int max_bisect = 48;        // dyadic step splits per leg
  double start_tol = 1e-6;    // start_r must match a resonance this well
  double r_abs = 0.0;         // divergence radius; 0 picks one from the model
  int diverge_run = 5;        // consecutive growth samples for a divergence
  ResolventOptions resolvent;
};

// Tracks one resonance from (start_z, start_r) along the waypoint
// polyline by nearest matching with bisection on ambiguous steps.
// Persistent ambiguity reports HitBranchPoint with the offending leg;
// monotone growth past the divergence radius reports Diverged; stepping
// outside the model's resolvent domain reports LeftDomain.
BranchTrajectory continue_branch(const RiggedModel& model, Complex start_z,
                                 Complex start_r,
                                 std::span<const Complex> waypoints,
                                 const ContinuationOptions& opts = {});

// Discriminant of T_z J: the squared product of eigenvalue differences,
// 1 when nf < 2. Computed from the full eigenvalue set without culling.
Complex discriminant_at(const RiggedModel& model, Complex z);

struct MonodromyResult {
  std::vector<int> permutation;  // final slot of each starting eigenvalue
  int period = 1;                // order of the permutation
  bool resolved = false;
  int samples = 0;  // circle samples after refinement
};

// Continues the full eigenvalue multiset of T_z J once around the circle
// and matches the end against the start.
MonodromyResult monodromy_loop(const RiggedModel& model, Complex center,
                               double radius,
                               const ContinuationOptions& opts = {});

enum class SingularityKind { Regular, BranchPoint, AbsorbingSuspect, Unresolved };

struct SingularityReport {
  Complex location;
  SingularityKind kind = SingularityKind::Regular;
  int period = 1;
  std::vector<int> monodromy;
  double residual_discriminant = 0.0;  // |D| at the refined location
  double min_sigma = 0.0;              // smallest |sigma| seen at the location
  std::string evidence;
};

struct ClassifyOptions {
  double probe_radius = 0.05;
  int retries = 2;         // radius halvings when a loop stays ambiguous
  int rays = 8;            // radial probes for the absorbing check
  double ray_decades = 10; // how far inward the radial probe walks; deep
                           // enough for 1/min|sigma| to clear the escape
                           // radius when the decay is genuine
  ContinuationOptions cont;
};

// Monodromy first: a nontrivial permutation is a branch point. With
// trivial monodromy, a monotone blow-up of some resonance along inward
// rays makes the point an absorbing suspect; otherwise it is regular.
SingularityReport classify_singularity(const RiggedModel& model,
                                       Complex candidate,
                                       const ClassifyOptions& opts = {});

struct DetectOptions {
  int grid_re = 48;
  int grid_im = 32;
  int refine_iters = 60;     // 3x3 shrinking-grid steps per candidate
  double accept_drop = 1e-6; // refined |D| must drop below this times the
                             // grid scale to count as a zero
  double merge_tol = 1e-6;
  int threads = 1;
  ClassifyOptions classify;
};

// Zeros of the discriminant inside the rectangle: |D| grid scan, strict
// interior local minima, 3x3 shrinking-grid refinement, then monodromy
// classification of each surviving candidate.
std::vector<SingularityReport> detect_branch_points(const RiggedModel& model,
                                                    const Rect& region,
                                                    const DetectOptions& opts = {});

struct AbsorbingSweepOptions {
  int grid_re = 40;
  int grid_im = 28;
  int refine_iters = 60;
  double suspect_drop = 1e-6;  // refined min |sigma| must drop this far
  int threads = 1;
  ClassifyOptions classify;
};

struct AbsorbingSweepReport {
  std::vector<SingularityReport> suspects;      // AbsorbingSuspect findings
  std::vector<SingularityReport> other_events;  // branch points and the rest
  int candidates_examined = 0;
  double min_sigma_seen = 0.0;
  Complex argmin_z;
};

// Scans min_j |sigma_j| over the rectangle for deep local minima, refines
// them and classifies survivors. Suspects are reportable events; on
// models whose T_z stays invertible off the real axis the expected count
// is zero.
AbsorbingSweepReport absorbing_sweep(const RiggedModel& model,
                                     const Rect& region,
                                     const AbsorbingSweepOptions& opts = {});

struct ImpactingBranch {
  int branch_id = 0;
  Complex top_value;       // resonance at the top of the ladder
  Complex boundary_value;  // limit on the real axis
  bool impacting = false;  // boundary value real and inside [0, 1]
};

struct ImpactingSet {
  double lambda = 0.0;
  std::vector<ImpactingBranch> branches;
  std::string note;  // set when a perturbed vertical was needed

  int impacting_count() const;
};

struct ImpactingOptions {
  double tau_real = 1e-6;   // |Im r| bound for a real boundary value
  double margin = 1e-6;     // slack around [0, 1]
  double h_perturb = 1e-4;  // horizontal shift when a vertical fails
  double y_top = 0.5;
  double y_bottom = 1e-4;
  int ladder_size = 12;
  ContinuationOptions cont;
};

// Continues every resonance from lambda + i y_top down a geometric ladder
// to the real axis and flags branches whose boundary value is real within
// tau_real and inside [0, 1] within margin.
ImpactingSet find_impacting(const RiggedModel& model, double lambda,
                            const ImpactingOptions& opts = {});

struct BranchLoopCheck {
  int chain_id = 0;
  double lambda = 0.0;
  double height = 0.0;
  double defect = 0.0;
  bool pass = false;
};

struct SingleValuednessReport {
  int global_branches = 0;    // chains across the lambda grid
  int impacting_chains = 0;   // chains impacting somewhere
  std::vector<BranchLoopCheck> checks;
  double min_verified_height = 0.0;
  bool pass = false;
};

struct VerifyOptions {
  int lambda_samples = 9;
  int height_levels = 3;
  int loop_points = 16;
  double defect_tol = 1e-6;
  ImpactingOptions impacting;
};

// Chains the per-lambda impacting sets into global branches over the
// region, then drives small loops at a ladder of heights along each
// impacting chain and checks that the tracked resonance returns to
// itself.
SingleValuednessReport verify_single_valuedness(
    const RiggedModel& model, const ConeRegion& region,
    std::span<const ImpactingSet> impacting, const VerifyOptions& opts = {});

struct RayStats {
  int n_rays = 0;
  int survived = 0;
  std::vector<int> failed_rays;
  double survival_fraction = 0.0;
};

// Continues the resonance nearest start_r from z0 along straight rays to
// the boundary of the rectangle and reports how many survive.
RayStats ray_survival_stats(const RiggedModel& model, Complex z0,
                            Complex start_r, const Rect& region, int n_rays,
                            const ContinuationOptions& opts = {});

}  // namespace reslab
