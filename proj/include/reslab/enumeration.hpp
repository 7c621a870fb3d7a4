#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "reslab/multiset_space.hpp"
#include "reslab/types.hpp"

namespace reslab {

struct SpectralPath {
  std::vector<double> params;          // strictly increasing
  std::vector<BasedMultiset> spectra;  // one multiset per parameter
};

struct EigenBranch {
  int id = 0;
  int start = 0;                // index into params where the branch begins
  std::vector<Complex> values;  // values[k] belongs to params[start + k]
  bool absorbed = false;        // terminated at the base point

  double max_jump() const;
  double max_abs() const;
};

enum class EnumStatus { Ok, NeedsRefinement };

struct SelectedFunctions {
  std::vector<EigenBranch> branches;
  EnumStatus status = EnumStatus::Ok;
  std::pair<double, double> ambiguous_interval{0.0, 0.0};

  double max_jump() const;
  // Branches alive at the final parameter, by branch index.
  std::vector<int> active_at_end(std::size_t n_params) const;
};

struct EnumerationOptions {
  PNorm p = PNorm::Two;
  double collision_tol = 1e-9;
};

// Step-wise optimal matching along the path. A branch matched to the base
// point terminates with a closing zero; mass emerging from the base point
// opens a fresh branch with a leading zero. If a second, materially
// different matching lies within collision_tol of the optimal step cost,
// enumeration stops there and reports NeedsRefinement with the offending
// parameter interval. Materially different means the matched value pairs
// differ beyond collision_tol, so exchanging equal values is not counted.
SelectedFunctions enumerate_path(const SpectralPath& path,
                                 const EnumerationOptions& opts = {});

struct RefineResult {
  SpectralPath path;
  bool resolved = true;
  std::pair<double, double> failed_interval{0.0, 0.0};
};

// Samples the evaluator on the interval and inserts midpoints until
// consecutive multisets are closer than eta_step and enumerate_path runs
// without ambiguity. Each initial subinterval is bisected at most
// max_depth times; exhausting the budget returns resolved = false with
// the interval that still misbehaves, which may flag a genuine
// discontinuity. A sampling that is already fine enough comes back
// unchanged.
RefineResult refine_until_resolved(
    const std::function<BasedMultiset(double)>& evaluator,
    std::pair<double, double> interval, double eta_step, int max_depth,
    const EnumerationOptions& opts = {});

}  // namespace reslab
