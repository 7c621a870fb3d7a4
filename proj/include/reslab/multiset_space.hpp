#pragma once

#include <span>
#include <utility>
#include <vector>

#include "reslab/types.hpp"

namespace reslab {

// Exponent of the symmetric norm used to aggregate matched distances.
enum class PNorm { One, Two, Inf };

double phi_norm(std::span<const double> values, PNorm p);

// Finite multiset in the complex plane with the origin as a base point of
// infinite multiplicity. Support values are nonzero and multiplicities
// positive; equal values are merged on construction.
class BasedMultiset {
 public:
  BasedMultiset() = default;
  explicit BasedMultiset(std::vector<std::pair<Complex, int>> support);

  // Values with modulus <= base_tol collapse into the base point.
  static BasedMultiset from_values(std::span<const Complex> values,
                                   double base_tol = 0.0);

  const std::vector<std::pair<Complex, int>>& support() const {
    return support_;
  }
  // Support with multiplicities unrolled, sorted by (re, im).
  std::vector<Complex> expanded() const;
  int total_mult() const;
  bool empty() const { return support_.empty(); }

 private:
  std::vector<std::pair<Complex, int>> support_;
};

// Optimal-matching distance between based multisets. Both supports are
// expanded, each side is padded with base copies up to a common size, and
// the p-norm of the matched distance list is minimized: an additive
// assignment on d^p for p = 1, 2 and a bottleneck assignment for p = inf.
double multiset_distance(const BasedMultiset& s, const BasedMultiset& t,
                         PNorm p);

}  // namespace reslab
