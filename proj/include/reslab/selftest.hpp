#pragma once

#include <ostream>

namespace reslab {

// Fast invariant suites over the worked examples: metric axioms, Green's
// function values, truncation agreement, the pole characterization, cone
// geometry, the crossing oracle and branch classification. Prints one
// [ok]/[FAIL] line per check and returns the failure count.
int run_selftest(std::ostream& out);

}  // namespace reslab
