#pragma once

#include <span>
#include <vector>

#include "reslab/operator_models.hpp"
#include "reslab/types.hpp"

namespace reslab {

struct CrossingRecord {
  double s_star = 0.0;   // coupling where an eigenvalue meets lambda
  int direction = 0;     // +1 eigenvalue moves up through lambda, -1 down
  int multiplicity = 1;  // |jump| of the counting function
  int eigen_index = 0;   // ascending index of the crossing eigenvalue
  double hf_slope = 0.0; // <u, V u> at the crossing
  bool degenerate = false;
};

struct FlowOptions {
  int grid_n = 2001;         // initial uniform partition of [0, 1]
  double s_tol = 1e-10;      // bisection width for s_star
  double lambda_guard = 0.0; // reject lambda this close to an eigenvalue
                             // of some H0 + sV endpoint; 0 disables
};

// Eigenvalue crossings of s -> H0 + sV through the level lambda on
// s in [0, 1], found by counting eigenvalues below lambda. Cells are
// certified crossing-free via the Lipschitz bound |d eig / ds| <= ||V||,
// so nearby crossing pairs cannot cancel silently. Finite kinds only.
std::vector<CrossingRecord> crossings(const RiggedModel& model, double lambda,
                                      const FlowOptions& opts = {});

// Sum of direction * multiplicity, the net spectral flow through lambda.
int net_flow(std::span<const CrossingRecord> records);

}  // namespace reslab
