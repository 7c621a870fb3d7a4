#pragma once

#include <stdexcept>
#include <string>

namespace reslab {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A caller handed us input that violates a documented precondition.
struct RejectedInput : Error {
  using Error::Error;
};

// The operation is well posed but not available for this model kind.
struct Unsupported : Error {
  using Error::Error;
};

// Resolvent data was requested at a point of the spectrum.
struct SingularPoint : Error {
  using Error::Error;
};

// An eigenvalue cluster could not be separated from the rest of the
// spectrum within the working tolerance.
struct ClusterLeak : Error {
  using Error::Error;
};

// A scenario file failed validation; message names the offending key.
struct ScenarioError : Error {
  using Error::Error;
};

}  // namespace reslab
