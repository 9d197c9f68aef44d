#pragma once

#include <stdexcept>

namespace synclab {

// Every contract failure throws a named subtype of Error so callers can
// catch the library as a whole or a specific failure mode.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define SYNCLAB_DEFINE_ERROR(Name) \
  struct Name : Error {            \
    using Error::Error;            \
  }

SYNCLAB_DEFINE_ERROR(NoSpanningTree);
SYNCLAB_DEFINE_ERROR(DimensionMismatch);
SYNCLAB_DEFINE_ERROR(NonFinite);
SYNCLAB_DEFINE_ERROR(InvalidConfig);
SYNCLAB_DEFINE_ERROR(Overflow);
SYNCLAB_DEFINE_ERROR(PreconditionViolated);
SYNCLAB_DEFINE_ERROR(InsufficientSamples);
SYNCLAB_DEFINE_ERROR(DegenerateData);
SYNCLAB_DEFINE_ERROR(Infeasible);
SYNCLAB_DEFINE_ERROR(InvalidInitialDiameter);
SYNCLAB_DEFINE_ERROR(OutputUnwritable);

#undef SYNCLAB_DEFINE_ERROR

}  // namespace synclab
