#pragma once

#include <stdexcept>
#include <string>

namespace pipesim {

/// Base of every error raised by the library. Catch this at tool boundaries.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

#define PIPESIM_DEFINE_ERROR(Name, Base)                                      \
  class Name : public Base {                                                  \
  public:                                                                     \
    explicit Name(const std::string& what) : Base(#Name ": " + what) {}       \
  }

PIPESIM_DEFINE_ERROR(InvalidArgument, Error);

// Fitting failures. The CLI maps these to exit code 3.
PIPESIM_DEFINE_ERROR(FitError, Error);
PIPESIM_DEFINE_ERROR(TooFewSamples, FitError);
PIPESIM_DEFINE_ERROR(SingularComponent, FitError);
PIPESIM_DEFINE_ERROR(FitDiverged, FitError);
PIPESIM_DEFINE_ERROR(InsufficientData, FitError);
PIPESIM_DEFINE_ERROR(NoConvergence, FitError);

PIPESIM_DEFINE_ERROR(RejectionExhausted, Error);

// Model file errors.
PIPESIM_DEFINE_ERROR(FormatVersionMismatch, Error);
PIPESIM_DEFINE_ERROR(CorruptModel, Error);

// Simulation setup and execution.
PIPESIM_DEFINE_ERROR(ConfigInvalid, Error);
PIPESIM_DEFINE_ERROR(ModelMissing, Error);
PIPESIM_DEFINE_ERROR(ExecutorMissing, Error);
PIPESIM_DEFINE_ERROR(PruneOutOfRange, Error);

// Traces.
PIPESIM_DEFINE_ERROR(IoFailure, Error);
PIPESIM_DEFINE_ERROR(InvalidRecord, Error);
PIPESIM_DEFINE_ERROR(MalformedTrace, Error);
PIPESIM_DEFINE_ERROR(TooFewPoints, Error);

#undef PIPESIM_DEFINE_ERROR

} // namespace pipesim
