#pragma once

#include <stdexcept>
#include <string>

namespace chronoscale {

/// Failure categories. The CLI maps them onto its exit-code contract.
enum class ErrorKind {
  InvalidArgument,  // malformed input, schema violation, dimension mismatch
  NotInScale,       // a time that does not belong to the time scale
  Refusal,          // a solver hypothesis fails (contraction, syndeticity, ...)
  Divergence,       // partial sums blew past the overflow guard
  Numerical         // singular matrices, non-convergence, uncertifiable tails
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NotInScale: return "not-in-scale";
    case ErrorKind::Refusal: return "refusal";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::Numerical: return "numerical";
  }
  return "unknown";
}

}  // namespace chronoscale
