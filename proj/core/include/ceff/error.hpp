#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ceff {

enum class ErrorKind {
  // rc-core
  MalformedDocument,
  NonTreeTopology,
  NoDriver,
  MultipleDrivers,
  NegativeElement,
  // mor-pi
  NonPhysicalMoments,
  // transient-sim
  NoCrossing,
  // graph-builder
  MissingLabel,
  OutOfRangeLabel,
  EmptySplit,
  // gat-infer
  ShapeMismatch,
  HashMismatch,
  VersionUnsupported,
  FeatureOrderMismatch,
  // evaluation
  LengthMismatch,
  // plumbing
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries a machine-checkable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ceff
