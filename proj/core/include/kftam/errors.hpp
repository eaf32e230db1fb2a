#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kftam {

enum class ErrorKind {
  kAngleOutOfRange,
  kEmptyHypothesisSet,
  kIndivisibleResolution,
  kInvalidArgument,
  kInvalidKeyframe,
  kDegenerateView,
  kInvalidRange,
  kEmptyFrameList,
  kLabelMismatch,
  kInsufficientOverlap,
  kTrackingLost,
  kNoValidPixels,
  kDomainError,
  kSingularCovariance,
  kNonPositiveDepth,
  kInsufficientOverlapInTime,
  kMissingIndexFile,
  kMalformedLine,
  kEmptyView,
  kIoError,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so callers (and the
/// CLI exit-code mapping) can dispatch without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class MalformedLineError : public Error {
 public:
  MalformedLineError(std::string file, int line, const std::string& detail);

  const std::string& file() const noexcept { return file_; }
  int line() const noexcept { return line_; }

 private:
  std::string file_;
  int line_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& what);

}  // namespace kftam
