#include "kftam/errors.hpp"

namespace kftam {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kAngleOutOfRange: return "AngleOutOfRange";
    case ErrorKind::kEmptyHypothesisSet: return "EmptyHypothesisSet";
    case ErrorKind::kIndivisibleResolution: return "IndivisibleResolution";
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kInvalidKeyframe: return "InvalidKeyframe";
    case ErrorKind::kDegenerateView: return "DegenerateView";
    case ErrorKind::kInvalidRange: return "InvalidRange";
    case ErrorKind::kEmptyFrameList: return "EmptyFrameList";
    case ErrorKind::kLabelMismatch: return "LabelMismatch";
    case ErrorKind::kInsufficientOverlap: return "InsufficientOverlap";
    case ErrorKind::kTrackingLost: return "TrackingLost";
    case ErrorKind::kNoValidPixels: return "NoValidPixels";
    case ErrorKind::kDomainError: return "DomainError";
    case ErrorKind::kSingularCovariance: return "SingularCovariance";
    case ErrorKind::kNonPositiveDepth: return "NonPositiveDepth";
    case ErrorKind::kInsufficientOverlapInTime: return "InsufficientOverlapInTime";
    case ErrorKind::kMissingIndexFile: return "MissingIndexFile";
    case ErrorKind::kMalformedLine: return "MalformedLine";
    case ErrorKind::kEmptyView: return "EmptyView";
    case ErrorKind::kIoError: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

MalformedLineError::MalformedLineError(std::string file, int line, const std::string& detail)
    : Error(ErrorKind::kMalformedLine,
            file + ":" + std::to_string(line) + ": " + detail),
      file_(std::move(file)),
      line_(line) {}

void raise(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace kftam
