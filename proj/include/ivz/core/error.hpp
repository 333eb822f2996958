#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ivz {

enum class ErrorCode {
  Dimension,
  Config,
  Input,
  InputTooShort,
  GraphIntegrity,
  Vocabulary,
  DegenerateGraph,
  IterationLimit,
  NonFinite,
  BadMagic,
  UnsupportedVersion,
  Truncated,
  MissingTensor,
  UnknownTensor,
  Io,
  NotFound,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Dimension: return "dimension";
    case ErrorCode::Config: return "config";
    case ErrorCode::Input: return "input";
    case ErrorCode::InputTooShort: return "input-too-short";
    case ErrorCode::GraphIntegrity: return "graph-integrity";
    case ErrorCode::Vocabulary: return "vocabulary";
    case ErrorCode::DegenerateGraph: return "degenerate-graph";
    case ErrorCode::IterationLimit: return "iteration-limit";
    case ErrorCode::NonFinite: return "non-finite";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::UnsupportedVersion: return "unsupported-version";
    case ErrorCode::Truncated: return "truncated";
    case ErrorCode::MissingTensor: return "missing-tensor";
    case ErrorCode::UnknownTensor: return "unknown-tensor";
    case ErrorCode::Io: return "io";
    case ErrorCode::NotFound: return "not-found";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + " error: " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace ivz
