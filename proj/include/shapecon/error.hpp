#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace shapecon {

// Machine-readable error categories. The CLI prints the code name on failure.
enum class ErrorCode {
  kInvalidShape,
  kInsufficientPoints,
  kPrecondition,
  kIsolatedPoints,
  kModelState,
  kEmptyCorpus,
  kInvalidDepth,
  kEmptyObject,
  kCorruptModel,
  kShape,
  kTooFewSamples,
  kInvalidSpace,
  kMissingLabel,
  kInvalidTask,
  kStratification,
  kInvalidParameter,
  kStageDependency,
  kValidation,
  kIo,
  kParse,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidShape: return "invalid-shape";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kPrecondition: return "precondition";
    case ErrorCode::kIsolatedPoints: return "isolated-points";
    case ErrorCode::kModelState: return "model-state";
    case ErrorCode::kEmptyCorpus: return "empty-corpus";
    case ErrorCode::kInvalidDepth: return "invalid-depth";
    case ErrorCode::kEmptyObject: return "empty-object";
    case ErrorCode::kCorruptModel: return "corrupt-model";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kTooFewSamples: return "too-few-samples";
    case ErrorCode::kInvalidSpace: return "invalid-space";
    case ErrorCode::kMissingLabel: return "missing-label";
    case ErrorCode::kInvalidTask: return "invalid-task";
    case ErrorCode::kStratification: return "stratification";
    case ErrorCode::kInvalidParameter: return "invalid-parameter";
    case ErrorCode::kStageDependency: return "stage-dependency";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

}  // namespace shapecon
