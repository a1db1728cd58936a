#pragma once

#include <stdexcept>
#include <string>

namespace d3stereo {

enum class ErrorCode {
  // io
  MalformedHeader,
  MalformedInput,
  UnexpectedEof,
  TrailingData,
  ColorPfmUnsupported,
  IoFailure,
  BadMagic,
  UnsupportedVersion,
  NonHalvingResolution,
  NonFiniteFeature,
  UnsupportedFormat,
  DecodeError,
  // numeric stages
  DimensionMismatch,
  TooSmallForDepth,
  InsufficientCandidates,
  DiffusionDiverged,
  PatchOutOfBounds,
  InsufficientSeeds,
  DegenerateFit,
  NoValidPixels,
  NoValidWindows,
  ImageTooSmall,
  InvalidConfig,
};

const char* to_string(ErrorCode code);

// All library failures surface as this exception; `code()` is the stable
// discriminator, `what()` carries a human-readable message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  // Same error tagged with the pipeline stage that raised it.
  Error(const Error& inner, const std::string& stage)
      : std::runtime_error(stage + ": " + inner.what()),
        code_(inner.code_),
        message_(inner.message_),
        stage_(stage) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string message_;
  std::string stage_;
};

}  // namespace d3stereo
