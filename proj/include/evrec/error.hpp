#pragma once

#include <stdexcept>
#include <string>

namespace evrec {

enum class ErrorCode {
  InvalidArgument,
  Io,
  MalformedLine,
  OutOfBounds,
  NonMonotonicTime,
  BadMagic,
  DimensionMismatch,
  UnsupportedFormat,
  TruncatedData,
  CountMismatch,
  NonPositiveDt,
  EmptyPacket,
  BadTimestamps,
  LengthMismatch,
  BreakdownNonSPD,
  NonPositiveMu,
  DenoiserFailure,
  ChildSpawnError,
  ProtocolError,
  Timeout,
  MissingFlow,
  OddDimensions,
};

const char* to_string(ErrorCode code);

/// Library-wide exception. `line()` is the 1-based input line for parse
/// errors and -1 otherwise; `detail()` is the numeric payload (cluster id for
/// MissingFlow), also -1 when unused.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, long line = -1, long detail = -1);

  ErrorCode code() const noexcept { return code_; }
  long line() const noexcept { return line_; }
  long detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  long line_;
  long detail_;
};

}  // namespace evrec
