#include "evrec/error.hpp"

namespace evrec {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NonMonotonicTime: return "NonMonotonicTime";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::EmptyPacket: return "EmptyPacket";
    case ErrorCode::BadTimestamps: return "BadTimestamps";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BreakdownNonSPD: return "BreakdownNonSPD";
    case ErrorCode::NonPositiveMu: return "NonPositiveMu";
    case ErrorCode::DenoiserFailure: return "DenoiserFailure";
    case ErrorCode::ChildSpawnError: return "ChildSpawnError";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::Timeout: return "Timeout";
    case ErrorCode::MissingFlow: return "MissingFlow";
    case ErrorCode::OddDimensions: return "OddDimensions";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message, long line, long detail)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      line_(line),
      detail_(detail) {}

}  // namespace evrec
