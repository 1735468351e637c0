#include "error.hpp"

namespace dfs {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::InvalidData: return "invalid-data";
    case ErrorCode::Numerical: return "numerical-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::CorruptData: return "corrupt-data";
    case ErrorCode::UnsupportedVersion: return "unsupported-version";
    case ErrorCode::UndefinedMetric: return "undefined-metric";
    case ErrorCode::Internal: return "internal-error";
  }
  return "internal-error";
}

}  // namespace dfs
