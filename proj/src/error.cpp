#include "hgr/error.hpp"

namespace hgr {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::NumericalFailure: return "NumericalFailure";
    case ErrorKind::NotSPD: return "NotSPD";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace hgr
