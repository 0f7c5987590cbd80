#pragma once

#include <stdexcept>
#include <string>

namespace hgr {

enum class ErrorKind {
  InvalidInput,
  NumericalFailure,
  NotSPD,
  RankDeficient,
  ParseError,
  ConfigError,
};

const char* to_string(ErrorKind kind);

/// Exception carrying a machine-checkable category alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace hgr
