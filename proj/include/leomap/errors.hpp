#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace leomap {

enum class Errc {
  WrongPrefixLength,
  PrefixTooShort,
  NotAGateway,
  NonDecimalDigits,
  OctetOverflow,
  OutOfRange,
  EmptyFeed,
  UnknownCountry,
  MalformedPopCode,
  AdapterUnavailable,
  InvalidTopology,
  UnknownTarget,
  NotReached,
  Unreachable,
  MatrixShapeMismatch,
  SchemaMismatch,
  InvalidArgument,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) {
  throw Error(code, what);
}

/// Per-line diagnostic from a line-oriented input (feed row, dataset record).
struct LineDiagnostic {
  std::size_t line_no = 0;
  std::string message;
};

}  // namespace leomap
