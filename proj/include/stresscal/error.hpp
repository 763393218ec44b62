#pragma once

#include <stdexcept>
#include <string>

namespace stresscal {

// Failure categories. The numeric values are mirrored by sc_status in the C API.
enum class ErrorKind {
  usage = 1,
  config,
  schema,
  parse,
  io,
  empty_input,
  insufficient_data,
  parameter,
  shape,
  incompatible_format,
  protocol,
  contamination,
  policy,
};

const char* error_kind_name(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace stresscal
