#pragma once

#include <stdexcept>
#include <string>

namespace td {

// One error vocabulary for the whole library. The C API maps these 1:1 onto
// td_status values, so additions here need a mirror entry in tiledrive.h.
enum class Err {
  InvalidArg,
  NonDividingTiling,
  FieldOverflow,
  Parse,
  Validation,
  NoDoubleBuffer,
  UnsupportedShape,
  PeMismatch,
  DoubleBufferRequired,
  ShapeMismatch,
  EmptyRun,
  Deadlock,
  VerifyFailed,
  Json,
  Io,
};

const char* err_name(Err e);

class Error : public std::runtime_error {
public:
  Error(Err code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  Err code() const { return code_; }

private:
  Err code_;
};

[[noreturn]] inline void fail(Err code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace td
