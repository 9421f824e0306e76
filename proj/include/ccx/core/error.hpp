#pragma once

#include <stdexcept>
#include <string>

namespace ccx {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MalformedPayload : public Error {
 public:
  explicit MalformedPayload(const std::string& what) : Error("malformed payload: " + what) {}
};

}  // namespace ccx
