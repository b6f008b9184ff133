#pragma once

#include <stdexcept>
#include <string>

namespace rclust {

enum class ErrorKind {
  Usage,       // bad flags or parameters
  Format,      // malformed input file
  Data,        // well-formed file with invalid contents
  Validation,  // segmentation invariants violated
  Io,          // file could not be opened or written
  Compute,     // numerical or resource failure during a run
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace rclust
