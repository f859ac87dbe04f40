#pragma once

#include <stdexcept>
#include <string>

namespace c2rnet {

// Bad input data, bad configuration, contract violations on user-supplied
// arguments. The CLI maps this to exit code 1; everything else to 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace c2rnet
