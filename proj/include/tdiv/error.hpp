#pragma once

#include <stdexcept>
#include <string>

namespace tdiv {

// Raised for malformed or unreadable user input (files, traces, flags).
// The CLI maps it to exit code 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tdiv
