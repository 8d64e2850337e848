#pragma once

#include <stdexcept>
#include <string>

namespace hdbeta {

/// Raised for malformed or inconsistent user input (bad CSV, unbalanced
/// panel, invalid configuration). The CLI maps it to exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hdbeta
