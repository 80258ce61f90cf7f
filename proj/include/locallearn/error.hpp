#pragma once

#include <stdexcept>
#include <string>

namespace locallearn {

/// Raised for violated preconditions and malformed inputs across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw Error(message);
}

}  // namespace locallearn
