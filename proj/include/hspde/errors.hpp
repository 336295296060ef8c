#pragma once

#include <stdexcept>
#include <string>

namespace hspde {

/// Raised when a computation produces non-finite values or an iterative
/// method fails to converge. Precondition violations use the standard
/// std::invalid_argument / std::out_of_range types instead.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace hspde
