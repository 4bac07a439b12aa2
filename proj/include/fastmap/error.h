#pragma once

#include <stdexcept>
#include <string>

namespace fastmap {

// Every recoverable failure in the library is reported with this type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fastmap
