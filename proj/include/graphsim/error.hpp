#pragma once

#include <stdexcept>
#include <string>

namespace graphsim {

// Exception families map one-to-one onto CLI exit codes.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace graphsim
