#pragma once

#include <stdexcept>
#include <string>

namespace ninconv {

// Base for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input: config keys, CLI arguments, missing manifest entries.
// The command-line front end maps this to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ninconv
