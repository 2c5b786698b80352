#ifndef EPCT_ERRORS_HPP
#define EPCT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace epct {

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A problem instance violates one of its construction invariants.
class InvalidScenario : public Error {
  public:
    using Error::Error;
};

/// An operation was called outside its domain (k >= 0, gamma = 0, ...).
class PreconditionError : public Error {
  public:
    using Error::Error;
};

/// Malformed configuration or data file.
class ConfigError : public Error {
  public:
    using Error::Error;
};

} // namespace epct

#endif
