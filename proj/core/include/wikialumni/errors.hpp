#pragma once

#include <stdexcept>
#include <string>

namespace wikialumni {

// Base class for all pipeline errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed dump, unknown compression, unreadable source.
class DumpError : public Error {
 public:
  using Error::Error;
};

// Registry or dictionary data that violates a load-time invariant.
class RegistryError : public Error {
 public:
  using Error::Error;
};

// Filesystem failures while writing or reading intermediate artifacts.
class IoError : public Error {
 public:
  using Error::Error;
};

// A pageview or langlink lookup that could not be completed.
class FetchError : public Error {
 public:
  using Error::Error;
};

// Correlation requested over too few or degenerate entities.
class CorrelationError : public Error {
 public:
  using Error::Error;
};

// Invalid configuration or filter specification.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace wikialumni
