#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace stochfv {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A solver state picked up a NaN or Inf. Carries the (level, sample)
// coordinates of the offending draw when known; -1 means "not applicable".
class NonFiniteError : public Error {
 public:
  explicit NonFiniteError(const std::string& what, std::int64_t level = -1,
                          std::int64_t sample = -1)
      : Error(what), level_(level), sample_(sample) {}
  std::int64_t level() const { return level_; }
  std::int64_t sample() const { return sample_; }

 private:
  std::int64_t level_;
  std::int64_t sample_;
};

class InvalidParamError : public Error {
 public:
  using Error::Error;
};

// Two fields/ensembles do not live on compatible grids.
class IncompatibleGridsError : public Error {
 public:
  using Error::Error;
};

// A correlation offset is not a grid multiple within tolerance.
class OffsetNotOnGridError : public Error {
 public:
  using Error::Error;
};

// Empirical measures cannot be matched one-to-one (unequal member counts
// or non-uniform weights).
class UnequalSupportError : public Error {
 public:
  using Error::Error;
};

// Problem size exceeds a hard cap (e.g. assignment solver member count).
class TooLargeError : public Error {
 public:
  using Error::Error;
};

class InsufficientSamplesError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Config file rejected; message carries the offending field path.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Reference cache entry failed its checksum or manifest check.
class CacheCorruptError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stochfv
