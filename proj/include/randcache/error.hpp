#pragma once

#include <stdexcept>
#include <string>

namespace randcache {

/// Invalid argument to a model operation (negative density, bad simplex, ...).
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed data, e.g. a request log referencing a file outside [1, N].
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator was asked for a profile with zero observed samples.
class NoSamplesError : public std::runtime_error {
 public:
  NoSamplesError() : std::runtime_error("no samples: estimator undefined") {}
  using std::runtime_error::runtime_error;
};

/// Requested accuracy lies at or below the transfer-learning floor.
class InfeasibleError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Experiment configuration problem. `path` names the offending field.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string path, const std::string& what)
      : std::runtime_error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace randcache
