#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace emx {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A required input file is missing or unreadable.
class LoadError : public Error {
 public:
  LoadError(std::string path, const std::string& what)
      : Error(what + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// Input data violates a structural invariant (dangling ids, duplicate names...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or training input.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Failure talking to, or reported by, a matcher. `stage` names how far a
/// long computation got before the failure (e.g. "granularity 4") so callers
/// can resume from there.
class MatcherError : public Error {
 public:
  MatcherError(const std::string& what, std::string request_id, bool retryable, std::string stage = {})
      : Error(stage.empty() ? what : what + " (at " + stage + ")"),
        message_(what),
        request_id_(std::move(request_id)),
        retryable_(retryable),
        stage_(std::move(stage)) {}

  const std::string& request_id() const noexcept { return request_id_; }
  bool retryable() const noexcept { return retryable_; }
  const std::string& stage() const noexcept { return stage_; }

  MatcherError at_stage(std::string stage) const {
    return MatcherError(message_, request_id_, retryable_, std::move(stage));
  }

 private:
  std::string message_;
  std::string request_id_;
  bool retryable_;
  std::string stage_;
};

}  // namespace emx
