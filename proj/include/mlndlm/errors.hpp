#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mlndlm {

/// Input that violates a model or dataset invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical breakdown (non-finite value, lost definiteness, ...).
/// `time_index` is the global time index where it happened, or -1.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what, std::int64_t time_index = -1)
      : std::runtime_error(what), time_index_(time_index) {}
  std::int64_t time_index() const noexcept { return time_index_; }

 private:
  std::int64_t time_index_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlndlm
