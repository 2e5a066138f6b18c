#pragma once

#include <stdexcept>
#include <string>

namespace rbg {

using InvalidArgument = std::invalid_argument;

/// A linear system lost positive definiteness or an iterative solve failed.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The snapshot offered to extend() is numerically inside the current span.
class BreakdownError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A certified budget asks for more work than the configured limits allow.
class ResourceError : public std::runtime_error {
 public:
  ResourceError(const std::string& what, long long m, long long n_train)
      : std::runtime_error(what), m_(m), n_train_(n_train) {}

  long long m() const { return m_; }
  long long training_size() const { return n_train_; }

 private:
  long long m_;
  long long n_train_;
};

}  // namespace rbg
