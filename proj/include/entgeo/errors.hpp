#pragma once

#include <functional>
#include <iostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace entgeo {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operands live in different algebras (block structures differ).
class AlgebraMismatch : public Error {
 public:
  using Error::Error;
};

/// A precondition on the value of an argument does not hold.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// An iterative solver ran out of iterations before meeting its tolerance.
class SolverBudgetExhausted : public Error {
 public:
  SolverBudgetExhausted(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

using WarningHandler = std::function<void(std::string_view)>;

namespace detail {
inline WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) {
    std::cerr << "entgeo: warning: " << msg << '\n';
  };
  return handler;
}
}  // namespace detail

/// Replace the sink for non-fatal diagnostics; returns the previous handler.
inline WarningHandler set_warning_handler(WarningHandler handler) {
  return std::exchange(detail::warning_handler(), std::move(handler));
}

inline void warn(std::string_view msg) {
  if (auto& h = detail::warning_handler()) h(msg);
}

}  // namespace entgeo
