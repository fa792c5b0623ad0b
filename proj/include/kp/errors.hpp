#ifndef KP_ERRORS_HPP
#define KP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace kp {

/// Raised when the coefficient q = a*s + b falls within the degeneracy
/// tolerance of zero.  Carries the time and the offending value.
class DegenerateQError : public std::runtime_error {
public:
  DegenerateQError(double t, double q, const std::string& what)
      : std::runtime_error(what), t_(t), q_(q) {}
  double t() const { return t_; }
  double q() const { return q_; }

private:
  double t_;
  double q_;
};

/// Adaptive step size fell below h_min.
class StepUnderflowError : public std::runtime_error {
public:
  StepUnderflowError(double t, double h, const std::string& what)
      : std::runtime_error(what), t_(t), h_(h) {}
  double t() const { return t_; }
  double h() const { return h_; }

private:
  double t_;
  double h_;
};

/// Parameter combination the solver declines to handle (e.g. b = 0, where
/// the first-order functional has no closed form and u == 0 is not a
/// solution of the equation).
class UnsupportedCaseError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed experiment or sweep configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace kp

#endif // KP_ERRORS_HPP
