#pragma once

#include <stdexcept>
#include <string>

namespace optocool {

/// Error families. Each maps to one CLI exit code.
enum class ErrorFamily {
  config = 2,
  regime = 3,
  numerical = 4,
  budget = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorFamily family, const std::string& what)
      : std::runtime_error(what), family_(family) {}
  ErrorFamily family() const noexcept { return family_; }
  int exit_code() const noexcept { return static_cast<int>(family_); }

 private:
  ErrorFamily family_;
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& w) : Error(ErrorFamily::config, w) {}
};

// Regime errors: the requested formula or engine is not defined at these parameters.
struct UnsupportedRegime : Error {
  explicit UnsupportedRegime(const std::string& w) : Error(ErrorFamily::regime, w) {}
};
struct HeatingRegime : Error {
  explicit HeatingRegime(const std::string& w) : Error(ErrorFamily::regime, w) {}
};
struct UnstableParams : Error {
  explicit UnstableParams(const std::string& w) : Error(ErrorFamily::regime, w) {}
};
struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorFamily::regime, w) {}
};
struct InvalidK : Error {
  explicit InvalidK(const std::string& w) : Error(ErrorFamily::regime, w) {}
};

// Numerical failures.
struct NoConvergence : Error {
  explicit NoConvergence(const std::string& w) : Error(ErrorFamily::numerical, w) {}
};
struct StepUnderflow : Error {
  explicit StepUnderflow(const std::string& w) : Error(ErrorFamily::numerical, w) {}
};
struct SingularSystem : Error {
  explicit SingularSystem(const std::string& w) : Error(ErrorFamily::numerical, w) {}
};
struct StepTooLarge : Error {
  explicit StepTooLarge(const std::string& w) : Error(ErrorFamily::numerical, w) {}
};
struct PhysicalityViolation : Error {
  explicit PhysicalityViolation(const std::string& w) : Error(ErrorFamily::numerical, w) {}
};

struct BudgetExceeded : Error {
  explicit BudgetExceeded(const std::string& w) : Error(ErrorFamily::budget, w) {}
};

}  // namespace optocool
