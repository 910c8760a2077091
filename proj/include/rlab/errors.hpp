#pragma once

#include <stdexcept>
#include <string>

namespace rlab {

// Bad input shape or a violated operation precondition.
struct PreconditionError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

// Grid, sample or node count would exceed the configured cap.
struct BudgetError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Newton-type iteration failed; usually the point is outside the chart.
struct ConvergenceError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Point or offset outside the domain of a parametrisation.
struct DomainError : std::out_of_range
{
  using std::out_of_range::out_of_range;
};

// Malformed experiment configuration.
struct ConfigError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string &msg)
{
  if (!ok) throw PreconditionError(msg);
}

} // namespace rlab
