#pragma once

#include <stdexcept>
#include <string>

namespace statgames {

/// Incompatible spaces, dimensions or instance tags.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A matrix that has to be inverted (or have a log-determinant) is singular.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// An observation carries zero probability under the relevant pushforward.
struct SupportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed distribution, kernel or covariance data.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Two 2-cells (or games) that do not chain.
struct CompositionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// A loss model applied to an instance it is not defined on.
struct InstanceError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

}  // namespace statgames
