#pragma once

#include <stdexcept>
#include <string>

namespace kaclab {

// exit code 2 at the CLI
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// exit code 3
struct SimulationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// exit code 4
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace kaclab
