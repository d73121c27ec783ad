#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace samplan {

inline constexpr const char* kVersion = "0.1.0";

// Error taxonomy. The CLI maps these onto exit codes: ConfigError -> 2,
// everything else unexpected -> 4.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct AlignmentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// A fit/metric cannot be computed on this input (single-class outcomes,
// constant risks, ...). The engine records such draws as missing.
struct DegenerateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-fatal findings accumulated during a run (small populations, high
// missing-draw rates, ...). `--strict` escalates them to exit code 3.
using Warnings = std::vector<std::string>;

}  // namespace samplan
