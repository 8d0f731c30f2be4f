#pragma once

#include <stdexcept>
#include <string>

namespace fiberphase {

/// Error categories. The CLI maps these onto its exit-code contract:
/// config/input -> 2, numerical -> 3, singularity/geometry -> 4.
enum class ErrorKind {
    invalid_input,
    config,
    numerical,
    singularity,
    geometry,
    chart,
    structure,
    internal,
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    int exit_code() const noexcept {
        switch (kind_) {
        case ErrorKind::invalid_input:
        case ErrorKind::config:
        case ErrorKind::structure: return 2; // bad input data, including symmetry violations
        case ErrorKind::numerical:
        case ErrorKind::internal: return 3;
        case ErrorKind::singularity:
        case ErrorKind::geometry:
        case ErrorKind::chart: return 4;
        }
        return 3;
    }

  private:
    ErrorKind kind_;
};

inline Error invalid_input_error(std::string msg) { return Error(ErrorKind::invalid_input, std::move(msg)); }
inline Error config_error(std::string msg) { return Error(ErrorKind::config, std::move(msg)); }
inline Error numerical_error(std::string msg) { return Error(ErrorKind::numerical, std::move(msg)); }
inline Error singularity_error(std::string msg) { return Error(ErrorKind::singularity, std::move(msg)); }
inline Error geometry_error(std::string msg) { return Error(ErrorKind::geometry, std::move(msg)); }
inline Error chart_error(std::string msg) { return Error(ErrorKind::chart, std::move(msg)); }
inline Error structure_error(std::string msg) { return Error(ErrorKind::structure, std::move(msg)); }
inline Error internal_error(std::string msg) { return Error(ErrorKind::internal, std::move(msg)); }

} // namespace fiberphase
