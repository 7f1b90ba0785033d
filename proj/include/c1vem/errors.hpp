#pragma once

#include <stdexcept>
#include <string>

namespace c1vem {

/// Malformed input stream (mesh file, config, expression).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mesh connectivity is not a valid conforming polygonal partition.
class TopologyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Degenerate element data (zero area, collinear vertices, singular local system).
class GeometryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid run configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Nonlinear or linear solver failure.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace c1vem
