#pragma once

#include <stdexcept>
#include <string>

namespace levylab {

// Numerical failure (quadrature non-convergence, NaN/overflow in an
// integrator, divergent loss). Maps to CLI exit code 3.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& what) : std::runtime_error(what) {}
};

// A precondition of a documented operation contract was violated at runtime
// (e.g. classify_exit called on an interior point, unbounded intensity).
struct contract_violation : std::logic_error {
    explicit contract_violation(const std::string& what) : std::logic_error(what) {}
};

struct insufficient_data_error : std::invalid_argument {
    explicit insufficient_data_error(const std::string& what) : std::invalid_argument(what) {}
};

struct degenerate_data_error : std::invalid_argument {
    explicit degenerate_data_error(const std::string& what) : std::invalid_argument(what) {}
};

struct capacity_error : std::invalid_argument {
    explicit capacity_error(const std::string& what) : std::invalid_argument(what) {}
};

}  // namespace levylab
