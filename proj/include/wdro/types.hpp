#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>

namespace wdro {

using Vector = Eigen::VectorXd;

/// Malformed arguments: dimension mismatches, negative radii, bad tolerances.
class input_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A brute-force routine was asked to run beyond its grid blow-up guard.
class scale_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-finite values or a broken internal invariant.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class config_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_input(bool condition, const std::string& message) {
    if (!condition) throw input_error(message);
}

inline void require_dim(Eigen::Index got, Eigen::Index expected, const char* what) {
    if (got != expected)
        throw input_error(std::string(what) + ": dimension " + std::to_string(got) +
                          ", expected " + std::to_string(expected));
}

} // namespace wdro
