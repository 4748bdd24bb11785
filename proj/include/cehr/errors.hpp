#pragma once

#include <stdexcept>
#include <string>

namespace cehr {

/// Argument outside the mathematical domain of an operation.
class domain_error : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Malformed or inconsistent user input (bad JSON, schema violations).
/// `field` names the offending input path, e.g. "endpoint2.p0".
class invalid_input : public std::invalid_argument {
public:
    invalid_input(std::string field, const std::string& message)
        : std::invalid_argument(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// The observed non-fatal probability cannot be reached by any admissible
/// scale of the non-fatal marginal.
class infeasible_error : public std::runtime_error {
public:
    infeasible_error(const std::string& message, double target, double supremum)
        : std::runtime_error(message), target_(target), supremum_(supremum) {}

    double target() const noexcept { return target_; }
    double supremum() const noexcept { return supremum_; }

private:
    double target_;
    double supremum_;
};

/// Quadrature or root finding did not converge.
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cehr
