#pragma once

#include <stdexcept>
#include <string>

namespace opf {

/// Data or invariant problem in an input document (case file, model file,
/// malformed program). Carries a field path where one is known.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A well-posed problem with no feasible point (demand outside capacity,
/// robustly infeasible sample set, ...). `hint` names the constraint family
/// that blocked, when the solver could tell.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& msg, std::string hint = {})
        : std::runtime_error(msg), hint_(std::move(hint)) {}
    const std::string& hint() const { return hint_; }

private:
    std::string hint_;
};

/// Numerical breakdown distinct from infeasibility: factorization failure,
/// Newton divergence, singular Jacobian.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / IO problem.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace opf
