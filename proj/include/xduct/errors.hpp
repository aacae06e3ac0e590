#ifndef XDUCT_ERRORS_HPP
#define XDUCT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace xduct {

// Bad inputs: malformed files, out-of-range arguments, violated invariants.
// The CLI maps these to exit code 1.
class validation_error : public std::runtime_error {
public:
    explicit validation_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Failures of the numerics themselves (non-convergence, instability,
// singular systems). The CLI maps these to exit code 2.
class numeric_error : public std::runtime_error {
public:
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

class non_convergence_error : public numeric_error {
public:
    explicit non_convergence_error(const std::string& msg) : numeric_error(msg) {}
};

class singular_matrix_error : public numeric_error {
public:
    explicit singular_matrix_error(const std::string& msg) : numeric_error(msg) {}
};

class instability_error : public numeric_error {
public:
    explicit instability_error(const std::string& msg) : numeric_error(msg) {}
};

} // namespace xduct

#endif // XDUCT_ERRORS_HPP
