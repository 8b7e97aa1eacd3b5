#pragma once

#include <stdexcept>
#include <string>

namespace vti {

// Invalid argument to a public operation: size mismatch, bad range, unknown enum.
class invalid_input : public std::invalid_argument {
public:
    explicit invalid_input(const std::string& what) : std::invalid_argument(what) {}
};

// Filesystem or file-format failure.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

// An iterative solve did not reach tolerance, or produced non-finite values.
class solver_failure : public std::runtime_error {
public:
    explicit solver_failure(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace vti
