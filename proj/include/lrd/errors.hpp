#pragma once

#include <stdexcept>
#include <string>

namespace lrd {

// Invalid argument or out-of-domain parameter. CLI maps this to exit code 2.
struct domain_error : std::runtime_error {
    explicit domain_error(const std::string& what) : std::runtime_error(what) {}
};

// Enumeration or codebook would exceed a configured budget. Exit code 3.
struct size_error : std::runtime_error {
    explicit size_error(const std::string& what) : std::runtime_error(what) {}
};

// A covering/codebook could not be built or verified. Exit code 3.
struct construction_error : std::runtime_error {
    explicit construction_error(const std::string& what) : std::runtime_error(what) {}
};

// Iterative solver ran out of iterations; carries the last iterate.
struct convergence_error : std::runtime_error {
    double last_iterate;
    convergence_error(const std::string& what, double last)
        : std::runtime_error(what), last_iterate(last) {}
};

// File read/write failure. Exit code 4.
struct io_error : std::runtime_error {
    explicit io_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lrd
