#pragma once

#include <stdexcept>
#include <string>

namespace ckm {

// Malformed files, bad parameters, infeasible requests.
struct input_error : std::runtime_error {
    explicit input_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Solver condition blow-up or certificate that fails re-verification.
struct numeric_error : std::runtime_error {
    explicit numeric_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Enumeration budget exceeded.
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// A structural invariant that should hold by construction was violated.
struct internal_error : std::logic_error {
    explicit internal_error(const std::string& msg) : std::logic_error(msg) {}
};

// Randomized or iterative stage exhausted its budget without success.
struct algorithm_failure : std::runtime_error {
    explicit algorithm_failure(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw internal_error(msg);
}

inline void require_input(bool cond, const std::string& msg) {
    if (!cond) throw input_error(msg);
}

}  // namespace ckm
