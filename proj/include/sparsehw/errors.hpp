#pragma once

#include <stdexcept>
#include <string>

namespace sparsehw {

// All recoverable failures are reported as exceptions rooted here so callers
// (CLI, bindings) can map them to exit codes / Python exceptions uniformly.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

class dimension_error : public error {
public:
    explicit dimension_error(const std::string& what) : error(what) {}
};

class domain_error : public error {
public:
    explicit domain_error(const std::string& what) : error(what) {}
};

// Power iteration hit its iteration cap; carries the last iterate value.
class convergence_error : public error {
public:
    convergence_error(const std::string& what, double last_iterate)
        : error(what), last_iterate_(last_iterate) {}
    double last_iterate() const noexcept { return last_iterate_; }

private:
    double last_iterate_;
};

// The missing-data sample-size condition is vacuous (g2 == 0 because
// mu_X == 0 or mu_Y == 0); reported distinctly instead of guessing a fix.
class degenerate_condition_error : public error {
public:
    explicit degenerate_condition_error(const std::string& what) : error(what) {}
};

class config_error : public error {
public:
    explicit config_error(const std::string& what) : error(what) {}
};

}  // namespace sparsehw
