#pragma once

#include <stdexcept>
#include <string>

namespace heatctl {

// Bad argument to a library call (out-of-range index, wrong dimension, ...).
class argument_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Configuration that violates a modelling assumption, e.g. a vanishing
// output coefficient. `index` names the offending mode when there is one.
class config_error : public std::runtime_error {
public:
    explicit config_error(const std::string& what, int index = 0)
        : std::runtime_error(what), index_(index) {}
    int index() const noexcept { return index_; }

private:
    int index_;
};

class synthesis_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class analysis_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class simulation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Raised when a feasibility probe ends without a verdict. Carries the probed
// sampling bound so sweeps can report where it happened.
class inconclusive_error : public std::runtime_error {
public:
    inconclusive_error(const std::string& what, double probe)
        : std::runtime_error(what), probe_(probe) {}
    double probe() const noexcept { return probe_; }

private:
    double probe_;
};

} // namespace heatctl
