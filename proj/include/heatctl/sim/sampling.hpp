#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "heatctl/error.hpp"

namespace heatctl {

// Event instants 0 = s_0 < s_1 < ... of one sampling channel.
using Instants = std::vector<double>;

inline constexpr double instant_tol = 1e-12;

// Uniform double in [0, 1) from the top 53 bits, identical on every platform.
inline double unit_draw(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline Instants uniform_instants(double horizon, double step) {
    if (!(step > 0.0) || !(horizon >= 0.0)) {
        throw argument_error("uniform_instants: need step > 0 and horizon >= 0");
    }
    Instants out;
    for (long k = 0;; ++k) {
        const double t = static_cast<double>(k) * step;
        if (t > horizon + instant_tol) {
            break;
        }
        out.push_back(t);
    }
    return out;
}

// Increments drawn uniformly from [0.5, 1] * bound.
inline Instants jittered_instants(double horizon, double bound, std::uint64_t seed) {
    if (!(bound > 0.0) || !(horizon >= 0.0)) {
        throw argument_error("jittered_instants: need bound > 0 and horizon >= 0");
    }
    std::mt19937_64 rng(seed);
    Instants out{0.0};
    while (out.back() < horizon) {
        out.push_back(out.back() + bound * (0.5 + 0.5 * unit_draw(rng)));
    }
    return out;
}

// Starts at 0, strictly increasing, increments at most `bound`.
inline void validate_instants(const Instants& s, double bound, const std::string& name) {
    if (s.empty() || s.front() != 0.0) {
        throw argument_error(name + ": sampling sequence must start at 0");
    }
    for (std::size_t k = 1; k < s.size(); ++k) {
        const double inc = s[k] - s[k - 1];
        if (!(inc > 0.0)) {
            throw argument_error(name + ": sampling sequence is not increasing at index " + std::to_string(k));
        }
        if (inc > bound * (1.0 + 1e-12) + instant_tol) {
            throw argument_error(name + ": increment " + std::to_string(inc) + " at index " + std::to_string(k) +
                                 " exceeds the declared bound " + std::to_string(bound));
        }
    }
}

inline double smallest_increment(const Instants& s) {
    double m = INFINITY;
    for (std::size_t k = 1; k < s.size(); ++k) {
        m = std::min(m, s[k] - s[k - 1]);
    }
    return m;
}

} // namespace heatctl
