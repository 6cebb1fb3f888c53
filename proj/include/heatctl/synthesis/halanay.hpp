#pragma once

#include <cmath>

#include "heatctl/error.hpp"

namespace heatctl {

inline constexpr double halanay_tol = 1e-10;

// g(d) = d - delta0 + delta1 exp(2 d h); increasing, g(0) < 0.
inline double halanay_residual(double d, double delta0, double delta1, double h) {
    return d - delta0 + delta1 * std::exp(2.0 * d * h);
}

// Unique root of d = delta0 - delta1 exp(2 d h) in (0, delta0 - delta1].
inline double halanay_rate(double delta0, double delta1, double h) {
    if (!(delta1 > 0.0 && delta0 > delta1)) {
        throw argument_error("halanay_rate needs delta0 > delta1 > 0");
    }
    if (!(h >= 0.0)) {
        throw argument_error("halanay_rate needs h >= 0");
    }
    if (h == 0.0) {
        return delta0 - delta1;
    }
    double lo = 0.0;
    double hi = delta0 - delta1;
    while (hi - lo > halanay_tol) {
        const double mid = 0.5 * (lo + hi);
        if (halanay_residual(mid, delta0, delta1, h) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace heatctl
