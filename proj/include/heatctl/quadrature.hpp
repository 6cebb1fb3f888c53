#pragma once

#include <cstddef>

#include "heatctl/error.hpp"

namespace heatctl {

// Number of subintervals used for every inner product on [0, 1].
inline constexpr int default_quadrature_intervals = 2000;

// Composite Simpson rule on a uniform grid; `intervals` must be even.
template <typename F>
double simpson(F&& f, double lo, double hi, int intervals = default_quadrature_intervals) {
    if (intervals < 2 || intervals % 2 != 0) {
        throw argument_error("simpson: interval count must be even and >= 2");
    }
    const double h = (hi - lo) / intervals;
    double odd = 0.0;
    double even = 0.0;
    for (int k = 1; k < intervals; ++k) {
        const double v = f(lo + k * h);
        if (k % 2 == 1) {
            odd += v;
        } else {
            even += v;
        }
    }
    return h / 3.0 * (f(lo) + 4.0 * odd + 2.0 * even + f(hi));
}

// <f, g> on L2(0, 1).
template <typename F, typename G>
double inner_product(F&& f, G&& g, int intervals = default_quadrature_intervals) {
    return simpson([&](double x) { return f(x) * g(x); }, 0.0, 1.0, intervals);
}

} // namespace heatctl
