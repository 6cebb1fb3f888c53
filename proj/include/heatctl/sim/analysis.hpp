#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/sim/trajectory.hpp"

namespace heatctl {

// sum lambda_n h_n^2 = ||h'||^2 for h = sum h_n phi_n
inline double h1_seminorm_sq(const Vector& coeffs) {
    double s = 0.0;
    for (int n = 1; n <= coeffs.size(); ++n) {
        s += eigenvalue(n) * coeffs(n - 1) * coeffs(n - 1);
    }
    return s;
}

// sum (1 + lambda_n) h_n^2
inline double h1_norm_sq(const Vector& coeffs) { return h1_seminorm_sq(coeffs) + coeffs.squaredNorm(); }

inline double h1_norm(const Vector& coeffs) { return std::sqrt(h1_norm_sq(coeffs)); }

// z(x) = sum w_n phi_n(x) + (1 - x) u
inline Vector reconstruct_z(const Vector& w, double u, const Vector& xs) {
    Vector z(xs.size());
    for (int i = 0; i < xs.size(); ++i) {
        double s = (1.0 - xs(i)) * u;
        for (int n = 1; n <= w.size(); ++n) {
            s += w(n - 1) * eigenpair(n).phi(xs(i));
        }
        z(i) = s;
    }
    return z;
}

inline Vector reconstruct_z(const Trajectory& t, std::size_t sample, const Vector& xs) {
    if (sample >= t.size()) {
        throw argument_error("reconstruct_z: sample index out of range");
    }
    return reconstruct_z(t.w.row(static_cast<Eigen::Index>(sample)).transpose(), t.u[sample], xs);
}

// Minus half the least-squares slope of log(values) against times over the
// trailing `window` of time, so exp(-2 r t) data returns r.
inline double decay_rate_estimate(const std::vector<double>& times, const std::vector<double>& values, double window) {
    if (times.size() != values.size() || times.empty()) {
        throw analysis_error("decay_rate_estimate: times and values must be non-empty and equal length");
    }
    if (!(window > 0.0)) {
        throw analysis_error("decay_rate_estimate: window must be positive");
    }
    const double start = times.back() - window;
    double st = 0.0, sl = 0.0, stt = 0.0, stl = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        if (times[k] < start - 1e-12) {
            continue;
        }
        if (!(values[k] > 0.0)) {
            throw analysis_error("decay_rate_estimate: nonpositive sample at t = " + std::to_string(times[k]));
        }
        const double l = std::log(values[k]);
        st += times[k];
        sl += l;
        stt += times[k] * times[k];
        stl += times[k] * l;
        ++count;
    }
    if (count < 2) {
        throw analysis_error("decay_rate_estimate: fewer than two samples in the window");
    }
    const double denom = count * stt - st * st;
    if (!(denom > 0.0)) {
        throw analysis_error("decay_rate_estimate: degenerate time samples");
    }
    const double slope = (count * stl - st * sl) / denom;
    return -0.5 * slope;
}

// ||w||_{H1}^2 + u^2 along a trajectory.
inline std::vector<double> state_energy(const Trajectory& t) {
    std::vector<double> q(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) {
        q[k] = t.h1_sq[k] + t.usq[k];
    }
    return q;
}

inline double decay_rate_estimate(const Trajectory& t, double window) {
    return decay_rate_estimate(t.times, state_energy(t), window);
}

} // namespace heatctl
