#pragma once

#include <iomanip>
#include <ostream>
#include <sstream>
#include <vector>

#include "heatctl/linalg.hpp"

namespace heatctl {

// Stored samples of a closed-loop run. Row k of `w`/`what` belongs to times[k].
struct Trajectory {
    int M = 0;
    int N = 0;
    std::vector<double> times;
    Matrix w;    // samples x M
    Matrix what; // samples x N
    std::vector<double> u;
    std::vector<double> v;
    std::vector<double> y;
    std::vector<double> h1_sq;   // sum (1 + lambda_n) w_n^2
    std::vector<double> usq;
    std::vector<double> zeta;    // sum_{N < n <= M} c_n w_n
    std::vector<double> tail_energy; // sum_{n > N} lambda_n w_n^2
    std::vector<double> z_h1_sq;
    std::vector<double> lyapunov; // empty unless a P matrix was supplied

    std::size_t size() const { return times.size(); }

    // e_n = w_n - what_n, n <= N
    Matrix error() const { return w.leftCols(N) - what; }
};

inline std::string format_number(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}

// Header: time,u,v,y,h1_sq,usq,zeta,w_1..w_M,what_1..what_N
inline void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
    os << "time,u,v,y,h1_sq,usq,zeta";
    for (int n = 1; n <= t.M; ++n) {
        os << ",w_" << n;
    }
    for (int n = 1; n <= t.N; ++n) {
        os << ",what_" << n;
    }
    os << "\r\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << format_number(t.times[k]) << ',' << format_number(t.u[k]) << ',' << format_number(t.v[k]) << ','
           << format_number(t.y[k]) << ',' << format_number(t.h1_sq[k]) << ',' << format_number(t.usq[k]) << ','
           << format_number(t.zeta[k]);
        for (int n = 0; n < t.M; ++n) {
            os << ',' << format_number(t.w(k, n));
        }
        for (int n = 0; n < t.N; ++n) {
            os << ',' << format_number(t.what(k, n));
        }
        os << "\r\n";
    }
}

} // namespace heatctl
