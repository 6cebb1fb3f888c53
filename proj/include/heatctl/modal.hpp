#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"

// Spectral data of -phi'' = lambda phi, phi(0) = phi(1) = 0, and the reduced
// matrices of the dynamic-extension model
//
//   w_n' = (-lambda_n + a) w_n + a b_n u - b_n v,   u' = v,
//   y    = sum_n c_n w_n + (1 - x*) u.

namespace heatctl {

inline constexpr double pi = std::numbers::pi;

struct SystemConfig {
    double a = 10.0;                        // reaction coefficient
    double x_star = 1.0 / std::numbers::sqrt2; // sensor location
    double delta = 0.1;                     // target decay rate
    double delta0 = 6.0;                    // Halanay rates, delta0 > delta1
    double delta1 = 5.9;
    double tau_My = 0.002;                  // measurement sampling bound
    double tau_Mu = 0.048;                  // hold update bound
    std::optional<int> N0;                  // controller dimension; selected from (a, delta) if empty
    int N = 4;                              // observer dimension

    // Throws argument_error on the first violated invariant.
    void validate(bool sampled = false) const;
};

struct Eigenpair {
    int n;
    double lambda;

    double phi(double x) const { return std::numbers::sqrt2 * std::sin(std::sqrt(lambda) * x); }
    double dphi(double x) const {
        const double k = std::sqrt(lambda);
        return std::numbers::sqrt2 * k * std::cos(k * x);
    }
};

inline Eigenpair eigenpair(int n) {
    if (n < 1) {
        throw argument_error("eigenpair: mode index must be >= 1, got " + std::to_string(n));
    }
    const double k = n * pi;
    return {n, k * k};
}

inline double eigenvalue(int n) { return eigenpair(n).lambda; }

// b_n = <1 - x, phi_n> = sqrt(2 / lambda_n)
inline double input_coeff(int n) {
    if (n < 1) {
        throw argument_error("input_coeff: mode index must be >= 1, got " + std::to_string(n));
    }
    return std::numbers::sqrt2 / (n * pi);
}

// c_n = phi_n(x*)
inline double output_coeff(int n, double x_star) {
    if (n < 1) {
        throw argument_error("output_coeff: mode index must be >= 1, got " + std::to_string(n));
    }
    if (!(x_star > 0.0 && x_star < 1.0)) {
        throw argument_error("output_coeff: sensor location must lie in (0, 1)");
    }
    return std::numbers::sqrt2 * std::sin(n * pi * x_star);
}

// Smallest N0 >= 1 with -lambda_n + a < -delta for every n > N0.
inline int select_N0(double a, double delta) {
    if (!(delta > 0.0)) {
        throw argument_error("select_N0: delta must be positive");
    }
    int n0 = 1;
    for (int n = 1; eigenvalue(n) <= a + delta; ++n) {
        n0 = n;
    }
    return n0;
}

inline constexpr double default_assumption_tol = 1e-6;

// First mode n <= N0 with |c_n| <= tol, or 0 when every coefficient clears it.
inline int first_vanishing_output(double x_star, int N0, double tol = default_assumption_tol) {
    for (int n = 1; n <= N0; ++n) {
        if (std::abs(output_coeff(n, x_star)) <= tol) {
            return n;
        }
    }
    return 0;
}

inline bool check_assumption1(double x_star, int N0, double tol = default_assumption_tol) {
    return first_vanishing_output(x_star, N0, tol) == 0;
}

// Integral bounds on the unobserved tail:
//   sum_{n>N} b_n^2          <= 2 / (pi^2 N)
//   sum_{n>N} lambda_n^{-3/4} <= 2 / (sqrt(N) pi^{3/2})
inline std::pair<double, double> tail_bounds(int N) {
    if (N < 1) {
        throw argument_error("tail_bounds: N must be >= 1");
    }
    return {2.0 / (pi * pi * N), 2.0 / (std::sqrt(static_cast<double>(N)) * std::pow(pi, 1.5))};
}

struct ModalModel {
    double a = 0.0;
    double x_star = 0.5;
    int N0 = 1;
    int N = 1;

    Vector lambdas; // lambda_1 .. lambda_{N+1}
    Vector b;       // b_1 .. b_{N+1}
    Vector c;       // c_1 .. c_{N+1}

    Matrix A0;      // N0 x N0
    RowVector B0;   // 1 x N0
    RowVector C0;   // 1 x N0
    Vector Bt0;     // col{1, -b_1, ..., -b_N0}
    Matrix At0;     // [[0, 0], [a B0^T, A0]]
    Matrix A1;      // (N - N0) x (N - N0)
    Vector B1;      // b_{N0+1} .. b_N
    RowVector C1;   // c_{N0+1} .. c_N

    double lambda(int n) const { return lambdas(n - 1); }
};

inline void SystemConfig::validate(bool sampled) const {
    if (!(x_star > 0.0 && x_star < 1.0)) {
        throw argument_error("x_star must lie in (0, 1)");
    }
    if (!(delta > 0.0)) {
        throw argument_error("delta must be positive");
    }
    if (N0 && *N0 < 1) {
        throw argument_error("N0 must be >= 1");
    }
    if (N < 1 || (N0 && *N0 > N)) {
        throw argument_error("N must satisfy N0 <= N");
    }
    if (sampled) {
        if (!(delta1 > 0.0 && delta0 > delta1)) {
            throw argument_error("sampled mode needs delta0 > delta1 > 0");
        }
        if (!(tau_My > 0.0 && tau_Mu > 0.0)) {
            throw argument_error("sampled mode needs positive sampling bounds");
        }
    }
}

inline int resolved_N0(const SystemConfig& cfg) {
    return cfg.N0 ? *cfg.N0 : select_N0(cfg.a, cfg.delta);
}

inline ModalModel reduced_matrices(const SystemConfig& cfg) {
    cfg.validate();
    const int n0 = resolved_N0(cfg);
    if (n0 > cfg.N) {
        throw argument_error("reduced_matrices: N = " + std::to_string(cfg.N) +
                             " is below the controller dimension N0 = " + std::to_string(n0));
    }
    if (const int bad = first_vanishing_output(cfg.x_star, n0); bad != 0) {
        throw config_error("output coefficient c_" + std::to_string(bad) + " = " +
                               std::to_string(output_coeff(bad, cfg.x_star)) +
                               " vanishes at the sensor location",
                           bad);
    }

    ModalModel m;
    m.a = cfg.a;
    m.x_star = cfg.x_star;
    m.N0 = n0;
    m.N = cfg.N;
    const int total = cfg.N + 1;
    m.lambdas.resize(total);
    m.b.resize(total);
    m.c.resize(total);
    for (int n = 1; n <= total; ++n) {
        m.lambdas(n - 1) = eigenvalue(n);
        m.b(n - 1) = input_coeff(n);
        m.c(n - 1) = output_coeff(n, cfg.x_star);
    }

    const int tail = cfg.N - n0;
    m.A0 = (cfg.a - m.lambdas.head(n0).array()).matrix().asDiagonal();
    m.B0 = m.b.head(n0).transpose();
    m.C0 = m.c.head(n0).transpose();
    m.Bt0.resize(n0 + 1);
    m.Bt0(0) = 1.0;
    m.Bt0.tail(n0) = -m.b.head(n0);
    m.At0 = Matrix::Zero(n0 + 1, n0 + 1);
    m.At0.block(1, 0, n0, 1) = cfg.a * m.B0.transpose();
    m.At0.block(1, 1, n0, n0) = m.A0;
    m.A1 = (cfg.a - m.lambdas.segment(n0, tail).array()).matrix().asDiagonal();
    m.B1 = m.b.segment(n0, tail);
    m.C1 = m.c.segment(n0, tail).transpose();
    return m;
}

} // namespace heatctl
