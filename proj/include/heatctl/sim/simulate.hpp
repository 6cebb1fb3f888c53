#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>

#include <unsupported/Eigen/MatrixFunctions>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/quadrature.hpp"
#include "heatctl/sim/sampling.hpp"
#include "heatctl/sim/trajectory.hpp"
#include "heatctl/synthesis/closed_loop.hpp"

namespace heatctl {

struct SimConfig {
    int M = 0;                       // plant modes; 0 selects max(100, 3N)
    double T = 10.0;                 // horizon
    std::optional<double> dt;        // default min(1e-3, half the smallest sampling increment)
    std::optional<Vector> initial;   // w_n(0), n = 1..M
    std::function<double(double)> initial_function; // projected when `initial` is empty; default x(1 - x)
    int record_every = 1;
    std::optional<Matrix> P;         // adds V(t) to the diagnostics

    // Sampled-data mode: measurement instants s_k and hold updates t_j.
    bool sampled = false;
    Instants s;
    Instants t;
    double tau_My = 0.0;
    double tau_Mu = 0.0;
};

inline int resolved_modes(const SimConfig& c, int N) { return c.M > 0 ? c.M : std::max(100, 3 * N); }

inline GainSet zero_gains(int N0) {
    GainSet g;
    g.L0 = Vector::Zero(N0);
    g.K0 = RowVector::Zero(N0 + 1);
    return g;
}

// w_n(0) = <f, phi_n> by composite Simpson quadrature.
inline Vector project_initial(const std::function<double(double)>& f, int M) {
    if (std::abs(f(0.0)) > 1e-12 || std::abs(f(1.0)) > 1e-12) {
        throw argument_error("initial function must vanish at both ends");
    }
    Vector w(M);
    for (int n = 1; n <= M; ++n) {
        const auto e = eigenpair(n);
        w(n - 1) = inner_product(f, [&](double x) { return e.phi(x); });
    }
    return w;
}

// (e^z - 1) / z and (e^z - 1 - z) / z^2, accurate near 0.
inline double phi1(double z) { return std::abs(z) < 1e-8 ? 1.0 + 0.5 * z : std::expm1(z) / z; }

inline double phi2(double z) {
    if (std::abs(z) < 0.1) {
        double term = 0.5;
        double sum = 0.5;
        for (int k = 1; k < 12; ++k) {
            term *= z / (k + 2);
            sum += term;
        }
        return sum;
    }
    return (std::expm1(z) - z) / (z * z);
}

// Exact solution at time h of x' = mu x + f0 + f1 s, x(0) = x0.
inline double exponential_step(double mu, double h, double x0, double f0, double f1 = 0.0) {
    const double z = mu * h;
    return std::exp(z) * x0 + h * phi1(z) * f0 + h * h * phi2(z) * f1;
}

namespace detail {

struct Plant {
    int M = 0;
    int N = 0;
    int N0 = 0;
    double a = 0.0;
    double r_star = 0.0; // 1 - x*
    Vector lambda, mu, b, c;
    Vector l; // length N, zero beyond N0
    RowVector K0;
};

inline Plant make_plant(const ModalModel& m, const GainSet& g, int M) {
    check_gain_shapes(m, g.L0, g.K0);
    Plant p;
    p.M = M;
    p.N = m.N;
    p.N0 = m.N0;
    p.a = m.a;
    p.r_star = 1.0 - m.x_star;
    p.lambda.resize(M);
    p.b.resize(M);
    p.c.resize(M);
    for (int n = 1; n <= M; ++n) {
        p.lambda(n - 1) = eigenvalue(n);
        p.b(n - 1) = input_coeff(n);
        p.c(n - 1) = output_coeff(n, m.x_star);
    }
    p.mu = (m.a - p.lambda.array()).matrix();
    p.l = Vector::Zero(m.N);
    p.l.head(m.N0) = g.L0;
    p.K0 = g.K0;
    return p;
}

// State layout [w_1..w_M, what_1..what_N, u].
inline double control_rate(const Plant& p, const Vector& z) {
    double v = p.K0(0) * z(p.M + p.N);
    for (int n = 0; n < p.N0; ++n) {
        v += p.K0(n + 1) * z(p.M + n);
    }
    return v;
}

// what(x*) - w(x*); the boundary terms r(x*) u cancel.
inline double innovation(const Plant& p, const Vector& z) {
    return p.c.head(p.N).dot(z.segment(p.M, p.N)) - p.c.dot(z.head(p.M));
}

class Recorder {
public:
    Recorder(const Plant& p, const SimConfig& cfg, Trajectory& out) : p_(p), cfg_(cfg), out_(out) {
        out_.M = p.M;
        out_.N = p.N;
        if (cfg.P && (cfg.P->rows() != 2 * p.N + 1 || cfg.P->cols() != 2 * p.N + 1)) {
            throw argument_error("simulate: P must be (2N+1) x (2N+1)");
        }
    }

    void add(double time, const Vector& z, double v) {
        const auto w = z.head(p_.M);
        const auto wh = z.segment(p_.M, p_.N);
        const double u = z(p_.M + p_.N);
        rows_w_.push_back(w);
        rows_what_.push_back(wh);
        out_.times.push_back(time);
        out_.u.push_back(u);
        out_.v.push_back(v);
        out_.y.push_back(p_.c.dot(w) + p_.r_star * u);
        const double h1 = ((1.0 + p_.lambda.array()) * w.array().square()).sum();
        out_.h1_sq.push_back(h1);
        out_.usq.push_back(u * u);
        const int tail = p_.M - p_.N;
        out_.zeta.push_back(tail > 0 ? p_.c.tail(tail).dot(w.tail(tail)) : 0.0);
        const double tail_energy = tail > 0 ? (p_.lambda.tail(tail).array() * w.tail(tail).array().square()).sum() : 0.0;
        out_.tail_energy.push_back(tail_energy);
        out_.z_h1_sq.push_back(h1 + 2.0 * u * p_.b.dot(w) + 4.0 / 3.0 * u * u);
        if (cfg_.P) {
            const int n = 2 * p_.N + 1;
            Vector x(n);
            const int n0 = p_.N0;
            const int tl = p_.N - n0;
            x(0) = u;
            x.segment(1, n0) = wh.head(n0);
            x.segment(1 + n0, n0) = w.head(n0) - wh.head(n0);
            x.segment(1 + 2 * n0, tl) = wh.tail(tl);
            x.segment(1 + 2 * n0 + tl, tl) = w.segment(n0, tl) - wh.tail(tl);
            out_.lyapunov.push_back(x.dot(*cfg_.P * x) + tail_energy);
        }
    }

    void finish() {
        out_.w.resize(static_cast<Eigen::Index>(rows_w_.size()), p_.M);
        out_.what.resize(static_cast<Eigen::Index>(rows_what_.size()), p_.N);
        for (std::size_t k = 0; k < rows_w_.size(); ++k) {
            out_.w.row(static_cast<Eigen::Index>(k)) = rows_w_[k].transpose();
            out_.what.row(static_cast<Eigen::Index>(k)) = rows_what_[k].transpose();
        }
    }

private:
    const Plant& p_;
    const SimConfig& cfg_;
    Trajectory& out_;
    std::vector<Vector> rows_w_;
    std::vector<Vector> rows_what_;
};

inline Vector initial_state(const Plant& p, const SimConfig& cfg) {
    Vector z = Vector::Zero(p.M + p.N + 1);
    if (cfg.initial) {
        if (cfg.initial->size() != p.M) {
            throw argument_error("simulate: initial coefficients must have M entries");
        }
        z.head(p.M) = *cfg.initial;
    } else if (cfg.initial_function) {
        z.head(p.M) = project_initial(cfg.initial_function, p.M);
    } else {
        z.head(p.M) = project_initial([](double x) { return x * (1.0 - x); }, p.M);
    }
    return z;
}

inline void check_common(const ModalModel& m, const SimConfig& cfg, int M) {
    if (M < m.N) {
        throw argument_error("simulate: plant modes M must be >= N");
    }
    if (cfg.dt && !(*cfg.dt > 0.0)) {
        throw argument_error("simulate: dt must be positive");
    }
    if (!(cfg.T > 0.0)) {
        throw argument_error("simulate: horizon must be positive");
    }
    if (cfg.record_every < 1) {
        throw argument_error("simulate: record_every must be >= 1");
    }
}

} // namespace detail

// Generator of the continuous closed loop in [w, what, u] coordinates.
inline Matrix continuous_generator(const ModalModel& m, const GainSet& g, int M) {
    const auto p = detail::make_plant(m, g, M);
    const int dim = M + p.N + 1;
    const int iu = M + p.N;
    RowVector kv = RowVector::Zero(dim);
    kv(iu) = p.K0(0);
    for (int n = 0; n < p.N0; ++n) {
        kv(M + n) = p.K0(n + 1);
    }
    RowVector innov = RowVector::Zero(dim);
    innov.segment(M, p.N) = p.c.head(p.N).transpose();
    innov.head(M) = -p.c.transpose();

    Matrix A = Matrix::Zero(dim, dim);
    for (int n = 0; n < M; ++n) {
        A(n, n) = p.mu(n);
        A(n, iu) += p.a * p.b(n);
        A.row(n) -= p.b(n) * kv;
    }
    for (int n = 0; n < p.N; ++n) {
        const int r = M + n;
        A(r, r) = p.mu(n);
        A(r, iu) += p.a * p.b(n);
        A.row(r) -= p.b(n) * kv;
        A.row(r) -= p.l(n) * innov;
    }
    A.row(iu) = kv;
    return A;
}

// Continuous measurement; the closed loop is linear time-invariant, so each
// step applies the exact propagator exp(A dt).
inline Trajectory simulate_continuous(const ModalModel& m, const GainSet& g, const SimConfig& cfg) {
    const int M = resolved_modes(cfg, m.N);
    detail::check_common(m, cfg, M);
    const auto p = detail::make_plant(m, g, M);
    const double dt = cfg.dt.value_or(1e-3);
    const Matrix A = continuous_generator(m, g, M);
    const Matrix E = (A * dt).exp();
    const long steps = static_cast<long>(std::floor(cfg.T / dt + 1e-9));
    const double rest = cfg.T - static_cast<double>(steps) * dt;

    Trajectory out;
    detail::Recorder rec(p, cfg, out);
    Vector z = detail::initial_state(p, cfg);
    rec.add(0.0, z, detail::control_rate(p, z));
    for (long k = 1; k <= steps; ++k) {
        z = E * z;
        if (k % cfg.record_every == 0 || (k == steps && rest <= 1e-12)) {
            rec.add(static_cast<double>(k) * dt, z, detail::control_rate(p, z));
        }
    }
    if (rest > 1e-12) {
        z = (A * rest).exp() * z;
        rec.add(cfg.T, z, detail::control_rate(p, z));
    }
    rec.finish();
    return out;
}

// Sampled measurement (snapshot at s_k, held on [s_k, s_k+1)) and
// generalized hold u(t) = u(t_j) + v(t_j)(t - t_j). Between consecutive
// events every mode solves a scalar ODE with affine forcing exactly.
inline Trajectory simulate_sampled(const ModalModel& m, const GainSet& g, const SimConfig& cfg) {
    const int M = resolved_modes(cfg, m.N);
    detail::check_common(m, cfg, M);
    validate_instants(cfg.s, cfg.tau_My, "measurement instants");
    validate_instants(cfg.t, cfg.tau_Mu, "hold instants");
    if (cfg.s.back() + cfg.tau_My < cfg.T - instant_tol || cfg.t.back() + cfg.tau_Mu < cfg.T - instant_tol) {
        throw argument_error("simulate: sampling sequences stop before the horizon");
    }
    const auto p = detail::make_plant(m, g, M);
    const double dt = cfg.dt.value_or(std::min(1e-3, 0.5 * std::min(smallest_increment(cfg.s), smallest_increment(cfg.t))));

    Trajectory out;
    detail::Recorder rec(p, cfg, out);
    Vector z = detail::initial_state(p, cfg);
    const int iu = M + p.N;
    std::size_t ks = 0;
    std::size_t kt = 0;
    double innov = 0.0;
    double v = 0.0;
    double time = 0.0;
    long step = 0;
    auto at = [](double a, double b) { return std::abs(a - b) <= instant_tol * std::max(1.0, std::abs(b)); };

    while (true) {
        if (ks < cfg.s.size() && at(time, cfg.s[ks])) {
            innov = detail::innovation(p, z);
            ++ks;
        }
        if (kt < cfg.t.size() && at(time, cfg.t[kt])) {
            v = detail::control_rate(p, z);
            ++kt;
        }
        if (step % cfg.record_every == 0) {
            rec.add(time, z, v);
        }
        if (time >= cfg.T - instant_tol * std::max(1.0, cfg.T)) {
            if (step % cfg.record_every != 0) {
                rec.add(time, z, v);
            }
            break;
        }
        double next = std::min(time + dt, cfg.T);
        if (ks < cfg.s.size()) {
            next = std::min(next, cfg.s[ks]);
        }
        if (kt < cfg.t.size()) {
            next = std::min(next, cfg.t[kt]);
        }
        const double h = next - time;
        const double u0 = z(iu);
        for (int n = 0; n < M; ++n) {
            const double f0 = p.b(n) * (p.a * u0 - v);
            const double f1 = p.a * p.b(n) * v;
            z(n) = exponential_step(p.mu(n), h, z(n), f0, f1);
            if (n < p.N) {
                z(M + n) = exponential_step(p.mu(n), h, z(M + n), f0 - p.l(n) * innov, f1);
            }
        }
        z(iu) = u0 + v * h;
        time = next;
        ++step;
    }
    rec.finish();
    return out;
}

inline Trajectory simulate(const ModalModel& m, const GainSet& g, const SimConfig& cfg) {
    return cfg.sampled ? simulate_sampled(m, g, cfg) : simulate_continuous(m, g, cfg);
}

} // namespace heatctl
