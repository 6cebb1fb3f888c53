#pragma once

#include <optional>
#include <string>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/sdp/problem.hpp"
#include "heatctl/sdp/solver.hpp"
#include "heatctl/synthesis/closed_loop.hpp"

namespace heatctl {

struct ObserverDesign {
    Vector L0;
    Matrix Po;
    double margin = 0.0;
};

struct ControllerDesign {
    RowVector K0;
    Matrix Pc;
    double margin = 0.0;
};

// P (A + dI) + (A + dI)' P, with d the decay rate.
inline Matrix shifted_lyapunov_form(const Matrix& p, const Matrix& a, double delta) {
    return symmetrized(p * a + a.transpose() * p + 2.0 * delta * p);
}

// Margin of a Lyapunov certificate: -max eig of the shifted form, or
// -infinity if P is not positive definite.
inline double lyapunov_margin(const Matrix& p, const Matrix& a, double delta) {
    if (p.size() == 0 || min_eigenvalue(symmetrized(p)) <= 0.0) {
        return -std::numeric_limits<double>::infinity();
    }
    return -max_eigenvalue(shifted_lyapunov_form(p, a, delta));
}

// Finds L0 with Po (A0 - L0 C0) + (...)' Po + 2 delta Po <= -margin_req I,
// Po >= I, through Y = Po L0, minimizing a bound on L0' Po L0.
inline ObserverDesign design_observer_gain(const Matrix& A0, const RowVector& C0, double delta, double margin_req = 1.0,
                                           const sdp::SolveOptions& opt = {}) {
    const int n = static_cast<int>(A0.rows());
    if (numerical_rank(observability_matrix(A0, C0)) < n) {
        throw synthesis_error("observer design: (A0, C0) is not observable");
    }
    sdp::LmiProblem p;
    auto pv = p.add_variable("Po", n);
    auto Po = sdp::AffineExpr::variable(pv);
    auto Y = sdp::add_general_matrix(p, "Y", n, 1);
    auto gv = p.add_scalar("gamma");
    auto gamma = sdp::AffineExpr::variable(gv);
    const Matrix I = Matrix::Identity(n, n);

    auto YC = Y * Matrix(C0);
    p.add_constraint("decay", Po * A0 + A0.transpose() * Po - YC - YC.transpose() + 2.0 * delta * Po +
                                  sdp::constant(Matrix(1.01 * margin_req * I)));
    p.add_constraint("floor", sdp::constant(I) - Po);
    p.add_constraint("gain bound", sdp::AffineExpr::blocks({{-1.0 * gamma, Y.transpose()}, {Y, -1.0 * Po}}));

    Vector cost = Vector::Zero(p.num_vars());
    cost(gv.offset) = 1.0;
    const auto out = sdp::solve_minimize(p, cost, opt);
    if (out.status != sdp::Status::feasible) {
        throw synthesis_error("observer design failed: " + out.message);
    }
    ObserverDesign d;
    d.Po = p.value(pv, out.point);
    const Vector y = Y.evaluate(out.point);
    d.L0 = d.Po.ldlt().solve(y);
    d.margin = lyapunov_margin(d.Po, A0 - d.L0 * C0, delta);
    if (!(d.margin >= margin_req * (1.0 - 1e-6))) {
        throw synthesis_error("observer design: recovered gain misses the requested margin");
    }
    return d;
}

// Dual form: Q = Pc^-1, Y = K0 Q with
namespace detail {

// Dual-form decay constraint At0 Q + Q At0' + Bt0 Y + Y' Bt0' + 2 delta Q + shift,
// with 0 < Q <= I.
struct ControllerLmi {
    sdp::LmiProblem problem;
    sdp::MatrixVariable Q;
    sdp::AffineExpr Y;
    sdp::AffineExpr decay;
};

inline ControllerLmi controller_lmi(const Matrix& At0, const Vector& Bt0, double delta) {
    const int n = static_cast<int>(At0.rows());
    ControllerLmi c;
    c.Q = c.problem.add_variable("Q", n);
    const auto Q = sdp::AffineExpr::variable(c.Q);
    c.Y = sdp::add_general_matrix(c.problem, "Y", 1, n);
    const auto BY = Matrix(Bt0) * c.Y;
    c.decay = At0 * Q + Q * At0.transpose() + BY + BY.transpose() + 2.0 * delta * Q;
    c.problem.add_constraint("ceiling", Q - sdp::constant(Matrix::Identity(n, n)));
    c.problem.require_positive(c.Q);
    return c;
}

// Largest t with decay <= -t I; nonpositive when delta is out of reach.
inline double max_controller_margin(const Matrix& At0, const Vector& Bt0, double delta, const sdp::SolveOptions& opt) {
    auto c = controller_lmi(At0, Bt0, delta);
    const auto t = c.problem.add_scalar("t");
    const int n = static_cast<int>(At0.rows());
    auto shifted = c.decay;
    for (int i = 0; i < n; ++i) {
        const Matrix e = Matrix::Identity(n, n).col(i);
        shifted += e * sdp::AffineExpr::variable(t) * Matrix(e.transpose());
    }
    c.problem.add_constraint("decay", shifted);
    Vector cost = Vector::Zero(c.problem.num_vars());
    cost(t.offset) = -1.0;
    const auto out = sdp::solve_minimize(c.problem, cost, opt);
    return out.status == sdp::Status::feasible ? out.point(t.offset) : 0.0;
}

inline std::optional<ControllerDesign> try_controller(const Matrix& At0, const Vector& Bt0, double delta, double req,
                                                      const sdp::SolveOptions& opt) {
    auto c = controller_lmi(At0, Bt0, delta);
    const int n = static_cast<int>(At0.rows());
    c.problem.add_constraint("decay", c.decay + sdp::constant(Matrix(1.01 * req * Matrix::Identity(n, n))));
    const auto gv = c.problem.add_scalar("gamma");
    c.problem.add_constraint("gain bound", sdp::AffineExpr::blocks({{-1.0 * sdp::AffineExpr::variable(gv), c.Y},
                                                                    {c.Y.transpose(), -1.0 * sdp::AffineExpr::variable(c.Q)}}));
    Vector cost = Vector::Zero(c.problem.num_vars());
    cost(gv.offset) = 1.0;
    const auto out = sdp::solve_minimize(c.problem, cost, opt);
    if (out.status != sdp::Status::feasible) {
        return std::nullopt;
    }
    ControllerDesign d;
    d.Pc = symmetrized(c.problem.value(c.Q, out.point).ldlt().solve(Matrix::Identity(n, n)));
    d.K0 = c.Y.evaluate(out.point) * d.Pc;
    d.margin = lyapunov_margin(d.Pc, At0 + Bt0 * d.K0, delta);
    if (!(d.margin >= req * (1.0 - 1e-6))) {
        return std::nullopt;
    }
    return d;
}

} // namespace detail

// At0 Q + Q At0' + Bt0 Y + Y' Bt0' + 2 delta Q <= -margin_req I, 0 < Q <= I,
// minimizing a bound on K0 Q K0', with Pc = Q^{-1} >= I. When margin_req is
// out of reach under Q <= I the design settles for half the largest
// attainable margin.
inline ControllerDesign design_controller_gain(const Matrix& At0, const Vector& Bt0, double delta,
                                               double margin_req = 1.0, const sdp::SolveOptions& opt = {}) {
    const int n = static_cast<int>(At0.rows());
    if (numerical_rank(controllability_matrix(At0, Bt0)) < n) {
        throw synthesis_error("controller design: (At0, Bt0) is not controllable");
    }
    if (auto d = detail::try_controller(At0, Bt0, delta, margin_req, opt)) {
        return *d;
    }
    const double best = detail::max_controller_margin(At0, Bt0, delta, opt);
    if (best > 0.0) {
        if (auto d = detail::try_controller(At0, Bt0, delta, 0.5 * best / 1.01, opt)) {
            return *d;
        }
    }
    throw synthesis_error("controller design failed: no certified gain reaches decay rate " + std::to_string(delta));
}

inline GainSet design_gains(const ModalModel& m, double delta, double margin_req = 1.0,
                            const sdp::SolveOptions& opt = {}) {
    const auto obs = design_observer_gain(m.A0, m.C0, delta, margin_req, opt);
    const auto ctl = design_controller_gain(m.At0, m.Bt0, delta, margin_req, opt);
    return {obs.L0, ctl.K0, obs.Po, ctl.Pc, std::min(obs.margin, ctl.margin)};
}

// Reference single-mode gains (N0 = 1, a = 10, delta = 0.1).
inline GainSet reference_gains() {
    GainSet g;
    g.L0 = Vector::Constant(1, 0.7062);
    g.K0.resize(2);
    g.K0 << -4.8237, -5.2287;
    return g;
}

// Fills Po, Pc from (A + delta I)' P + P (A + delta I) = -I for the given
// gains; margin is the certified eigenvalue gap (negative when a closed-loop
// block fails to decay at rate delta).
inline GainSet certify_gains(const ModalModel& m, const Vector& L0, const RowVector& K0, double delta) {
    check_gain_shapes(m, L0, K0);
    GainSet g;
    g.L0 = L0;
    g.K0 = K0;
    const Matrix ao = observer_error_matrix(m, L0);
    const Matrix ac = controller_matrix(m, K0);
    const Matrix shift_o = ao + delta * Matrix::Identity(ao.rows(), ao.cols());
    const Matrix shift_c = ac + delta * Matrix::Identity(ac.rows(), ac.cols());
    if (spectral_abscissa(shift_o) >= 0.0 || spectral_abscissa(shift_c) >= 0.0) {
        g.margin = -std::max(spectral_abscissa(shift_o), spectral_abscissa(shift_c));
        return g;
    }
    g.Po = solve_lyapunov(shift_o, Matrix::Identity(ao.rows(), ao.cols()));
    g.Pc = solve_lyapunov(shift_c, Matrix::Identity(ac.rows(), ac.cols()));
    g.margin = std::min(lyapunov_margin(g.Po, ao, delta), lyapunov_margin(g.Pc, ac, delta));
    return g;
}

struct GainReport {
    double observer_abscissa = 0.0;   // max Re eig(A0 - L0 C0)
    double controller_abscissa = 0.0; // max Re eig(At0 + Bt0 K0)
    double observer_max_eig = 0.0;    // of the shifted Lyapunov form with Po
    double controller_max_eig = 0.0;
    bool observer_ok = false;
    bool controller_ok = false;
    bool certificates_checked = false;

    bool passed() const { return observer_ok && controller_ok; }
};

// Re-checks a gain set: both closed-loop blocks must decay faster than
// delta and, when Po/Pc are present, both Lyapunov inequalities must hold.
inline GainReport verify_gains(const GainSet& g, const ModalModel& m, double delta) {
    check_gain_shapes(m, g.L0, g.K0);
    GainReport r;
    const Matrix ao = observer_error_matrix(m, g.L0);
    const Matrix ac = controller_matrix(m, g.K0);
    r.observer_abscissa = spectral_abscissa(ao);
    r.controller_abscissa = spectral_abscissa(ac);
    r.observer_ok = r.observer_abscissa < -delta;
    r.controller_ok = r.controller_abscissa < -delta;
    if (g.Po.size() > 0 && g.Pc.size() > 0) {
        if (g.Po.rows() != ao.rows() || g.Pc.rows() != ac.rows()) {
            throw argument_error("verify_gains: certificate dimensions do not match N0");
        }
        r.certificates_checked = true;
        r.observer_max_eig = max_eigenvalue(shifted_lyapunov_form(g.Po, ao, delta));
        r.controller_max_eig = max_eigenvalue(shifted_lyapunov_form(g.Pc, ac, delta));
        r.observer_ok = r.observer_ok && r.observer_max_eig < 0.0 && min_eigenvalue(g.Po) > 0.0;
        r.controller_ok = r.controller_ok && r.controller_max_eig < 0.0 && min_eigenvalue(g.Pc) > 0.0;
    }
    return r;
}

} // namespace heatctl
