#pragma once

#include <cmath>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/sdp/problem.hpp"
#include "heatctl/sdp/solver.hpp"
#include "heatctl/synthesis/closed_loop.hpp"

namespace heatctl {

using sdp::AffineExpr;

// 4 / (sqrt(N) pi^{3/2}): twice the lambda^{-3/4} tail bound.
inline double tail_gain(int N) { return 2.0 * tail_bounds(N).second; }

struct ContinuousLmi {
    sdp::LmiProblem problem;
    sdp::MatrixVariable P;
    sdp::MatrixVariable alpha1;
};

// [[Phi, P Lcal, 0], [*, -2(lambda_{N+1} - a - delta), 1], [*, *, -alpha1 lambda_{N+1}^{-3/4}]] < 0
// with Phi = P F + F' P + 2 delta P + tail_gain(N) alpha1 Ktilde' Ktilde, P > 0, alpha1 > 0.
inline ContinuousLmi build_continuous_lmi(const ClosedLoopMatrices& cl, const ModalModel& m, double delta) {
    const int n = static_cast<int>(cl.F.rows());
    if (n != 2 * m.N + 1) {
        throw argument_error("build_continuous_lmi: closed-loop size does not match N");
    }
    ContinuousLmi out;
    auto& p = out.problem;
    out.P = p.add_variable("P", n);
    out.alpha1 = p.add_scalar("alpha1");
    const auto P = AffineExpr::variable(out.P);
    const auto a1 = AffineExpr::variable(out.alpha1);
    const double lam = m.lambda(m.N + 1);
    const Matrix Kt = cl.Ktilde;

    const auto phi = P * cl.F + cl.F.transpose() * P + 2.0 * delta * P + tail_gain(m.N) * (Kt.transpose() * a1 * Kt);
    const auto pl = P * Matrix(cl.Lcal);

    p.add_constraint("continuous", AffineExpr::blocks({
                                       {phi, pl, sdp::zeros(n, 1)},
                                       {pl.transpose(), sdp::constant(-2.0 * (lam - m.a - delta)), sdp::constant(1.0)},
                                       {sdp::zeros(1, n), sdp::constant(1.0), -std::pow(lam, -0.75) * a1},
                                   }));
    p.require_positive(out.P);
    p.require_positive(out.alpha1);
    return out;
}

struct SampledParams {
    double delta0 = 6.0;
    double delta1 = 5.9;
    double tau_My = 0.002;
    double tau_Mu = 0.048;
};

// tau^2 exp(2 delta0 tau)
inline double sampling_weight(double tau, double delta0) { return tau * tau * std::exp(2.0 * delta0 * tau); }

struct SampledLmi {
    sdp::LmiProblem problem;
    sdp::MatrixVariable P;
    sdp::MatrixVariable W1;
    sdp::MatrixVariable W2;
    sdp::MatrixVariable alpha1;
    sdp::MatrixVariable alpha2;
};

// Sampled-data stability conditions in (P, W1, W2, alpha1, alpha2):
// the main block inequality over [X, zeta, sampling error terms], the 3x3
// tail inequality and positivity of every variable.
inline SampledLmi build_sampled_lmis(const ClosedLoopMatrices& cl, const ModalModel& m, const SampledParams& sp) {
    if (!(sp.delta1 > 0.0 && sp.delta0 > sp.delta1)) {
        throw argument_error("build_sampled_lmis needs delta0 > delta1 > 0");
    }
    if (!(sp.tau_My > 0.0 && sp.tau_Mu > 0.0)) {
        throw argument_error("build_sampled_lmis needs positive sampling bounds");
    }
    const int n = static_cast<int>(cl.F.rows());
    if (n != 2 * m.N + 1) {
        throw argument_error("build_sampled_lmis: closed-loop size does not match N");
    }
    SampledLmi out;
    auto& p = out.problem;
    out.P = p.add_variable("P", n);
    out.W1 = p.add_variable("W1", n);
    out.W2 = p.add_scalar("W2");
    out.alpha1 = p.add_scalar("alpha1");
    out.alpha2 = p.add_scalar("alpha2");
    const auto P = AffineExpr::variable(out.P);
    const auto W1 = AffineExpr::variable(out.W1);
    const auto W2 = AffineExpr::variable(out.W2);
    const auto a1 = AffineExpr::variable(out.alpha1);
    const auto a2 = AffineExpr::variable(out.alpha2);

    const double lam = m.lambda(m.N + 1);
    const double lam34 = std::pow(lam, -0.75);
    const double g = tail_gain(m.N);
    const double quarter_pi2 = pi * pi / 4.0;
    const double rate = sp.delta0 - sp.delta1;
    const double ey = sampling_weight(sp.tau_My, sp.delta0);
    const double eu = sampling_weight(sp.tau_Mu, sp.delta0);
    const Matrix I = Matrix::Identity(n, n);
    const Matrix L = cl.Lcal;
    const Matrix B = cl.Bcal;
    const Matrix Kt = cl.Ktilde;
    const Matrix Kh = cl.Khat;

    const auto phi = P * cl.F + cl.F.transpose() * P + 2.0 * rate * P + g * (Kt.transpose() * a1 * Kt);
    const auto pl = P * L;
    const auto pf1 = P * Matrix(cl.F1 - 2.0 * sp.delta1 * I);
    const auto pb = -1.0 * (P * B);
    const auto w1bar = 2.0 * sp.delta1 * P + quarter_pi2 * W1;
    const auto w2bar = quarter_pi2 * W2 - g * a2;

    const auto base = AffineExpr::blocks({
        {phi, pl, pf1, pb},
        {pl.transpose(), sdp::constant(-2.0 * sp.delta1), sdp::zeros(1, n), sdp::zeros(1, 1)},
        {pf1.transpose(), sdp::zeros(n, 1), -1.0 * w1bar, sdp::zeros(n, 1)},
        {pb.transpose(), sdp::zeros(1, 1), sdp::zeros(1, n), -1.0 * w2bar},
    });
    Matrix R(n, 2 * n + 2);
    R << cl.F, L, cl.F1, -B;
    const auto sampling = R.transpose() * (ey * W1 + eu * (Kh.transpose() * W2 * Kh)) * R;
    p.add_constraint("sampled", base + sampling);

    p.add_constraint("tail", AffineExpr::blocks({
                                 {sdp::constant(-lam + m.a + sp.delta0), sdp::constant(1.0), sdp::constant(1.0)},
                                 {sdp::constant(1.0), -2.0 * lam34 * a1, sdp::zeros(1, 1)},
                                 {sdp::constant(1.0), sdp::zeros(1, 1), -2.0 * lam34 * a2},
                             }));
    for (const auto& v : {out.P, out.W1, out.W2, out.alpha1, out.alpha2}) {
        p.require_positive(v);
    }
    return out;
}

struct LmiCertificate {
    Matrix P;
    double alpha1 = 0.0;
    double alpha2 = 0.0; // sampled only
    Matrix W1;           // sampled only
    double W2 = 0.0;     // sampled only
    double margin = 0.0;
    bool sampled = false;
};

inline LmiCertificate extract_certificate(const ContinuousLmi& lmi, const sdp::SolveOutcome& out) {
    if (out.status != sdp::Status::feasible) {
        throw argument_error("extract_certificate: outcome is not feasible");
    }
    LmiCertificate c;
    c.P = lmi.problem.value(lmi.P, out.point);
    c.alpha1 = out.point(lmi.alpha1.offset);
    c.margin = out.margin;
    return c;
}

inline LmiCertificate extract_certificate(const SampledLmi& lmi, const sdp::SolveOutcome& out) {
    if (out.status != sdp::Status::feasible) {
        throw argument_error("extract_certificate: outcome is not feasible");
    }
    LmiCertificate c;
    c.sampled = true;
    c.P = lmi.problem.value(lmi.P, out.point);
    c.W1 = lmi.problem.value(lmi.W1, out.point);
    c.W2 = out.point(lmi.W2.offset);
    c.alpha1 = out.point(lmi.alpha1.offset);
    c.alpha2 = out.point(lmi.alpha2.offset);
    c.margin = out.margin;
    return c;
}

// Flat point of a sampled problem holding the given certificate.
inline Vector certificate_point(const SampledLmi& lmi, const LmiCertificate& c) {
    Vector x = Vector::Zero(lmi.problem.num_vars());
    const int n = lmi.P.dim;
    for (int i = 0; i < n; ++i) {
        for (int j = i; j < n; ++j) {
            x(lmi.P.index(i, j)) = c.P(i, j);
            x(lmi.W1.index(i, j)) = c.W1(i, j);
        }
    }
    x(lmi.W2.offset) = c.W2;
    x(lmi.alpha1.offset) = c.alpha1;
    x(lmi.alpha2.offset) = c.alpha2;
    return x;
}

inline Vector certificate_point(const ContinuousLmi& lmi, const LmiCertificate& c) {
    Vector x = Vector::Zero(lmi.problem.num_vars());
    for (int i = 0; i < lmi.P.dim; ++i) {
        for (int j = i; j < lmi.P.dim; ++j) {
            x(lmi.P.index(i, j)) = c.P(i, j);
        }
    }
    x(lmi.alpha1.offset) = c.alpha1;
    return x;
}

} // namespace heatctl
