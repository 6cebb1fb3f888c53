#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>

#include "heatctl/sdp/certificate.hpp"
#include "heatctl/synthesis/gains.hpp"
#include "heatctl/synthesis/halanay.hpp"
#include "heatctl/synthesis/lmi.hpp"
#include "heatctl/synthesis/sweep.hpp"

using namespace heatctl;

namespace {

ModalModel model(int N, double a = 10.0) {
    SystemConfig c;
    c.a = a;
    c.N = N;
    return reduced_matrices(c);
}

std::vector<std::complex<double>> sorted_spectrum(const Eigen::VectorXcd& ev) {
    std::vector<std::complex<double>> v(ev.data(), ev.data() + ev.size());
    std::sort(v.begin(), v.end(), [](auto x, auto y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
    return v;
}

// Fixed-point iteration d <- delta0 - delta1 exp(2 d h); a contraction for
// the small h used here.
double halanay_fixed_point(double d0, double d1, double h) {
    double d = d0 - d1;
    for (int k = 0; k < 10000; ++k) {
        d = d0 - d1 * std::exp(2.0 * d * h);
    }
    return d;
}

} // namespace

TEST(Gains, ReferenceControllerDecays) {
    const auto m = model(4);
    const auto g = reference_gains();
    const auto ev = eigenvalues(controller_matrix(m, g.K0));
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        EXPECT_LT(ev(i).real(), -0.1);
        EXPECT_NEAR(ev(i).real(), -1.17, 0.01);
    }
}

TEST(Gains, ScalarObserverThreshold) {
    const auto m = model(4);
    const double c1 = std::sqrt(2.0) * std::sin(pi / std::sqrt(2.0));
    const double threshold = (10.0 - pi * pi + 0.1) / c1;
    EXPECT_NEAR(threshold, 0.2047, 1e-4);
    Vector L(1);
    L(0) = 0.7062;
    EXPECT_NEAR(observer_error_matrix(m, L)(0, 0), 10.0 - pi * pi - 0.7062 * c1, 1e-12);
    EXPECT_NEAR(observer_error_matrix(m, L)(0, 0), -0.665, 2e-3);
    for (double l : {threshold + 1e-6, 0.3, 5.0}) {
        L(0) = l;
        EXPECT_LT(observer_error_matrix(m, L)(0, 0), -0.1);
        EXPECT_TRUE(verify_gains({L, reference_gains().K0, {}, {}, 0.0}, m, 0.1).observer_ok);
    }
    L(0) = threshold - 1e-6;
    EXPECT_GT(observer_error_matrix(m, L)(0, 0), -0.1);
    EXPECT_FALSE(verify_gains({L, reference_gains().K0, {}, {}, 0.0}, m, 0.1).observer_ok);
}

TEST(Gains, VerifyReferenceAndZero) {
    const auto m = model(4);
    EXPECT_TRUE(verify_gains(reference_gains(), m, 0.1).passed());
    GainSet zero;
    zero.L0 = Vector::Zero(1);
    zero.K0 = RowVector::Zero(2);
    const auto r = verify_gains(zero, m, 0.1);
    EXPECT_FALSE(r.passed());
    EXPECT_GT(r.observer_abscissa, 0.0);
}

TEST(Gains, DesignedGainsPass) {
    for (double a : {10.0, 50.0, -5.0}) {
        const auto m = model(4, a);
        const auto g = design_gains(m, 0.1);
        EXPECT_GT(g.margin, 0.0) << a;
        const auto r = verify_gains(g, m, 0.1);
        EXPECT_TRUE(r.passed()) << a;
        EXPECT_TRUE(r.certificates_checked);
        EXPECT_LT(r.observer_max_eig, 0.0);
        EXPECT_LT(r.controller_max_eig, 0.0);
    }
}

TEST(Gains, StableOpenLoopAcceptsZeroController) {
    const auto m = model(4, -5.0);
    GainSet g;
    g.L0 = Vector::Zero(1);
    g.K0 = RowVector::Zero(2);
    // The u-mode is a pure integrator, so only the observer side is strict at delta = 0.
    EXPECT_TRUE(verify_gains(g, m, 0.0).observer_ok);
    const auto ctl = design_controller_gain(m.At0, m.Bt0, 0.0);
    EXPECT_LT(spectral_abscissa(controller_matrix(m, ctl.K0)), 0.0);
}

TEST(Gains, LyapunovHomogeneity) {
    const auto m = model(4);
    const auto g = certify_gains(m, reference_gains().L0, reference_gains().K0, 0.1);
    ASSERT_GT(g.margin, 0.0);
    const Matrix ac = controller_matrix(m, g.K0);
    const Matrix ao = observer_error_matrix(m, g.L0);
    const double base_c = max_eigenvalue(shifted_lyapunov_form(g.Pc, ac, 0.1));
    const double base_o = max_eigenvalue(shifted_lyapunov_form(g.Po, ao, 0.1));
    for (double c : {1e-3, 0.5, 7.0, 1e4}) {
        EXPECT_NEAR(max_eigenvalue(shifted_lyapunov_form(c * g.Pc, ac, 0.1)), c * base_c, 1e-10 * c);
        EXPECT_NEAR(max_eigenvalue(shifted_lyapunov_form(c * g.Po, ao, 0.1)), c * base_o, 1e-10 * c);
        EXPECT_LT(max_eigenvalue(shifted_lyapunov_form(c * g.Pc, ac, 0.1)), 0.0);
    }
}

TEST(Gains, UnobservablePairRejected) {
    Matrix A0 = Matrix::Identity(2, 2);
    RowVector C0(2);
    C0 << 1.0, 0.0;
    EXPECT_THROW(design_observer_gain(A0, C0, 0.1), synthesis_error);
}

TEST(ClosedLoop, BlockSpectrumIdentity) {
    for (int N : {1, 4, 8, 14}) {
        const auto m = model(N);
        const auto g = reference_gains();
        const auto cl = assemble_closed_loop(m, g);
        auto full = sorted_spectrum(eigenvalues(cl.F));
        std::vector<std::complex<double>> parts;
        for (const auto& b : closed_loop_blocks(m, g.L0, g.K0)) {
            const auto ev = eigenvalues(b);
            parts.insert(parts.end(), ev.data(), ev.data() + ev.size());
        }
        parts = sorted_spectrum(Eigen::Map<Eigen::VectorXcd>(parts.data(), static_cast<Eigen::Index>(parts.size())));
        ASSERT_EQ(full.size(), parts.size());
        for (std::size_t i = 0; i < full.size(); ++i) {
            EXPECT_LT(std::abs(full[i] - parts[i]), 1e-8) << "N=" << N << " i=" << i;
        }
        EXPECT_LT(spectral_abscissa(cl.F), -0.1);
    }
}

TEST(ClosedLoop, DegenerateAndSparsityShapes) {
    const auto m = model(1);
    const auto cl = assemble_closed_loop(m, reference_gains());
    EXPECT_EQ(cl.F.rows(), 3);
    EXPECT_EQ(cl.F.cols(), 3);
    const auto m8 = model(8);
    const auto cl8 = assemble_closed_loop(m8, reference_gains());
    EXPECT_EQ(cl8.Lcal.size(), 17);
    EXPECT_EQ(cl8.Lcal.tail(17 - 3).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(assemble_closed_loop(m8, Vector::Zero(2), RowVector::Zero(3)), argument_error);
}

TEST(ContinuousLmi, FeasibleWithReferenceAndDesignedGains) {
    const auto m = model(4);
    for (const auto& g : {reference_gains(), design_gains(m, 0.1)}) {
        const auto lmi = build_continuous_lmi(assemble_closed_loop(m, g), m, 0.1);
        const auto out = sdp::solve_feasibility(lmi.problem);
        ASSERT_EQ(out.status, sdp::Status::feasible) << out.message;
        EXPECT_GT(out.margin, 0.0);
        const auto cert = extract_certificate(lmi, out);
        EXPECT_GT(min_eigenvalue(cert.P), 0.0);
        EXPECT_GT(cert.alpha1, 0.0);
        // Independent recomputation of every block at the returned point.
        const auto x = certificate_point(lmi, cert);
        for (const auto& c : lmi.problem.constraints()) {
            EXPECT_LE(max_eigenvalue(lmi.problem.evaluate(c, x)), -out.margin * (1.0 - 1e-9));
        }
    }
}

TEST(ContinuousLmi, Affinity) {
    const auto m = model(4);
    const auto lmi = build_continuous_lmi(assemble_closed_loop(m, reference_gains()), m, 0.1);
    const auto& c = lmi.problem.constraints().front();
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd;
    Vector x(lmi.problem.num_vars()), y(lmi.problem.num_vars());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x(i) = nd(rng);
        y(i) = nd(rng);
    }
    const Matrix lhs = lmi.problem.evaluate(c, x + y);
    const Matrix rhs = lmi.problem.evaluate(c, x) + lmi.problem.evaluate(c, y) - c.constant;
    EXPECT_LT(max_abs(lhs - rhs), 1e-10 * (1.0 + max_abs(lhs)));
}

TEST(ContinuousLmi, WrongSizeRejected) {
    const auto m = model(4);
    const auto cl = assemble_closed_loop(model(5), reference_gains());
    EXPECT_THROW(build_continuous_lmi(cl, m, 0.1), argument_error);
}

TEST(SampledLmi, FeasibleAtReferenceCell) {
    const auto m = model(6);
    const auto lmi = build_sampled_lmis(assemble_closed_loop(m, reference_gains()), m, {6.0, 5.9, 0.002, 0.048});
    const auto out = sdp::solve_feasibility(lmi.problem);
    ASSERT_EQ(out.status, sdp::Status::feasible) << out.message;
    EXPECT_TRUE(sdp::check_certificate(lmi.problem, out.point, out.margins).passed);
}

TEST(SampledLmi, InfeasibleFarBeyondTable) {
    const auto m = model(6);
    const auto lmi = build_sampled_lmis(assemble_closed_loop(m, reference_gains()), m, {6.0, 5.9, 0.002, 0.2});
    EXPECT_EQ(sdp::solve_feasibility(lmi.problem).status, sdp::Status::infeasible);
}

TEST(SampledLmi, CertificateSurvivesSmallerBounds) {
    const auto m = model(6);
    const auto cl = assemble_closed_loop(m, reference_gains());
    const auto big = build_sampled_lmis(cl, m, {6.0, 5.9, 0.002, 0.048});
    const auto out = sdp::solve_feasibility(big.problem);
    ASSERT_EQ(out.status, sdp::Status::feasible);
    const auto cert = extract_certificate(big, out);
    for (const auto& [ty, tu] : std::vector<std::pair<double, double>>{{0.001, 0.048}, {0.002, 0.03}, {0.0005, 0.001}}) {
        const auto small = build_sampled_lmis(cl, m, {6.0, 5.9, ty, tu});
        const auto x = certificate_point(small, cert);
        ASSERT_EQ(x, certificate_point(big, cert));
        EXPECT_TRUE(sdp::check_certificate(small.problem, x, out.margins).passed) << ty << "," << tu;
        for (std::size_t i = 0; i < small.problem.constraints().size(); ++i) {
            const Matrix diff = big.problem.evaluate(big.problem.constraints()[i], x) -
                                small.problem.evaluate(small.problem.constraints()[i], x);
            EXPECT_GE(min_eigenvalue(diff), -1e-9 * (1.0 + max_abs(diff)));
        }
    }
}

TEST(SampledLmi, RejectsBadParameters) {
    const auto m = model(6);
    const auto cl = assemble_closed_loop(m, reference_gains());
    EXPECT_THROW(build_sampled_lmis(cl, m, {5.0, 5.9, 0.002, 0.048}), argument_error);
    EXPECT_THROW(build_sampled_lmis(cl, m, {6.0, 5.9, 0.0, 0.048}), argument_error);
}

TEST(Halanay, Examples) {
    EXPECT_EQ(halanay_rate(6.0, 5.9, 0.0), 6.0 - 5.9);
    EXPECT_EQ(halanay_rate(3.0, 1.0, 0.0), 2.0);
    EXPECT_NEAR(halanay_rate(6.0, 5.9, 0.01), 0.08944, 1e-3);
    EXPECT_NEAR(halanay_rate(6.0, 5.9, 0.01), halanay_fixed_point(6.0, 5.9, 0.01), 1e-9);
    EXPECT_NEAR(halanay_rate(6.0, 1e-9, 0.05), 6.0, 1e-6);
    EXPECT_THROW(halanay_rate(5.0, 6.0, 0.01), argument_error);
    EXPECT_THROW(halanay_rate(6.0, 5.9, -1.0), argument_error);
}

TEST(Halanay, RootBracketing) {
    for (double h : {1e-4, 0.002, 0.01, 0.05, 0.2}) {
        for (auto [d0, d1] : std::vector<std::pair<double, double>>{{6.0, 5.9}, {1.0, 0.5}, {20.0, 2.0}}) {
            EXPECT_LT(halanay_residual(0.0, d0, d1, h), 0.0);
            EXPECT_GT(halanay_residual(d0 - d1 + 1e-6, d0, d1, h), 0.0);
            const double r = halanay_rate(d0, d1, h);
            EXPECT_GT(r, 0.0);
            EXPECT_LE(r, d0 - d1);
            EXPECT_LT(std::abs(halanay_residual(r, d0, d1, h)), 1e-9);
        }
    }
}

TEST(TauSearch, BracketsTheLargestFeasibleValue) {
    const auto m = model(6);
    const auto g = reference_gains();
    const auto r = max_feasible_tau_u(m, g, 0.002, 6.0, 5.9);
    ASSERT_TRUE(r.tau_Mu.has_value());
    EXPECT_EQ(r.inconclusive, 0);
    const auto cl = assemble_closed_loop(m, g);
    EXPECT_EQ(probe_sampled(m, cl, {6.0, 5.9, 0.002, *r.tau_Mu}).status, sdp::Status::feasible);
    EXPECT_NE(probe_sampled(m, cl, {6.0, 5.9, 0.002, *r.tau_Mu + 0.001}).status, sdp::Status::feasible);
    EXPECT_GE(*r.tau_Mu, 0.048);
}

TEST(TauSearch, NonincreasingInMeasurementBound) {
    const auto m = model(6);
    const auto g = reference_gains();
    TauSearchOptions opt;
    opt.inconclusive_as_infeasible = true;
    double prev = 1.0;
    for (double ty : {0.002, 0.006, 0.010}) {
        const auto r = max_feasible_tau_u(m, g, ty, 6.0, 5.9, opt);
        const double v = r.tau_Mu.value_or(0.0);
        EXPECT_LE(v, prev) << ty;
        prev = v;
    }
}

TEST(TauSearch, InconclusiveProbesRaiseUnlessMapped) {
    const auto m = model(6);
    TauSearchOptions opt;
    opt.solver.max_iter = 1;
    EXPECT_THROW(max_feasible_tau_u(m, reference_gains(), 0.002, 6.0, 5.9, opt), inconclusive_error);
    opt.inconclusive_as_infeasible = true;
    const auto r = max_feasible_tau_u(m, reference_gains(), 0.002, 6.0, 5.9, opt);
    EXPECT_FALSE(r.tau_Mu.has_value());
    EXPECT_EQ(r.inconclusive, 1);
    EXPECT_THROW(max_feasible_tau_u(m, reference_gains(), 0.002, 6.0, 5.9, {0.0, 0.2, false, {}}), argument_error);
}

TEST(Sweep, EmptyGridAndCellLayout) {
    SweepSpec spec;
    spec.tau_My = {0.002};
    EXPECT_TRUE(run_sweep(spec).empty());
    spec.Ns = {6};
    spec.tau_My = {0.002, 0.010};
    spec.jobs = 2;
    const auto cells = run_sweep(spec);
    ASSERT_EQ(cells.size(), 2u);
    EXPECT_EQ(cells[0].tau_My, 0.002);
    EXPECT_EQ(cells[1].tau_My, 0.010);
    for (const auto& c : cells) {
        EXPECT_EQ(c.kind, SweepCell::Kind::value);
    }
    EXPECT_GE(cells[0].tau_Mu, cells[1].tau_Mu);
}
