#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>

#include "heatctl/sdp/solver.hpp"
#include "heatctl/sim/analysis.hpp"
#include "heatctl/sim/simulate.hpp"
#include "heatctl/synthesis/gains.hpp"
#include "heatctl/synthesis/halanay.hpp"
#include "heatctl/synthesis/lmi.hpp"

using namespace heatctl;

namespace {

ModalModel model(int N, double a = 10.0) {
    SystemConfig c;
    c.a = a;
    c.N = N;
    return reduced_matrices(c);
}

Vector first_mode(int M) {
    Vector w = Vector::Zero(M);
    w(0) = 1.0;
    return w;
}

SimConfig sampled_config(double T, double ty, double tu, std::uint64_t seed) {
    SimConfig c;
    c.T = T;
    c.sampled = true;
    c.tau_My = ty;
    c.tau_Mu = tu;
    c.s = jittered_instants(T, ty, seed);
    c.t = jittered_instants(T, tu, seed + 1);
    return c;
}

// Long-double reference for x' = mu x + f0 + f1 s over [0, h].
double analytic_step(double mu, double h, double x0, double f0, double f1) {
    const long double m = mu, t = h;
    const long double e = std::exp(m * t);
    return static_cast<double>(e * x0 + f0 * (e - 1.0L) / m + f1 * (e - 1.0L - m * t) / (m * m));
}

} // namespace

TEST(Stepping, OneStepExactness) {
    for (double mu : {-1e5, -9.8696, -0.5, 0.13040, 3.0}) {
        for (double h : {1e-4, 1e-3, 0.048}) {
            for (auto [x0, f0, f1] : std::vector<std::array<double, 3>>{{1.0, 0.0, 0.0}, {0.3, -2.0, 0.0}, {-1.0, 0.5, 4.0}}) {
                const double got = exponential_step(mu, h, x0, f0, f1);
                const double want = analytic_step(mu, h, x0, f0, f1);
                EXPECT_LE(std::abs(got - want), 1e-12 * std::max(1.0, std::abs(want))) << mu << " " << h;
            }
        }
    }
}

TEST(Stepping, NearZeroRateUsesSeries) {
    const double h = 0.01;
    for (double mu : {1e-10, -3e-7, 2e-3, -5.0}) {
        // x0 e^z + f0 h sum z^k/(k+1)! + f1 h^2 sum z^k/(k+2)!, summed in long double.
        const long double z = static_cast<long double>(mu) * h;
        long double p1 = 0.0L, p2 = 0.0L, term = 1.0L;
        for (int k = 0; k < 25; ++k) {
            p1 += term / (k + 1);
            p2 += term / ((k + 1) * (k + 2));
            term *= z / (k + 1);
        }
        const long double want = std::exp(z) + 2.0L * h * p1 + 3.0L * h * h * p2;
        EXPECT_NEAR(exponential_step(mu, h, 1.0, 2.0, 3.0), static_cast<double>(want), 1e-13) << mu;
    }
}

TEST(Continuous, OpenLoopGrowthIsExact) {
    const auto m = model(4);
    SimConfig c;
    c.T = 2.0;
    c.initial = first_mode(100);
    const auto tr = simulate_continuous(m, zero_gains(1), c);
    for (std::size_t k = 0; k < tr.size(); k += 250) {
        const double want = std::exp((10.0 - pi * pi) * tr.times[k]);
        EXPECT_NEAR(tr.w(static_cast<Eigen::Index>(k), 0), want, 1e-10 * want);
        EXPECT_NEAR(tr.w.row(static_cast<Eigen::Index>(k)).tail(99).cwiseAbs().maxCoeff(), 0.0, 1e-14);
    }
    EXPECT_LT(decay_rate_estimate(tr, 1.0), 0.0);
    EXPECT_NEAR(decay_rate_estimate(tr, 1.0), -(10.0 - pi * pi), 1e-8);
}

TEST(Continuous, PureDecayWithoutReaction) {
    SystemConfig s;
    s.a = 0.0;
    s.N = 2;
    const auto m = reduced_matrices(s);
    SimConfig c;
    c.T = 0.01;
    c.dt = 0.01;
    c.initial = first_mode(100);
    const auto tr = simulate_continuous(m, zero_gains(m.N0), c);
    ASSERT_EQ(tr.size(), 2u);
    EXPECT_NEAR(tr.w(1, 0), std::exp(-pi * pi * 0.01), 1e-10);
}

TEST(Continuous, ObserverErrorFollowsItsOwnDynamics) {
    const auto m = model(4);
    const auto g = reference_gains();
    SimConfig c;
    c.M = 4;
    c.T = 1.0;
    const auto tr = simulate_continuous(m, g, c);
    // e' = (diag(a - lambda_n) - l c') e with l = [L0, 0, ...]: the observer
    // sees every plant mode when M = N.
    Matrix E = Matrix::Zero(4, 4);
    Vector l = Vector::Zero(4);
    l(0) = g.L0(0);
    for (int n = 0; n < 4; ++n) {
        E(n, n) = 10.0 - eigenvalue(n + 1);
    }
    E -= l * m.c.head(4).transpose();
    const Vector e0 = tr.w.row(0).transpose();
    const Matrix err = tr.error();
    for (std::size_t k = 0; k < tr.size(); k += 100) {
        const Vector want = (E * tr.times[k]).exp() * e0;
        const Vector got = err.row(static_cast<Eigen::Index>(k)).transpose();
        EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-8) << tr.times[k];
    }
}

TEST(Continuous, ClosedLoopDecay) {
    const auto m = model(4);
    SimConfig c;
    c.M = 100;
    c.T = 10.0;
    const auto tr = simulate_continuous(m, reference_gains(), c);
    EXPECT_GE(decay_rate_estimate(tr, 5.0), 0.9 * 2.0 * 0.1);
    const auto designed = simulate_continuous(m, design_gains(m, 0.1), c);
    EXPECT_GE(decay_rate_estimate(designed, 5.0), 0.9 * 2.0 * 0.1);
}

TEST(Continuous, LyapunovFunctionalDecays) {
    const auto m = model(4);
    const auto g = reference_gains();
    const auto lmi = build_continuous_lmi(assemble_closed_loop(m, g), m, 0.1);
    const auto out = sdp::solve_feasibility(lmi.problem);
    ASSERT_EQ(out.status, sdp::Status::feasible);
    SimConfig c;
    c.T = 5.0;
    c.P = extract_certificate(lmi, out).P;
    const auto tr = simulate_continuous(m, g, c);
    ASSERT_EQ(tr.lyapunov.size(), tr.size());
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double bound = tr.lyapunov[0] * std::exp(-2.0 * 0.1 * tr.times[k]);
        EXPECT_LE(tr.lyapunov[k], bound * (1.0 + 1e-9)) << tr.times[k];
    }
}

TEST(Diagnostics, ZetaBoundHoldsEverywhere) {
    const auto m = model(4);
    SimConfig c;
    c.T = 3.0;
    c.initial_function = [](double x) { return std::sin(7.0 * pi * x) + x * (1.0 - x) * (0.5 - x); };
    const auto tr = simulate_continuous(m, reference_gains(), c);
    const auto m6 = model(6);
    const auto trs = simulate_sampled(m6, reference_gains(), sampled_config(3.0, 0.002, 0.048, 5));
    for (const auto* t : {&tr, &trs}) {
        for (std::size_t k = 0; k < t->size(); ++k) {
            EXPECT_LE(t->zeta[k] * t->zeta[k], t->tail_energy[k] * (1.0 + 1e-12) + 1e-300);
        }
    }
}

TEST(Sampled, HoldIsContinuousAndPiecewiseLinear) {
    const auto m = model(6);
    auto c = sampled_config(1.0, 0.002, 0.048, 3);
    const auto tr = simulate_sampled(m, reference_gains(), c);
    const std::set<double> updates(c.t.begin(), c.t.end());
    double last_update = 0.0;
    double u_at_update = tr.u[0];
    double v_held = tr.v[0];
    for (std::size_t k = 1; k < tr.size(); ++k) {
        const double t = tr.times[k];
        const double du = tr.u[k] - tr.u[k - 1];
        EXPECT_NEAR(du, tr.v[k - 1] * (t - tr.times[k - 1]), 1e-12 * (1.0 + std::abs(tr.u[k])));
        EXPECT_NEAR(tr.u[k], u_at_update + v_held * (t - last_update), 1e-10 * (1.0 + std::abs(tr.u[k])));
        if (tr.v[k] != tr.v[k - 1]) {
            EXPECT_TRUE(updates.count(t)) << "v changed off the update grid at t = " << t;
        }
        if (updates.count(t)) {
            last_update = t;
            u_at_update = tr.u[k];
            v_held = tr.v[k];
        }
    }
    // Every update instant is a step boundary.
    const std::set<double> times(tr.times.begin(), tr.times.end());
    for (double t : c.t) {
        if (t <= 1.0) {
            EXPECT_TRUE(times.count(t)) << t;
        }
    }
}

TEST(Sampled, ConvergesToContinuousAsSamplingRefines) {
    const auto m = model(4);
    const auto g = reference_gains();
    SimConfig cc;
    cc.T = 1.0;
    cc.dt = 1.0 / 256.0;
    const auto ref = simulate_continuous(m, g, cc);
    std::vector<double> gaps;
    for (int steps : {64, 128, 256}) {
        const double h = 1.0 / steps;
        SimConfig c;
        c.T = 1.0;
        c.dt = h;
        c.sampled = true;
        c.tau_My = c.tau_Mu = h;
        c.s = c.t = uniform_instants(1.0, h);
        const auto tr = simulate_sampled(m, g, c);
        double gap = 0.0;
        const int stride = 256 / steps;
        for (std::size_t k = 0; k < tr.size(); ++k) {
            const auto r = static_cast<Eigen::Index>(k) * stride;
            gap = std::max(gap, std::abs(tr.u[k] - ref.u[static_cast<std::size_t>(r)]));
            gap = std::max(gap, (tr.w.row(static_cast<Eigen::Index>(k)) - ref.w.row(r)).cwiseAbs().maxCoeff());
        }
        gaps.push_back(gap);
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        EXPECT_LT(gaps[i], 0.7 * gaps[i - 1]);
    }
    EXPECT_LT(gaps.back(), 0.05);
}

TEST(Sampled, JitteredDecayMeetsHalanayRate) {
    const auto m = model(6);
    auto c = sampled_config(10.0, 0.002, 0.048, 1);
    const auto tr = simulate_sampled(m, reference_gains(), c);
    EXPECT_GE(decay_rate_estimate(tr, 5.0), 0.8 * 2.0 * halanay_rate(6.0, 5.9, 0.002));
}

TEST(Sampled, RejectsBadSequences) {
    const auto m = model(6);
    auto c = sampled_config(1.0, 0.002, 0.048, 1);
    auto bad = c;
    std::swap(bad.s[3], bad.s[4]);
    EXPECT_THROW(simulate_sampled(m, reference_gains(), bad), argument_error);
    bad = c;
    bad.tau_Mu = 0.02;
    EXPECT_THROW(simulate_sampled(m, reference_gains(), bad), argument_error);
    bad = c;
    bad.s.resize(10);
    EXPECT_THROW(simulate_sampled(m, reference_gains(), bad), argument_error);
}

TEST(Sampling, JitterStaysWithinBounds) {
    const auto s = jittered_instants(1.0, 0.01, 42);
    ASSERT_GE(s.back(), 1.0);
    for (std::size_t k = 1; k < s.size(); ++k) {
        EXPECT_GE(s[k] - s[k - 1], 0.005 - 1e-15);
        EXPECT_LE(s[k] - s[k - 1], 0.01 + 1e-15);
    }
    EXPECT_EQ(s, jittered_instants(1.0, 0.01, 42));
    EXPECT_NE(s, jittered_instants(1.0, 0.01, 43));
}

TEST(Truncation, DoublingModesBarelyMovesTheRate) {
    const auto m4 = model(4);
    SimConfig c;
    c.T = 10.0;
    c.M = 100;
    const double r100 = decay_rate_estimate(simulate_continuous(m4, reference_gains(), c), 5.0);
    c.M = 200;
    const double r200 = decay_rate_estimate(simulate_continuous(m4, reference_gains(), c), 5.0);
    EXPECT_LT(std::abs(r200 - r100), 0.01 * std::abs(r100));

    const auto m6 = model(6);
    auto s = sampled_config(10.0, 0.002, 0.048, 1);
    s.M = 100;
    const double q100 = decay_rate_estimate(simulate_sampled(m6, reference_gains(), s), 5.0);
    s.M = 200;
    const double q200 = decay_rate_estimate(simulate_sampled(m6, reference_gains(), s), 5.0);
    EXPECT_LT(std::abs(q200 - q100), 0.01 * std::abs(q100));
}

TEST(Analysis, DecayRateExamples) {
    std::vector<double> t, pure, poly;
    for (int k = 0; k <= 100000; ++k) {
        const double s = 0.01 * k;
        t.push_back(s);
        pure.push_back(std::exp(-2.0 * 0.3 * s));
        poly.push_back((1.0 + s) * std::exp(-2.0 * 0.3 * s));
    }
    EXPECT_NEAR(decay_rate_estimate(t, pure, 5.0), 0.3, 1e-6);
    EXPECT_NEAR(decay_rate_estimate(t, poly, 900.0), 0.3, 0.01);
    pure[t.size() - 3] = 0.0;
    EXPECT_THROW(decay_rate_estimate(t, pure, 5.0), analysis_error);
    EXPECT_THROW(decay_rate_estimate(t, poly, 0.0), analysis_error);
    EXPECT_THROW(decay_rate_estimate({1.0}, {1.0}, 1.0), analysis_error);
}

TEST(Analysis, SobolevNormsAndReconstruction) {
    Vector h = Vector::Zero(1);
    h(0) = 1.0;
    EXPECT_NEAR(h1_seminorm_sq(h), pi * pi, 1e-12);
    EXPECT_NEAR(h1_norm(h), std::sqrt(1.0 + pi * pi), 1e-12);

    Vector w(3);
    w << 0.4, -0.2, 0.1;
    Vector xs = Vector::LinSpaced(11, 0.0, 1.0);
    const Vector z0 = reconstruct_z(w, 0.0, xs);
    for (Eigen::Index i = 0; i < xs.size(); ++i) {
        double direct = 0.0;
        for (int n = 1; n <= 3; ++n) {
            direct += w(n - 1) * std::sqrt(2.0) * std::sin(n * pi * xs(i));
        }
        EXPECT_NEAR(z0(i), direct, 1e-14);
    }
    const Vector z1 = reconstruct_z(w, 0.7, xs);
    EXPECT_NEAR(z1(0), 0.7, 1e-14);
    EXPECT_NEAR(z1(10), 0.0, 1e-14);
}

TEST(Export, TrajectoryCsvLayout) {
    const auto m = model(2);
    SimConfig c;
    c.M = 3;
    c.T = 0.002;
    const auto tr = simulate_continuous(m, reference_gains(), c);
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    const std::string s = os.str();
    EXPECT_EQ(s.substr(0, s.find("\r\n")), "time,u,v,y,h1_sq,usq,zeta,w_1,w_2,w_3,what_1,what_2");
    EXPECT_EQ(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')), tr.size() + 1);
}
