#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/quadrature.hpp"
#include "heatctl/sim/analysis.hpp"

using namespace heatctl;

namespace {

// Partial sums over n = N+1 .. last, accumulated smallest-first.
double b_sq_partial(int N, long last) {
    double s = 0.0;
    for (long n = last; n > N; --n) {
        const double k = static_cast<double>(n) * pi;
        s += 2.0 / (k * k);
    }
    return s;
}

double lambda_34_partial(int N, long last) {
    double s = 0.0;
    for (long n = last; n > N; --n) {
        const double k = static_cast<double>(n) * pi;
        s += std::pow(k * k, -0.75);
    }
    return s;
}

} // namespace

TEST(Eigenpairs, FirstEigenvalue) {
    EXPECT_DOUBLE_EQ(eigenpair(1).lambda, pi * pi);
    EXPECT_NEAR(eigenvalue(1), 9.8696, 1e-4);
    EXPECT_NEAR(eigenpair(2).phi(0.5), 0.0, 1e-15);
    EXPECT_THROW(eigenpair(0), argument_error);
}

TEST(Eigenpairs, OrthonormalUnderQuadrature) {
    for (int m = 1; m <= 20; ++m) {
        for (int n = 1; n <= 20; ++n) {
            const auto pm = eigenpair(m);
            const auto pn = eigenpair(n);
            const double ip = inner_product([&](double x) { return pm.phi(x); }, [&](double x) { return pn.phi(x); });
            EXPECT_NEAR(ip, m == n ? 1.0 : 0.0, 1e-8) << m << "," << n;
        }
    }
}

TEST(InputCoefficients, MatchQuadrature) {
    EXPECT_NEAR(input_coeff(1), 0.450158, 1e-6);
    for (int n = 1; n <= 50; ++n) {
        const auto p = eigenpair(n);
        // Adaptive Gauss-Kronrod, independent of the library's Simpson rule.
        const double quad = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            [&](double x) { return (1.0 - x) * p.phi(x); }, 0.0, 1.0, 15, 1e-14);
        EXPECT_NEAR(input_coeff(n), quad, 1e-9) << n;
        EXPECT_NE(input_coeff(n), 0.0);
    }
}

TEST(OutputCoefficients, Examples) {
    EXPECT_NEAR(output_coeff(2, 0.5), 0.0, 1e-15);
    EXPECT_NEAR(output_coeff(1, 1.0 / std::sqrt(2.0)), std::sqrt(2.0) * std::sin(pi / std::sqrt(2.0)), 1e-15);
    EXPECT_NEAR(output_coeff(1, 1.0 / std::sqrt(2.0)), 1.12529, 1e-5);
    for (int n = 1; n <= 200; ++n) {
        EXPECT_LE(std::abs(output_coeff(n, 0.3141)), std::sqrt(2.0) + 1e-15);
    }
    EXPECT_THROW(output_coeff(1, 1.0), argument_error);
}

TEST(SelectN0, Examples) {
    EXPECT_EQ(select_N0(10.0, 0.1), 1);
    EXPECT_EQ(select_N0(0.0, 0.1), 1);
    EXPECT_EQ(select_N0(-5.0, 0.1), 1);
    EXPECT_EQ(select_N0(50.0, 0.1), 2);
    EXPECT_THROW(select_N0(10.0, 0.0), argument_error);
}

TEST(SelectN0, TailModesDecayFasterThanDelta) {
    for (double a : {-3.0, 0.0, 5.0, 10.0, 40.0, 90.0, 200.0}) {
        for (double d : {0.01, 0.1, 1.0}) {
            const int n0 = select_N0(a, d);
            EXPECT_LT(-eigenvalue(n0 + 1) + a, -d);
            if (n0 > 1) {
                EXPECT_GE(-eigenvalue(n0) + a, -d);
            }
        }
    }
}

TEST(Assumption, Examples) {
    EXPECT_FALSE(check_assumption1(0.5, 2));
    EXPECT_TRUE(check_assumption1(1.0 / std::sqrt(2.0), 1, 1e-6));
    EXPECT_FALSE(check_assumption1(1.0 / 3.0, 3));
    EXPECT_EQ(first_vanishing_output(1.0 / 3.0, 3), 3);
}

TEST(ReducedMatrices, SingleModeExample) {
    const auto m = reduced_matrices({});
    ASSERT_EQ(m.N0, 1);
    EXPECT_NEAR(m.A0(0, 0), 0.13040, 1e-5);
    EXPECT_NEAR(m.A0(0, 0), 10.0 - pi * pi, 1e-14);
    EXPECT_EQ(m.At0(0, 0), 0.0);
    EXPECT_EQ(m.At0(0, 1), 0.0);
    EXPECT_NEAR(m.At0(1, 0), 10.0 * 0.450158, 1e-5);
    EXPECT_NEAR(m.At0(1, 1), 0.13040, 1e-5);
    EXPECT_EQ(m.Bt0(0), 1.0);
    EXPECT_EQ(m.A1.rows(), 3);
}

TEST(ReducedMatrices, VanishingOutputNamesTheMode) {
    SystemConfig c;
    c.x_star = 0.5;
    c.N0 = 2;
    try {
        reduced_matrices(c);
        FAIL() << "expected config_error";
    } catch (const config_error& e) {
        EXPECT_EQ(e.index(), 2);
        EXPECT_NE(std::string(e.what()).find("c_2"), std::string::npos);
    }
}

TEST(ReducedMatrices, HautusRanks) {
    for (double a : {10.0, 50.0, 120.0}) {
        SystemConfig c;
        c.a = a;
        c.N = 6;
        const auto m = reduced_matrices(c);
        EXPECT_EQ(numerical_rank(observability_matrix(m.A0, m.C0)), m.N0) << a;
        EXPECT_EQ(numerical_rank(controllability_matrix(m.At0, m.Bt0)), m.N0 + 1) << a;
    }
}

TEST(TailBounds, Substitution) {
    const auto [b2, l34] = tail_bounds(1);
    EXPECT_NEAR(b2, 0.20264, 1e-5);
    EXPECT_NEAR(l34, 0.35917, 1e-5);
    EXPECT_THROW(tail_bounds(0), argument_error);
}

TEST(TailBounds, DominatePartialSums) {
    const long terms = 1000000;
    for (int N = 1; N <= 50; ++N) {
        const auto [b2, l34] = tail_bounds(N);
        EXPECT_LT(b_sq_partial(N, N + terms), b2) << N;
        EXPECT_LT(lambda_34_partial(N, N + terms), l34) << N;
    }
    // sum_{n>=5} 2/(n pi)^2 = 1/3 - (2/pi^2)(1 + 1/4 + 1/9 + 1/16), minus a remainder below 2/(pi^2 10^6)
    const double closed = 1.0 / 3.0 - 2.0 / (pi * pi) * (1.0 + 0.25 + 1.0 / 9.0 + 0.0625);
    EXPECT_NEAR(b_sq_partial(4, 4 + terms), closed, 2.1e-7);
    EXPECT_LE(b_sq_partial(4, 4 + terms), 0.05066);
    EXPECT_LE(lambda_34_partial(4, 4 + terms), 0.17959);
}

TEST(SobolevIdentity, DerivativeNormMatchesWeightedSum) {
    const double coeffs[] = {0.7, -0.3, 0.25, 0.1, -0.05};
    Vector h(5);
    for (int i = 0; i < 5; ++i) {
        h(i) = coeffs[i];
    }
    const double quad = simpson(
        [&](double x) {
            double d = 0.0;
            for (int n = 1; n <= 5; ++n) {
                d += h(n - 1) * eigenpair(n).dphi(x);
            }
            return d * d;
        },
        0.0, 1.0);
    EXPECT_NEAR(quad / h1_seminorm_sq(h), 1.0, 1e-6);

    Vector single = Vector::Zero(1);
    single(0) = 1.0;
    EXPECT_NEAR(h1_seminorm_sq(single), pi * pi, 1e-12);
    EXPECT_NEAR(h1_norm_sq(single), 1.0 + pi * pi, 1e-12);
}
