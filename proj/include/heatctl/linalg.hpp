#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "heatctl/error.hpp"

namespace heatctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

inline Matrix symmetrized(const Matrix& m) { return 0.5 * (m + m.transpose()); }

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

// Largest |m_ij - m_ji| relative to max(1, max |m_ij|).
inline double asymmetry(const Matrix& m) {
    if (m.rows() != m.cols()) {
        return std::numeric_limits<double>::infinity();
    }
    if (m.size() == 0) {
        return 0.0;
    }
    return (m - m.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, max_abs(m));
}

// Induced infinity norm (maximum absolute row sum).
inline double norm_inf(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline Vector sym_eigenvalues(const Matrix& m) {
    if (m.size() == 0) {
        return Vector();
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrized(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline double max_eigenvalue(const Matrix& m) {
    const Vector ev = sym_eigenvalues(m);
    return ev.size() == 0 ? -std::numeric_limits<double>::infinity() : ev(ev.size() - 1);
}

inline double min_eigenvalue(const Matrix& m) {
    const Vector ev = sym_eigenvalues(m);
    return ev.size() == 0 ? std::numeric_limits<double>::infinity() : ev(0);
}

inline Eigen::VectorXcd eigenvalues(const Matrix& m) {
    if (m.size() == 0) {
        return Eigen::VectorXcd();
    }
    Eigen::EigenSolver<Matrix> es(m, false);
    return es.eigenvalues();
}

// Maximum real part of the spectrum; -inf for an empty matrix.
inline double spectral_abscissa(const Matrix& m) {
    const Eigen::VectorXcd ev = eigenvalues(m);
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        best = std::max(best, ev(i).real());
    }
    return best;
}

inline int numerical_rank(const Matrix& m, double rel_tol = 1e-10) {
    if (m.size() == 0) {
        return 0;
    }
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector s = svd.singularValues();
    const double cut = rel_tol * std::max(1.0, s(0));
    return static_cast<int>((s.array() > cut).count());
}

// [B, AB, ..., A^{n-1}B]
inline Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    Matrix out(n, n * b.cols());
    Matrix block = b;
    for (Eigen::Index k = 0; k < n; ++k) {
        out.middleCols(k * b.cols(), b.cols()) = block;
        block = a * block;
    }
    return out;
}

// [C; CA; ...; CA^{n-1}]
inline Matrix observability_matrix(const Matrix& a, const Matrix& c) {
    return controllability_matrix(a.transpose(), c.transpose()).transpose();
}

// Solves A^T P + P A = -Q for P through the Kronecker form. Intended for the
// small (N0 + 1)-sized blocks used in gain certification.
inline Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const Eigen::Index n = a.rows();
    if (a.cols() != n || q.rows() != n || q.cols() != n) {
        throw argument_error("solve_lyapunov: dimension mismatch");
    }
    const Matrix id = Matrix::Identity(n, n);
    Matrix kron(n * n, n * n);
    // vec(A^T P + P A) = (I (x) A^T + A^T (x) I) vec(P)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            kron.block(i * n, j * n, n, n) = id(i, j) * a.transpose() + a(j, i) * id;
        }
    }
    const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
    const Vector sol = kron.fullPivLu().solve(rhs);
    return symmetrized(Eigen::Map<const Matrix>(sol.data(), n, n));
}

} // namespace heatctl
