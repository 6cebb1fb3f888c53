#pragma once

#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/modal.hpp"

namespace heatctl {

// Observer gain L0 (length N0), controller gain K0 (length N0 + 1) and the
// Lyapunov matrices certifying them.
struct GainSet {
    Vector L0;
    RowVector K0;
    Matrix Po;
    Matrix Pc;
    double margin = 0.0;
};

// Closed-loop data in the coordinates
//   X = [u, what_1..what_N0, e_1..e_N0, what_N0+1..what_N, e_N0+1..e_N].
struct ClosedLoopMatrices {
    Matrix F;
    Vector Lcal;     // col{Ltilde, -L0, 0}
    RowVector Ktilde; // [K0 + a_row, 0]
    Matrix F1;       // Lcal * [0, C0, 0, C1]
    Vector Bcal;     // col{-Btilde0, 0, B1, 0}
    RowVector Khat;  // [K0, 0]
    Vector Ltilde;   // col{0, L0}
    RowVector a_row; // [-a, 0, ..., 0]
};

inline void check_gain_shapes(const ModalModel& m, const Vector& L0, const RowVector& K0) {
    if (L0.size() != m.N0 || K0.size() != m.N0 + 1) {
        throw argument_error("gain dimensions do not match N0 = " + std::to_string(m.N0) + " (L0 has " +
                             std::to_string(L0.size()) + " entries, K0 has " + std::to_string(K0.size()) + ")");
    }
}

inline Matrix observer_error_matrix(const ModalModel& m, const Vector& L0) { return m.A0 - L0 * m.C0; }

inline Matrix controller_matrix(const ModalModel& m, const RowVector& K0) { return m.At0 + m.Bt0 * K0; }

inline ClosedLoopMatrices assemble_closed_loop(const ModalModel& m, const Vector& L0, const RowVector& K0) {
    check_gain_shapes(m, L0, K0);
    const int n0 = m.N0;
    const int tail = m.N - m.N0;
    const int n = 2 * m.N + 1;
    const int i1 = n0 + 1;
    const int i2 = 2 * n0 + 1;
    const int i3 = i2 + tail;

    ClosedLoopMatrices cl;
    cl.Ltilde = Vector::Zero(n0 + 1);
    cl.Ltilde.tail(n0) = L0;
    cl.a_row = RowVector::Zero(n0 + 1);
    cl.a_row(0) = -m.a;

    cl.F = Matrix::Zero(n, n);
    cl.F.block(0, 0, i1, i1) = controller_matrix(m, K0);
    cl.F.block(0, i1, i1, n0) = cl.Ltilde * m.C0;
    cl.F.block(i1, i1, n0, n0) = observer_error_matrix(m, L0);
    if (tail > 0) {
        cl.F.block(0, i3, i1, tail) = cl.Ltilde * m.C1;
        cl.F.block(i1, i3, n0, tail) = -L0 * m.C1;
        cl.F.block(i2, 0, tail, i1) = -m.B1 * (K0 + cl.a_row);
        cl.F.block(i2, i2, tail, tail) = m.A1;
        cl.F.block(i3, i3, tail, tail) = m.A1;
    }

    cl.Lcal = Vector::Zero(n);
    cl.Lcal.head(i1) = cl.Ltilde;
    cl.Lcal.segment(i1, n0) = -L0;

    cl.Ktilde = RowVector::Zero(n);
    cl.Ktilde.head(i1) = K0 + cl.a_row;
    cl.Khat = RowVector::Zero(n);
    cl.Khat.head(i1) = K0;

    RowVector select = RowVector::Zero(n);
    select.segment(i1, n0) = m.C0;
    if (tail > 0) {
        select.segment(i3, tail) = m.C1;
    }
    cl.F1 = cl.Lcal * select;

    cl.Bcal = Vector::Zero(n);
    cl.Bcal.head(i1) = -m.Bt0;
    if (tail > 0) {
        cl.Bcal.segment(i2, tail) = m.B1;
    }
    return cl;
}

inline ClosedLoopMatrices assemble_closed_loop(const ModalModel& m, const GainSet& g) {
    return assemble_closed_loop(m, g.L0, g.K0);
}

// The diagonal blocks whose spectra make up spec(F).
inline std::vector<Matrix> closed_loop_blocks(const ModalModel& m, const Vector& L0, const RowVector& K0) {
    check_gain_shapes(m, L0, K0);
    std::vector<Matrix> out{controller_matrix(m, K0), observer_error_matrix(m, L0)};
    if (m.N > m.N0) {
        out.push_back(m.A1);
        out.push_back(m.A1);
    }
    return out;
}

} // namespace heatctl
