#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/sdp/certificate.hpp"
#include "heatctl/sdp/problem.hpp"

namespace heatctl::sdp {

enum class Status { feasible, infeasible, inconclusive };

inline std::string to_string(Status s) {
    switch (s) {
    case Status::feasible: return "feasible";
    case Status::infeasible: return "infeasible";
    case Status::inconclusive: return "inconclusive";
    }
    return "?";
}

struct SolveOptions {
    int max_iter = 100;
    double tol = 1e-9;
    // Strictness required of a returned point. Non-positive means each
    // constraint gets 1e-7 * (1 + inf-norm of its constant block) and each
    // positive block 1e-7.
    double margin_eps = 0.0;
    double step_fraction = 0.95;
};

// Largest relative primal residual at which a dual bound is still trusted.
inline constexpr double infeasibility_pinf = 1e-6;

// One margin per constraint, then one per positive block.
inline std::vector<double> resolved_margins(const LmiProblem& p, const SolveOptions& opt) {
    std::vector<double> out;
    for (const auto& c : p.constraints()) {
        out.push_back(opt.margin_eps > 0.0 ? opt.margin_eps : 1e-7 * (1.0 + norm_inf(c.constant)));
    }
    for (std::size_t j = 0; j < p.positivity().size(); ++j) {
        out.push_back(opt.margin_eps > 0.0 ? opt.margin_eps : 1e-7);
    }
    return out;
}

struct SolveOutcome {
    Status status = Status::inconclusive;
    Vector point;        // meaningful when feasible (or optimal in minimize mode)
    double margin = 0.0; // smallest of the margins the point was certified with
    std::vector<double> margins;
    double best_t = std::numeric_limits<double>::infinity(); // smallest max-eig reached
    double lower_bound = -std::numeric_limits<double>::infinity(); // proven bound on that minimum
    double objective = 0.0;
    int iterations = 0;
    double primal_infeasibility = 0.0;
    double dual_infeasibility = 0.0;
    double relative_gap = 0.0;
    std::string message;
};

namespace detail {

// One symmetric block of the standard-form problem
//   maximize b'y  s.t.  S = C - sum_i y_i A_i >= 0,
// with every A_i stored as sum_r lam_r q_r q_r' (columns of Q, grouped by owner).
struct Block {
    int dim = 0;
    Matrix C;
    Matrix Q;
    Vector lam;
    std::vector<int> owner;
    std::vector<int> run_begin; // start column of each owner run, plus a sentinel
    std::vector<int> run_of;    // run index of each column
};

struct Conic {
    int m = 0;
    Vector b;
    std::vector<Block> blocks;
};

// Low-rank factors of a symmetric matrix restricted to its nonzero rows.
inline void factor_coefficient(const Matrix& a, int owner, std::vector<Vector>& cols, std::vector<double>& lams,
                               std::vector<int>& owners) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> support;
    for (int i = 0; i < n; ++i) {
        if (a.row(i).cwiseAbs().maxCoeff() > 0.0) {
            support.push_back(i);
        }
    }
    if (support.empty()) {
        return;
    }
    const int k = static_cast<int>(support.size());
    Matrix sub(k, k);
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            sub(i, j) = a(support[i], support[j]);
        }
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(sub);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    for (int r = 0; r < k; ++r) {
        const double l = es.eigenvalues()(r);
        if (std::abs(l) <= 1e-13 * top) {
            continue;
        }
        Vector q = Vector::Zero(n);
        for (int i = 0; i < k; ++i) {
            q(support[i]) = es.eigenvectors()(i, r);
        }
        cols.push_back(std::move(q));
        lams.push_back(l);
        owners.push_back(owner);
    }
}

// Block from dense coefficients; coeffs are (variable, matrix) pairs sorted by variable.
inline Block make_block(const Matrix& c, const std::vector<std::pair<int, Matrix>>& coeffs) {
    Block blk;
    blk.dim = static_cast<int>(c.rows());
    blk.C = c;
    std::vector<Vector> cols;
    std::vector<double> lams;
    for (const auto& [k, a] : coeffs) {
        factor_coefficient(a, k, cols, lams, blk.owner);
    }
    const int r = static_cast<int>(cols.size());
    blk.Q.resize(blk.dim, r);
    blk.lam.resize(r);
    for (int j = 0; j < r; ++j) {
        blk.Q.col(j) = cols[j];
        blk.lam(j) = lams[j];
    }
    blk.run_of.assign(r, 0);
    for (int j = 0; j < r; ++j) {
        if (j == 0 || blk.owner[j] != blk.owner[j - 1]) {
            blk.run_begin.push_back(j);
        }
        blk.run_of[j] = static_cast<int>(blk.run_begin.size()) - 1;
    }
    blk.run_begin.push_back(r);
    return blk;
}

// (A_i . M) for every i, M arbitrary square.
inline void apply_adjoint(const Block& blk, const Matrix& m, Vector& out) {
    if (blk.Q.cols() == 0) {
        return;
    }
    const Matrix mq = m * blk.Q;
    for (int j = 0; j < blk.Q.cols(); ++j) {
        out(blk.owner[j]) += blk.lam(j) * blk.Q.col(j).dot(mq.col(j));
    }
}

// sum_i y_i A_i
inline Matrix combine(const Block& blk, const Vector& y) {
    if (blk.Q.cols() == 0) {
        return Matrix::Zero(blk.dim, blk.dim);
    }
    Vector w(blk.Q.cols());
    for (int j = 0; j < blk.Q.cols(); ++j) {
        w(j) = blk.lam(j) * y(blk.owner[j]);
    }
    return blk.Q * w.asDiagonal() * blk.Q.transpose();
}

// H_ij += tr(A_i X A_j Sinv), from the Gram matrices Q'XQ and Q'SinvQ.
inline void add_schur(const Block& blk, const Matrix& x, const Matrix& sinv, Matrix& h) {
    const int r = static_cast<int>(blk.Q.cols());
    if (r == 0) {
        return;
    }
    const Matrix u = x * blk.Q;
    const Matrix v = sinv * blk.Q;
    constexpr int chunk = 256;
    const int nruns = static_cast<int>(blk.run_begin.size()) - 1;
    for (int c0 = 0; c0 < r; c0 += chunk) {
        const int k = std::min(chunk, r - c0);
        const int width = r - c0;
        const Matrix g1 = blk.Q.rightCols(width).transpose() * u.middleCols(c0, k);
        const Matrix g2 = blk.Q.rightCols(width).transpose() * v.middleCols(c0, k);
        for (int rr = 0; rr < k; ++rr) {
            const int gr = c0 + rr;
            const int own = blk.owner[gr];
            const double lr = blk.lam(gr);
            const double* p1 = g1.col(rr).data();
            const double* p2 = g2.col(rr).data();
            h(own, own) += lr * lr * p1[rr] * p2[rr];
            for (int run = blk.run_of[gr]; run < nruns; ++run) {
                const int s0 = std::max(blk.run_begin[run], gr + 1);
                const int s1 = blk.run_begin[run + 1];
                if (s0 >= s1) {
                    continue;
                }
                double acc = 0.0;
                for (int s = s0; s < s1; ++s) {
                    acc += blk.lam(s) * p1[s - c0] * p2[s - c0];
                }
                if (acc != 0.0) {
                    const int j = blk.owner[s0];
                    h(own, j) += lr * acc;
                    h(j, own) += lr * acc;
                }
            }
        }
    }
}

// Largest alpha <= cap with m + alpha * d >= 0 (m positive definite).
inline double step_to_boundary(const Matrix& m, const Matrix& d, double cap) {
    Eigen::LLT<Matrix> llt(m);
    if (llt.info() != Eigen::Success) {
        return 0.0;
    }
    Matrix t = llt.matrixL().solve(d);
    t = llt.matrixL().solve(t.transpose()).transpose();
    const double low = min_eigenvalue(symmetrized(t));
    if (low >= 0.0) {
        return cap;
    }
    return std::min(cap, -1.0 / low);
}

enum class CoreExit { converged, early_stop, primal_ray, max_iter, stalled, numerical };

struct CoreResult {
    CoreExit exit = CoreExit::max_iter;
    Vector y;
    double pobj = 0.0;
    double dobj = 0.0;
    double pinf = 0.0;
    double dinf = 0.0;
    double gap = 0.0;
    double residual_bound = 0.0; // ||y|| * ||b - A(X)||
    // Largest -<C, X> - residual_bound over iterates with small primal residual.
    double best_bound = -std::numeric_limits<double>::infinity();
    int iterations = 0;
};

// Returns true to stop immediately with the given y.
using IterateHook = std::function<bool(const Vector& y)>;

// Infeasible-start primal-dual path following (HKM direction, Mehrotra
// predictor-corrector).
inline CoreResult solve_conic(const Conic& pr, int max_iter, double tol, double step_fraction,
                              const IterateHook& hook, bool detect_primal_ray) {
    const int m = pr.m;
    const auto nb = pr.blocks.size();
    std::vector<Matrix> X(nb), S(nb);
    double total_dim = 0.0;
    double normC = 0.0;
    for (std::size_t k = 0; k < nb; ++k) {
        const Block& blk = pr.blocks[k];
        const double n = blk.dim;
        total_dim += n;
        const double cn = blk.C.norm();
        normC += cn * cn;
        double xi = std::max(10.0, std::sqrt(n));
        for (int j = 0; j < blk.Q.cols(); ++j) {
            xi = std::max(xi, n * (1.0 + std::abs(pr.b(blk.owner[j]))) / (1.0 + std::abs(blk.lam(j))));
        }
        const double eta = std::max({10.0, std::sqrt(n), cn});
        X[k] = xi * Matrix::Identity(blk.dim, blk.dim);
        S[k] = eta * Matrix::Identity(blk.dim, blk.dim);
    }
    normC = std::sqrt(normC);
    const double normb = pr.b.norm();

    CoreResult res;
    Vector y = Vector::Zero(m);
    std::vector<Matrix> Sinv(nb), Rd(nb);
    int slow_steps = 0;

    for (int it = 0;; ++it) {
        res.iterations = it;
        Vector ax = Vector::Zero(m);
        double pobj = 0.0;
        double xs = 0.0;
        double rd2 = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            const Block& blk = pr.blocks[k];
            apply_adjoint(blk, X[k], ax);
            pobj += (blk.C.array() * X[k].array()).sum();
            xs += (X[k].array() * S[k].array()).sum();
            Rd[k] = blk.C - combine(blk, y) - S[k];
            rd2 += Rd[k].squaredNorm();
        }
        const Vector rp = pr.b - ax;
        const double dobj = pr.b.dot(y);
        const double mu = xs / total_dim;
        res.y = y;
        res.pobj = pobj;
        res.dobj = dobj;
        res.pinf = rp.norm() / (1.0 + normb);
        res.dinf = std::sqrt(rd2) / (1.0 + normC);
        res.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
        res.residual_bound = y.norm() * rp.norm();
        if (res.pinf <= infeasibility_pinf) {
            res.best_bound = std::max(res.best_bound, -pobj - res.residual_bound);
        }

        if (hook && hook(y)) {
            res.exit = CoreExit::early_stop;
            return res;
        }
        if (res.pinf <= tol && res.dinf <= tol && res.gap <= tol) {
            res.exit = CoreExit::converged;
            return res;
        }
        // b'y <= <C, X> + y'(b - A(X)) for every dual-feasible y, so a nearly
        // primal-feasible X with negative corrected objective settles
        // infeasibility of the epigraph form.
        if (detect_primal_ray && res.pinf <= tol && -pobj - res.residual_bound > tol * (1.0 + std::abs(pobj))) {
            res.exit = CoreExit::primal_ray;
            return res;
        }
        if (it >= max_iter) {
            res.exit = CoreExit::max_iter;
            return res;
        }

        for (std::size_t k = 0; k < nb; ++k) {
            Eigen::LLT<Matrix> llt(S[k]);
            if (llt.info() != Eigen::Success) {
                res.exit = CoreExit::numerical;
                return res;
            }
            Sinv[k] = llt.solve(Matrix::Identity(S[k].rows(), S[k].cols()));
            Sinv[k] = symmetrized(Sinv[k]);
        }
        Matrix H = Matrix::Zero(m, m);
        for (std::size_t k = 0; k < nb; ++k) {
            add_schur(pr.blocks[k], X[k], Sinv[k], H);
        }
        Eigen::LLT<Matrix> hchol(H);
        double reg = 1e-14 * std::max(1.0, H.diagonal().cwiseAbs().maxCoeff());
        while (hchol.info() != Eigen::Success && reg < 1e-2) {
            Matrix hr = H;
            hr.diagonal().array() += reg;
            hchol.compute(hr);
            reg *= 100.0;
        }
        if (hchol.info() != Eigen::Success) {
            res.exit = CoreExit::numerical;
            return res;
        }

        auto direction = [&](const std::vector<Matrix>& rc, Vector& dy, std::vector<Matrix>& dX,
                             std::vector<Matrix>& dS) {
            Vector rhs = rp;
            std::vector<Matrix> g(nb);
            Vector tmp = Vector::Zero(m);
            for (std::size_t k = 0; k < nb; ++k) {
                g[k] = (rc[k] - X[k] * Rd[k]) * Sinv[k];
                apply_adjoint(pr.blocks[k], g[k], tmp);
            }
            rhs -= tmp;
            dy = hchol.solve(rhs);
            dX.resize(nb);
            dS.resize(nb);
            for (std::size_t k = 0; k < nb; ++k) {
                dS[k] = Rd[k] - combine(pr.blocks[k], dy);
                dX[k] = symmetrized((rc[k] - X[k] * dS[k]) * Sinv[k]);
            }
        };

        std::vector<Matrix> rc(nb);
        for (std::size_t k = 0; k < nb; ++k) {
            rc[k] = -X[k] * S[k];
        }
        Vector dyp;
        std::vector<Matrix> dXp, dSp;
        direction(rc, dyp, dXp, dSp);
        double ap = 1.0;
        double ad = 1.0;
        for (std::size_t k = 0; k < nb; ++k) {
            ap = std::min(ap, step_to_boundary(X[k], dXp[k], 1.0));
            ad = std::min(ad, step_to_boundary(S[k], dSp[k], 1.0));
        }
        double xs_aff = 0.0;
        for (std::size_t k = 0; k < nb; ++k) {
            xs_aff += ((X[k] + ap * dXp[k]).array() * (S[k] + ad * dSp[k]).array()).sum();
        }
        const double ratio = std::clamp(xs_aff / xs, 0.0, 1.0);
        const double sigma = std::min(1.0, std::pow(ratio, 3.0));

        for (std::size_t k = 0; k < nb; ++k) {
            const int n = pr.blocks[k].dim;
            rc[k] = sigma * mu * Matrix::Identity(n, n) - X[k] * S[k] - dXp[k] * dSp[k];
        }
        Vector dy;
        std::vector<Matrix> dX, dS;
        direction(rc, dy, dX, dS);
        ap = 1.0 / step_fraction;
        ad = 1.0 / step_fraction;
        for (std::size_t k = 0; k < nb; ++k) {
            ap = std::min(ap, step_to_boundary(X[k], dX[k], ap));
            ad = std::min(ad, step_to_boundary(S[k], dS[k], ad));
        }
        ap = std::min(1.0, step_fraction * ap);
        ad = std::min(1.0, step_fraction * ad);
        for (std::size_t k = 0; k < nb; ++k) {
            X[k] = symmetrized(X[k] + ap * dX[k]);
            S[k] = symmetrized(S[k] + ad * dS[k]);
        }
        y += ad * dy;

        slow_steps = (std::max(ap, ad) < 1e-6) ? slow_steps + 1 : 0;
        if (slow_steps >= 5) {
            res.iterations = it + 1;
            res.exit = CoreExit::stalled;
            return res;
        }
    }
}

// Maps problem variables to solver unknowns, dropping variables that appear
// nowhere and rescaling the rest so every coefficient has unit-order norm.
struct VariableMap {
    std::vector<int> solver_index; // -1 for unused variables
    std::vector<double> scale;
    int count = 0;
};

inline VariableMap map_variables(const LmiProblem& p) {
    const int nv = p.num_vars();
    VariableMap vm;
    vm.solver_index.assign(nv, -1);
    vm.scale.assign(nv, 1.0);
    std::vector<double> peak(nv, 0.0);
    for (const auto& c : p.constraints()) {
        for (const auto& [k, a] : c.terms) {
            peak[k] = std::max(peak[k], a.norm());
        }
    }
    for (int idx : p.positivity()) {
        const auto& v = p.variables()[idx];
        for (int i = 0; i < v.dim; ++i) {
            for (int j = i; j < v.dim; ++j) {
                peak[v.index(i, j)] = std::max(peak[v.index(i, j)], i == j ? 1.0 : std::sqrt(2.0));
            }
        }
    }
    for (int k = 0; k < nv; ++k) {
        if (peak[k] > 0.0) {
            vm.solver_index[k] = vm.count++;
            vm.scale[k] = 1.0 / peak[k];
        }
    }
    return vm;
}

// Builds the blocks "sum_k x_k F_k + F_0 <= -shift" in standard form, with
// x_k = scale_k * y_k. `extra` (if >= 0) is an additional unknown entering
// every block with coefficient -I (the epigraph variable).
inline std::vector<Block> standard_blocks(const LmiProblem& p, const VariableMap& vm, int extra) {
    std::vector<Block> out;
    auto build = [&](const Matrix& f0, const std::vector<std::pair<int, Matrix>>& terms) {
        std::vector<std::pair<int, Matrix>> coeffs;
        for (const auto& [k, a] : terms) {
            if (vm.solver_index[k] >= 0) {
                coeffs.emplace_back(vm.solver_index[k], vm.scale[k] * a);
            }
        }
        std::sort(coeffs.begin(), coeffs.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        if (extra >= 0) {
            coeffs.emplace_back(extra, -Matrix::Identity(f0.rows(), f0.cols()));
        }
        out.push_back(make_block(-f0, coeffs));
    };
    for (const auto& c : p.constraints()) {
        build(c.constant, c.terms);
    }
    for (int idx : p.positivity()) {
        const auto& v = p.variables()[idx];
        std::vector<std::pair<int, Matrix>> terms;
        for (int i = 0; i < v.dim; ++i) {
            for (int j = i; j < v.dim; ++j) {
                Matrix e = Matrix::Zero(v.dim, v.dim);
                e(i, j) = -1.0;
                e(j, i) = -1.0;
                terms.emplace_back(v.index(i, j), std::move(e));
            }
        }
        build(Matrix::Zero(v.dim, v.dim), terms);
    }
    return out;
}

inline Vector unscale(const VariableMap& vm, const Vector& y) {
    Vector x = Vector::Zero(static_cast<Eigen::Index>(vm.solver_index.size()));
    for (std::size_t k = 0; k < vm.solver_index.size(); ++k) {
        if (vm.solver_index[k] >= 0) {
            x(static_cast<Eigen::Index>(k)) = vm.scale[k] * y(vm.solver_index[k]);
        }
    }
    return x;
}

} // namespace detail

// Decides strict feasibility of {constraints < 0, positive blocks > 0} by
// minimizing t subject to every block + margin I <= t I. Feasible points are
// returned only after an independent eigenvalue check with the resolved
// margins; `lower_bound` is a proven bound on the largest eigenvalue any
// point can reach over the unshifted blocks.
inline SolveOutcome solve_feasibility(const LmiProblem& problem, const SolveOptions& opt = {}) {
    SolveOutcome out;
    out.margins = resolved_margins(problem, opt);
    out.margin = out.margins.empty() ? 0.0 : *std::min_element(out.margins.begin(), out.margins.end());
    if (problem.constraints().empty() && problem.positivity().empty()) {
        out.status = Status::feasible;
        out.point = Vector::Zero(problem.num_vars());
        out.message = "no constraints";
        return out;
    }

    const auto vm = detail::map_variables(problem);
    detail::Conic pr;
    pr.m = vm.count + 1;
    const int t_index = vm.count;
    pr.b = Vector::Zero(pr.m);
    pr.b(t_index) = -1.0;
    pr.blocks = detail::standard_blocks(problem, vm, t_index);
    // block + margin I <= t I, so t <= 0 means every margin is met
    for (std::size_t k = 0; k < pr.blocks.size(); ++k) {
        pr.blocks[k].C.diagonal().array() -= out.margins[k];
    }
    const double widest = *std::max_element(out.margins.begin(), out.margins.end());

    Vector candidate;
    auto hook = [&](const Vector& y) {
        const Vector x = detail::unscale(vm, y);
        const auto rep = check_certificate(problem, x, out.margins);
        out.best_t = std::min(out.best_t, -rep.worst_slack);
        if (rep.passed) {
            candidate = x;
        }
        return rep.passed;
    };
    const auto core = detail::solve_conic(pr, opt.max_iter, opt.tol, opt.step_fraction, hook, true);
    out.iterations = core.iterations;
    out.primal_infeasibility = core.pinf;
    out.dual_infeasibility = core.dinf;
    out.relative_gap = core.gap;
    // -<C, X> bounds min t from below up to the primal residual term.
    out.lower_bound = core.best_bound - widest;

    if (core.exit == detail::CoreExit::early_stop) {
        if (check_certificate(problem, candidate, out.margins).passed) {
            out.status = Status::feasible;
            out.point = candidate;
            out.message = "strictly feasible point certified";
            return out;
        }
        out.message = "candidate point failed the certificate check";
        return out;
    }
    if (out.lower_bound > opt.tol) {
        out.status = Status::infeasible;
        out.message = "dual certificate: min t >= " + std::to_string(out.lower_bound);
        return out;
    }
    switch (core.exit) {
    case detail::CoreExit::converged: out.message = "optimum within the strictness margin"; break;
    case detail::CoreExit::max_iter: out.message = "iteration limit reached"; break;
    case detail::CoreExit::stalled: out.message = "step lengths stalled"; break;
    default: out.message = "numerical breakdown"; break;
    }
    return out;
}

// Minimizes c'x subject to the same constraint system, with every block
// tightened by its resolved margin.
inline SolveOutcome solve_minimize(const LmiProblem& problem, const Vector& cost, const SolveOptions& opt = {}) {
    problem.check_point(cost);
    SolveOutcome out;
    out.margins = resolved_margins(problem, opt);
    out.margin = out.margins.empty() ? 0.0 : *std::min_element(out.margins.begin(), out.margins.end());
    const auto vm = detail::map_variables(problem);
    for (int k = 0; k < problem.num_vars(); ++k) {
        if (vm.solver_index[k] < 0 && cost(k) != 0.0) {
            throw argument_error("solve_minimize: objective uses a variable absent from every constraint");
        }
    }
    detail::Conic pr;
    pr.m = vm.count;
    pr.b = Vector::Zero(pr.m);
    for (int k = 0; k < problem.num_vars(); ++k) {
        if (vm.solver_index[k] >= 0) {
            pr.b(vm.solver_index[k]) = -cost(k) * vm.scale[k];
        }
    }
    pr.blocks = detail::standard_blocks(problem, vm, -1);
    for (std::size_t k = 0; k < pr.blocks.size(); ++k) {
        pr.blocks[k].C.diagonal().array() -= out.margins[k];
    }
    const auto core = detail::solve_conic(pr, opt.max_iter, opt.tol, opt.step_fraction, {}, false);
    out.iterations = core.iterations;
    out.primal_infeasibility = core.pinf;
    out.dual_infeasibility = core.dinf;
    out.relative_gap = core.gap;
    const Vector x = detail::unscale(vm, core.y);
    std::vector<double> half = out.margins;
    for (auto& h : half) {
        h *= 0.5;
    }
    const auto rep = check_certificate(problem, x, half);
    out.best_t = -rep.worst_slack;
    out.objective = cost.dot(x);
    const bool ok = core.exit == detail::CoreExit::converged ||
                    (core.pinf <= 1e-6 && core.gap <= 1e-6 && core.dinf <= 1e-6);
    // Any certified iterate is usable; optimality only affects the message.
    if (rep.passed) {
        out.status = Status::feasible;
        out.point = x;
        out.message = ok ? "optimal" : "certified point, optimality not reached";
    } else {
        out.message = "minimization did not converge to a certified point";
    }
    return out;
}

} // namespace heatctl::sdp
