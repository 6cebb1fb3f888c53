#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"

namespace heatctl::sdp {

// A symmetric matrix of decision variables, stored as its upper triangle
// (row-major) in the flat vector starting at `offset`. Scalars have dim 1.
struct MatrixVariable {
    std::string name;
    int dim = 0;
    int offset = 0;

    int size() const { return dim * (dim + 1) / 2; }

    int index(int i, int j) const {
        if (i > j) {
            std::swap(i, j);
        }
        // rows 0..i-1 contribute dim, dim-1, ... entries
        return offset + i * dim - i * (i - 1) / 2 + (j - i);
    }
};

// constant + sum_k x_k * terms[k], a rows x cols matrix affine in x.
class AffineExpr {
public:
    AffineExpr() = default;
    AffineExpr(Eigen::Index rows, Eigen::Index cols) : constant_(Matrix::Zero(rows, cols)) {}
    explicit AffineExpr(Matrix constant) : constant_(std::move(constant)) {}

    static AffineExpr variable(const MatrixVariable& v) {
        AffineExpr e(v.dim, v.dim);
        for (int i = 0; i < v.dim; ++i) {
            for (int j = i; j < v.dim; ++j) {
                Matrix m = Matrix::Zero(v.dim, v.dim);
                m(i, j) = 1.0;
                m(j, i) = 1.0;
                e.terms_.emplace(v.index(i, j), std::move(m));
            }
        }
        return e;
    }

    Eigen::Index rows() const { return constant_.rows(); }
    Eigen::Index cols() const { return constant_.cols(); }
    const Matrix& constant() const { return constant_; }
    const std::map<int, Matrix>& terms() const { return terms_; }

    Matrix evaluate(const Vector& x) const {
        Matrix out = constant_;
        for (const auto& [k, m] : terms_) {
            out += x(k) * m;
        }
        return out;
    }

    AffineExpr transpose() const {
        AffineExpr e(constant_.transpose());
        for (const auto& [k, m] : terms_) {
            e.terms_.emplace(k, m.transpose());
        }
        return e;
    }

    AffineExpr& operator+=(const AffineExpr& o) {
        check_same_shape(o);
        constant_ += o.constant_;
        for (const auto& [k, m] : o.terms_) {
            auto it = terms_.find(k);
            if (it == terms_.end()) {
                terms_.emplace(k, m);
            } else {
                it->second += m;
            }
        }
        return *this;
    }

    AffineExpr& operator-=(const AffineExpr& o) { return *this += -o; }

    AffineExpr& operator*=(double s) {
        constant_ *= s;
        for (auto& [k, m] : terms_) {
            m *= s;
        }
        return *this;
    }

    AffineExpr operator-() const {
        AffineExpr e = *this;
        e *= -1.0;
        return e;
    }

    friend AffineExpr operator+(AffineExpr l, const AffineExpr& r) { return l += r; }
    friend AffineExpr operator-(AffineExpr l, const AffineExpr& r) { return l -= r; }
    friend AffineExpr operator*(double s, AffineExpr e) { return e *= s; }
    friend AffineExpr operator*(AffineExpr e, double s) { return e *= s; }

    friend AffineExpr operator*(const Matrix& l, const AffineExpr& e) {
        if (l.cols() != e.rows()) {
            throw argument_error("AffineExpr: left factor has incompatible shape");
        }
        AffineExpr out(l * e.constant_);
        for (const auto& [k, m] : e.terms_) {
            out.terms_.emplace(k, l * m);
        }
        return out;
    }

    friend AffineExpr operator*(const AffineExpr& e, const Matrix& r) {
        if (e.cols() != r.rows()) {
            throw argument_error("AffineExpr: right factor has incompatible shape");
        }
        AffineExpr out(e.constant_ * r);
        for (const auto& [k, m] : e.terms_) {
            out.terms_.emplace(k, m * r);
        }
        return out;
    }

    // Assembles a block matrix; every block row must share its height and
    // every block column its width.
    static AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& grid) {
        if (grid.empty() || grid.front().empty()) {
            return AffineExpr(0, 0);
        }
        const std::size_t nc = grid.front().size();
        std::vector<Eigen::Index> heights;
        std::vector<Eigen::Index> widths(nc, 0);
        for (const auto& row : grid) {
            if (row.size() != nc) {
                throw argument_error("AffineExpr::blocks: ragged block grid");
            }
            heights.push_back(row.front().rows());
        }
        for (std::size_t j = 0; j < nc; ++j) {
            widths[j] = grid.front()[j].cols();
        }
        Eigen::Index total_r = 0;
        Eigen::Index total_c = 0;
        for (auto h : heights) total_r += h;
        for (auto w : widths) total_c += w;

        AffineExpr out(total_r, total_c);
        Eigen::Index r0 = 0;
        for (std::size_t i = 0; i < grid.size(); ++i) {
            Eigen::Index c0 = 0;
            for (std::size_t j = 0; j < nc; ++j) {
                const AffineExpr& b = grid[i][j];
                if (b.rows() != heights[i] || b.cols() != widths[j]) {
                    throw argument_error("AffineExpr::blocks: block shape mismatch");
                }
                out.constant_.block(r0, c0, b.rows(), b.cols()) = b.constant_;
                for (const auto& [k, m] : b.terms_) {
                    auto it = out.terms_.find(k);
                    if (it == out.terms_.end()) {
                        it = out.terms_.emplace(k, Matrix::Zero(total_r, total_c)).first;
                    }
                    it->second.block(r0, c0, m.rows(), m.cols()) += m;
                }
                c0 += widths[j];
            }
            r0 += heights[i];
        }
        return out;
    }

private:
    void check_same_shape(const AffineExpr& o) const {
        if (o.rows() != rows() || o.cols() != cols()) {
            throw argument_error("AffineExpr: shape mismatch in sum");
        }
    }

    Matrix constant_;
    std::map<int, Matrix> terms_;
};

inline AffineExpr zeros(Eigen::Index rows, Eigen::Index cols) { return AffineExpr(rows, cols); }

inline AffineExpr constant(const Matrix& m) { return AffineExpr(m); }

inline AffineExpr constant(double v) { return AffineExpr(Matrix::Constant(1, 1, v)); }

// One negative-definite requirement: constant + sum_k x_k * coeff_k < 0.
struct Constraint {
    std::string name;
    Matrix constant;
    std::vector<std::pair<int, Matrix>> terms; // sorted by variable index

    int dim() const { return static_cast<int>(constant.rows()); }
};

inline constexpr double symmetry_tol = 1e-12;

// Affine symmetric constraint system over scalar decision variables.
class LmiProblem {
public:
    MatrixVariable add_variable(std::string name, int dim) {
        if (dim < 1) {
            throw argument_error("LmiProblem: variable dimension must be >= 1");
        }
        MatrixVariable v{std::move(name), dim, num_vars_};
        num_vars_ += v.size();
        variables_.push_back(v);
        return v;
    }

    MatrixVariable add_scalar(std::string name) { return add_variable(std::move(name), 1); }

    // Requires expr < 0. The expression must be square and symmetric.
    void add_constraint(std::string name, const AffineExpr& expr) {
        Constraint c;
        c.name = std::move(name);
        if (expr.rows() != expr.cols() || expr.rows() < 1) {
            throw argument_error("constraint '" + c.name + "' is not a square matrix");
        }
        if (asymmetry(expr.constant()) > symmetry_tol) {
            throw argument_error("constraint '" + c.name + "' has a non-symmetric constant block");
        }
        c.constant = symmetrized(expr.constant());
        for (const auto& [k, m] : expr.terms()) {
            if (k < 0 || k >= num_vars_) {
                throw argument_error("constraint '" + c.name + "' references an unknown variable");
            }
            if (asymmetry(m) > symmetry_tol) {
                throw argument_error("constraint '" + c.name + "' has a non-symmetric coefficient");
            }
            if (m.cwiseAbs().maxCoeff() == 0.0) {
                continue;
            }
            c.terms.emplace_back(k, symmetrized(m));
        }
        constraints_.push_back(std::move(c));
    }

    // Appends a pre-built constraint (used by the JSON loader); validated.
    void add_constraint(Constraint c) {
        validate_constraint(c);
        constraints_.push_back(std::move(c));
    }

    // Requires the variable block to be positive definite.
    void require_positive(const MatrixVariable& v) {
        for (std::size_t i = 0; i < variables_.size(); ++i) {
            if (variables_[i].offset == v.offset && variables_[i].dim == v.dim) {
                positivity_.push_back(static_cast<int>(i));
                return;
            }
        }
        throw argument_error("require_positive: unknown variable '" + v.name + "'");
    }

    int num_vars() const { return num_vars_; }
    const std::vector<MatrixVariable>& variables() const { return variables_; }
    const std::vector<Constraint>& constraints() const { return constraints_; }
    const std::vector<int>& positivity() const { return positivity_; }

    const MatrixVariable& variable(const std::string& name) const {
        for (const auto& v : variables_) {
            if (v.name == name) {
                return v;
            }
        }
        throw argument_error("LmiProblem: no variable named '" + name + "'");
    }

    Matrix value(const MatrixVariable& v, const Vector& x) const {
        check_point(x);
        Matrix m(v.dim, v.dim);
        for (int i = 0; i < v.dim; ++i) {
            for (int j = i; j < v.dim; ++j) {
                m(i, j) = m(j, i) = x(v.index(i, j));
            }
        }
        return m;
    }

    Matrix evaluate(const Constraint& c, const Vector& x) const {
        check_point(x);
        Matrix out = c.constant;
        for (const auto& [k, m] : c.terms) {
            out += x(k) * m;
        }
        return out;
    }

    void check_point(const Vector& x) const {
        if (x.size() != num_vars_) {
            throw argument_error("point has " + std::to_string(x.size()) + " entries, problem has " +
                                 std::to_string(num_vars_) + " variables");
        }
    }

    // Largest induced inf-norm over constant blocks.
    double constant_scale() const {
        double s = 0.0;
        for (const auto& c : constraints_) {
            s = std::max(s, norm_inf(c.constant));
        }
        return s;
    }

private:
    void validate_constraint(const Constraint& c) const {
        if (c.constant.rows() != c.constant.cols() || c.constant.rows() < 1) {
            throw argument_error("constraint '" + c.name + "' is not a square matrix");
        }
        if (asymmetry(c.constant) > symmetry_tol) {
            throw argument_error("constraint '" + c.name + "' has a non-symmetric constant block");
        }
        for (const auto& [k, m] : c.terms) {
            if (k < 0 || k >= num_vars_) {
                throw argument_error("constraint '" + c.name + "' references an unknown variable");
            }
            if (m.rows() != c.constant.rows() || m.cols() != c.constant.cols()) {
                throw argument_error("constraint '" + c.name + "' mixes block sizes");
            }
            if (asymmetry(m) > symmetry_tol) {
                throw argument_error("constraint '" + c.name + "' has a non-symmetric coefficient");
            }
        }
    }

    int num_vars_ = 0;
    std::vector<MatrixVariable> variables_;
    std::vector<Constraint> constraints_;
    std::vector<int> positivity_;
};

// An unstructured rows x cols block of fresh scalar variables, created
// row-major; `first` receives the flat index of entry (0,0).
inline AffineExpr add_general_matrix(LmiProblem& p, const std::string& name, int rows, int cols, int* first = nullptr) {
    AffineExpr e(rows, cols);
    for (int i = 0; i < rows; ++i) {
        for (int j = 0; j < cols; ++j) {
            auto v = p.add_scalar(name + "[" + std::to_string(i) + "," + std::to_string(j) + "]");
            if (first && i == 0 && j == 0) {
                *first = v.offset;
            }
            const Matrix left = Matrix::Identity(rows, rows).col(i);
            const Matrix right = Matrix::Identity(cols, cols).row(j);
            e += left * AffineExpr::variable(v) * right;
        }
    }
    return e;
}

} // namespace heatctl::sdp
