#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/sdp/problem.hpp"

namespace heatctl::sdp {

struct ConstraintCheck {
    std::string name;
    double extreme = 0.0; // max eigenvalue for constraints, min eigenvalue for positivity blocks
    bool passed = false;
};

struct CertificateReport {
    bool passed = true;
    double margin = 0.0;
    // Smallest slack over everything: min(-max_eig(constraint), min_eig(positive block)).
    double worst_slack = std::numeric_limits<double>::infinity();
    std::vector<ConstraintCheck> constraints;
    std::vector<ConstraintCheck> positivity;
};

// Evaluates every constraint at `x` from the stored dense matrices and checks
// it with a symmetric eigensolver: constraint i needs max eig <= -margins[i],
// positivity block j min eig >= margins[constraints + j]. A problem without
// constraints passes.
inline CertificateReport check_certificate(const LmiProblem& problem, const Vector& x,
                                           const std::vector<double>& margins) {
    problem.check_point(x);
    const auto nc = problem.constraints().size();
    if (margins.size() != nc + problem.positivity().size()) {
        throw argument_error("check_certificate: one margin per constraint and positive block expected");
    }
    CertificateReport rep;
    rep.margin = margins.empty() ? 0.0 : *std::min_element(margins.begin(), margins.end());
    for (std::size_t i = 0; i < nc; ++i) {
        const auto& c = problem.constraints()[i];
        const double top = max_eigenvalue(problem.evaluate(c, x));
        const bool ok = top <= -margins[i];
        rep.constraints.push_back({c.name, top, ok});
        rep.passed = rep.passed && ok;
        rep.worst_slack = std::min(rep.worst_slack, -top);
    }
    for (std::size_t j = 0; j < problem.positivity().size(); ++j) {
        const auto& v = problem.variables()[problem.positivity()[j]];
        const double low = min_eigenvalue(problem.value(v, x));
        const bool ok = low >= margins[nc + j];
        rep.positivity.push_back({v.name, low, ok});
        rep.passed = rep.passed && ok;
        rep.worst_slack = std::min(rep.worst_slack, low);
    }
    return rep;
}

inline CertificateReport check_certificate(const LmiProblem& problem, const Vector& x, double margin) {
    return check_certificate(problem, x,
                             std::vector<double>(problem.constraints().size() + problem.positivity().size(), margin));
}

} // namespace heatctl::sdp
