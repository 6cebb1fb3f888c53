#pragma once

#include <string>

#include <json.hpp>

#include "heatctl/error.hpp"
#include "heatctl/linalg.hpp"
#include "heatctl/sdp/problem.hpp"
#include "heatctl/synthesis/closed_loop.hpp"
#include "heatctl/synthesis/lmi.hpp"

namespace heatctl::io {

using json = nlohmann::ordered_json;

// Matrices are nested row-major arrays; vectors are flat arrays.
inline json to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            r.push_back(m(i, j));
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

inline json vector_json(const Eigen::Ref<const Vector>& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        a.push_back(v(i));
    }
    return a;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw argument_error(what + ": expected an array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j.at(0).size()) : 0;
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& r = j[static_cast<std::size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != cols) {
            throw argument_error(what + ": ragged matrix");
        }
        for (Eigen::Index k = 0; k < cols; ++k) {
            m(i, k) = r[static_cast<std::size_t>(k)].get<double>();
        }
    }
    return m;
}

inline Vector vector_from_json(const json& j, const std::string& what) {
    if (!j.is_array()) {
        throw argument_error(what + ": expected an array");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

inline json to_json(const sdp::LmiProblem& p) {
    json out;
    out["num_vars"] = p.num_vars();
    json vars = json::array();
    for (const auto& v : p.variables()) {
        vars.push_back({{"name", v.name}, {"dim", v.dim}, {"offset", v.offset}});
    }
    out["variables"] = std::move(vars);
    json cons = json::array();
    for (const auto& c : p.constraints()) {
        json terms = json::array();
        for (const auto& [k, m] : c.terms) {
            terms.push_back({{"var", k}, {"matrix", to_json(m)}});
        }
        cons.push_back({{"name", c.name}, {"constant", to_json(c.constant)}, {"terms", std::move(terms)}});
    }
    out["constraints"] = std::move(cons);
    out["positivity"] = p.positivity();
    return out;
}

inline sdp::LmiProblem problem_from_json(const json& j) {
    try {
        sdp::LmiProblem p;
        for (const auto& v : j.at("variables")) {
            const auto added = p.add_variable(v.at("name").get<std::string>(), v.at("dim").get<int>());
            if (v.contains("offset") && v.at("offset").get<int>() != added.offset) {
                throw argument_error("problem JSON: variable '" + added.name + "' has an inconsistent offset");
            }
        }
        if (j.contains("num_vars") && j.at("num_vars").get<int>() != p.num_vars()) {
            throw argument_error("problem JSON: num_vars disagrees with the variable list");
        }
        for (const auto& c : j.at("constraints")) {
            sdp::Constraint con;
            con.name = c.at("name").get<std::string>();
            con.constant = matrix_from_json(c.at("constant"), con.name);
            for (const auto& t : c.at("terms")) {
                con.terms.emplace_back(t.at("var").get<int>(), matrix_from_json(t.at("matrix"), con.name));
            }
            p.add_constraint(std::move(con));
        }
        for (int i : j.at("positivity").get<std::vector<int>>()) {
            if (i < 0 || i >= static_cast<int>(p.variables().size())) {
                throw argument_error("problem JSON: positivity index out of range");
            }
            p.require_positive(p.variables()[static_cast<std::size_t>(i)]);
        }
        return p;
    } catch (const json::exception& e) {
        throw argument_error(std::string("problem JSON: ") + e.what());
    }
}

inline json to_json(const GainSet& g) {
    json out;
    out["N0"] = g.L0.size();
    out["L0"] = vector_json(g.L0);
    out["K0"] = vector_json(g.K0.transpose());
    if (g.Po.size()) {
        out["Po"] = to_json(g.Po);
    }
    if (g.Pc.size()) {
        out["Pc"] = to_json(g.Pc);
    }
    out["margin"] = g.margin;
    return out;
}

inline GainSet gains_from_json(const json& j) {
    try {
        GainSet g;
        g.L0 = vector_from_json(j.at("L0"), "L0");
        g.K0 = vector_from_json(j.at("K0"), "K0").transpose();
        if (g.K0.size() != g.L0.size() + 1) {
            throw argument_error("gains JSON: K0 must have one more entry than L0");
        }
        if (j.contains("Po")) {
            g.Po = matrix_from_json(j.at("Po"), "Po");
        }
        if (j.contains("Pc")) {
            g.Pc = matrix_from_json(j.at("Pc"), "Pc");
        }
        g.margin = j.value("margin", 0.0);
        return g;
    } catch (const json::exception& e) {
        throw argument_error(std::string("gains JSON: ") + e.what());
    }
}

inline json to_json(const LmiCertificate& c) {
    json out;
    out["kind"] = c.sampled ? "sampled" : "continuous";
    out["margin"] = c.margin;
    out["alpha1"] = c.alpha1;
    if (c.sampled) {
        out["alpha2"] = c.alpha2;
        out["W2"] = c.W2;
        out["W1"] = to_json(c.W1);
    }
    out["P"] = to_json(c.P);
    return out;
}

inline LmiCertificate certificate_from_json(const json& j) {
    try {
        LmiCertificate c;
        c.sampled = j.at("kind").get<std::string>() == "sampled";
        c.margin = j.value("margin", 0.0);
        c.alpha1 = j.at("alpha1").get<double>();
        c.P = matrix_from_json(j.at("P"), "P");
        if (c.sampled) {
            c.alpha2 = j.at("alpha2").get<double>();
            c.W2 = j.at("W2").get<double>();
            c.W1 = matrix_from_json(j.at("W1"), "W1");
        }
        return c;
    } catch (const json::exception& e) {
        throw argument_error(std::string("certificate JSON: ") + e.what());
    }
}

} // namespace heatctl::io
