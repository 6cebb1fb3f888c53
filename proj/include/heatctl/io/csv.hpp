#pragma once

#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "heatctl/synthesis/sweep.hpp"

namespace heatctl::io {

// Fixed three decimals, matching the 0.001 grid.
inline std::string format_tau(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

// Quotes a field only when it needs it.
inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) {
        return s;
    }
    std::string q = "\"";
    for (char ch : s) {
        q += ch;
        if (ch == '"') {
            q += '"';
        }
    }
    return q + "\"";
}

inline std::string cell_text(const SweepCell& c) {
    switch (c.kind) {
    case SweepCell::Kind::value:
        return format_tau(c.tau_Mu);
    case SweepCell::Kind::infeasible:
        return "-";
    default:
        return "?";
    }
}

// Rows tau_My, columns N; "-" infeasible, "?" failed cell. Cells are matched
// by (N, tau_My) so the input order does not matter.
inline void write_sweep_csv(std::ostream& os, const std::vector<int>& Ns, const std::vector<double>& taus,
                            const std::vector<SweepCell>& cells) {
    os << "tau_My";
    for (int n : Ns) {
        os << ",N=" << n;
    }
    os << "\r\n";
    for (double ty : taus) {
        os << format_tau(ty);
        for (int n : Ns) {
            std::string text = "?";
            for (const auto& c : cells) {
                if (c.N == n && c.tau_My == ty) {
                    text = cell_text(c);
                    break;
                }
            }
            os << ',' << csv_field(text);
        }
        os << "\r\n";
    }
}

} // namespace heatctl::io
