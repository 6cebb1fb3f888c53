#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "heatctl/error.hpp"

namespace heatctl::io {

struct DecayPlot {
    std::vector<double> times;
    std::vector<double> energy;  // ||w||_H1^2 + u^2
    double envelope_rate = 0.0;  // envelope is energy(0) exp(-2 rate t)
    double fitted_rate = 0.0;
    std::string title;
};

namespace detail {

inline std::string fmt(double v, int prec = 4) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

inline std::string escape_xml(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        case '"': out += "&quot;"; break;
        default: out += ch;
        }
    }
    return out;
}

} // namespace detail

// log(energy) against t with the theoretical slope -2 rate drawn from the
// initial value.
inline void write_decay_svg(std::ostream& os, const DecayPlot& p) {
    if (p.times.size() != p.energy.size() || p.times.size() < 2) {
        throw argument_error("write_decay_svg: need at least two samples of equal length");
    }
    std::vector<double> logq;
    for (double q : p.energy) {
        logq.push_back(std::log(std::max(q, 1e-300)));
    }
    const double t0 = p.times.front();
    const double t1 = p.times.back();
    const double env0 = logq.front();
    const double env1 = env0 - 2.0 * p.envelope_rate * (t1 - t0);
    double lo = std::min({*std::min_element(logq.begin(), logq.end()), env0, env1});
    double hi = std::max({*std::max_element(logq.begin(), logq.end()), env0, env1});
    if (hi - lo < 1e-12) {
        hi += 1.0;
        lo -= 1.0;
    }
    const double W = 720, H = 440, left = 70, right = 20, top = 40, bottom = 50;
    auto X = [&](double t) { return left + (t - t0) / (t1 - t0) * (W - left - right); };
    auto Y = [&](double v) { return top + (hi - v) / (hi - lo) * (H - top - bottom); };
    using detail::fmt;

    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
       << ' ' << H << "\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
       << detail::escape_xml(p.title) << "</text>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
       << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double t = t0 + (t1 - t0) * k / 4.0;
        const double v = lo + (hi - lo) * k / 4.0;
        os << "<text x=\"" << fmt(X(t)) << "\" y=\"" << H - bottom + 18
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(t, 3) << "</text>\n";
        os << "<text x=\"" << left - 6 << "\" y=\"" << fmt(Y(v) + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v, 3) << "</text>\n";
    }
    os << "<text x=\"" << W / 2 << "\" y=\"" << H - 10
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">t</text>\n";
    os << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
       << ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">log(|w|_H1^2 + u^2)</text>\n";

    const std::size_t stride = std::max<std::size_t>(1, p.times.size() / 2000);
    os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < p.times.size(); k += stride) {
        os << fmt(X(p.times[k]), 6) << ',' << fmt(Y(logq[k]), 6) << ' ';
    }
    os << fmt(X(t1), 6) << ',' << fmt(Y(logq.back()), 6) << "\"/>\n";
    os << "<line x1=\"" << fmt(X(t0), 6) << "\" y1=\"" << fmt(Y(env0), 6) << "\" x2=\"" << fmt(X(t1), 6)
       << "\" y2=\"" << fmt(Y(env1), 6) << "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n";
    os << "<text x=\"" << W - right - 4 << "\" y=\"" << top + 14
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#d62728\">envelope slope "
       << fmt(-2.0 * p.envelope_rate) << "</text>\n";
    os << "<text x=\"" << W - right - 4 << "\" y=\"" << top + 30
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#1f77b4\">fitted rate "
       << fmt(p.fitted_rate) << "</text>\n";
    os << "</svg>\n";
}

} // namespace heatctl::io
