#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "heatctl/error.hpp"
#include "heatctl/io/json.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/sdp/solver.hpp"

namespace heatctl::io {

// Everything a CLI run needs, with every default spelled out.
struct RunConfig {
    SystemConfig system;
    std::string mode = "continuous"; // continuous | sampled

    std::string gains_source = "reference"; // reference | design | file
    std::string gains_file;
    double design_margin = 1.0;

    sdp::SolveOptions solver;

    int M = 0; // 0 -> max(100, 3N)
    double T = 10.0;
    std::optional<double> dt;
    int record_every = 10;
    bool open_loop = false;
    bool jitter = true;
    std::uint64_t seed = 1;
    double window = 0.0; // trailing fit window; 0 -> T / 2

    std::vector<int> sweep_N{6, 8, 10, 12, 14};
    std::vector<double> sweep_tau_My{0.002, 0.004, 0.006, 0.008, 0.010, 0.012, 0.014, 0.016};
    double grid_step = 0.001;
    double max_tau = 0.2;
    int jobs = 1;

    std::string out = "out";

    bool sampled() const { return mode == "sampled"; }
    double fit_window() const { return window > 0.0 ? window : 0.5 * T; }
    int resolved_M() const { return M > 0 ? M : std::max(100, 3 * system.N); }

    void validate() const;
};

inline const char* env_prefix = "HEATCTL_";

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

inline double parse_double(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) {
        throw config_error(key + ": '" + raw + "' is not a number");
    }
    return v;
}

inline long long parse_int(const std::string& raw, const std::string& key) {
    const std::string s = trim(raw);
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (s.empty() || used != s.size()) {
        throw config_error(key + ": '" + raw + "' is not an integer");
    }
    return v;
}

inline bool parse_bool(const std::string& raw, const std::string& key) {
    std::string s = trim(raw);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (s == "true" || s == "1" || s == "yes" || s == "on") {
        return true;
    }
    if (s == "false" || s == "0" || s == "no" || s == "off") {
        return false;
    }
    throw config_error(key + ": '" + raw + "' is not a boolean");
}

inline std::vector<std::string> split_list(const std::string& raw) {
    std::string s = trim(raw);
    if (!s.empty() && s.front() == '[' && s.back() == ']') {
        s = s.substr(1, s.size() - 2);
    }
    std::vector<std::string> items;
    if (trim(s).empty()) {
        return items;
    }
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        items.push_back(trim(item));
    }
    return items;
}

inline bool is_auto(const std::string& raw) {
    const std::string s = trim(raw);
    return s.empty() || s == "auto";
}

// One configurable key: how to read it from text or JSON and how to echo it.
struct Field {
    std::string section;
    std::string key;
    std::function<void(const std::string&)> from_text;
    std::function<void(const json&)> from_json;
    std::function<json()> echo;

    std::string name() const { return section + "." + key; }
};

template <class T>
Field scalar_field(std::string section, std::string key, T& ref) {
    const std::string name = section + "." + key;
    Field f{section, key, {}, {}, {}};
    f.from_text = [&ref, name](const std::string& s) {
        if constexpr (std::is_same_v<T, double>) {
            ref = parse_double(s, name);
        } else if constexpr (std::is_same_v<T, bool>) {
            ref = parse_bool(s, name);
        } else if constexpr (std::is_same_v<T, std::string>) {
            ref = trim(s);
        } else {
            const long long v = parse_int(s, name);
            if (v < 0 && std::is_unsigned_v<T>) {
                throw config_error(name + ": must be nonnegative");
            }
            ref = static_cast<T>(v);
        }
    };
    f.from_json = [&ref, name, text = f.from_text](const json& j) {
        if (j.is_string()) {
            text(j.get<std::string>());
            return;
        }
        if constexpr (std::is_same_v<T, std::string>) {
            throw config_error(name + ": expected a string");
        } else if constexpr (std::is_same_v<T, bool>) {
            if (!j.is_boolean()) {
                throw config_error(name + ": expected a boolean");
            }
            ref = j.get<bool>();
        } else if constexpr (std::is_same_v<T, double>) {
            if (!j.is_number()) {
                throw config_error(name + ": expected a number");
            }
            ref = j.get<double>();
        } else {
            if (!j.is_number_integer()) {
                throw config_error(name + ": expected an integer");
            }
            if (j.is_number_unsigned()) {
                ref = static_cast<T>(j.get<std::uint64_t>());
            } else {
                const auto v = j.get<long long>();
                if (v < 0 && std::is_unsigned_v<T>) {
                    throw config_error(name + ": must be nonnegative");
                }
                ref = static_cast<T>(v);
            }
        }
    };
    f.echo = [&ref] { return json(ref); };
    return f;
}

// "auto" (or null) clears the value.
template <class T>
Field optional_field(std::string section, std::string key, std::optional<T>& ref, std::function<json()> echo) {
    const std::string name = section + "." + key;
    Field f{section, key, {}, {}, std::move(echo)};
    f.from_text = [&ref, name](const std::string& s) {
        if (is_auto(s)) {
            ref.reset();
        } else if constexpr (std::is_same_v<T, double>) {
            ref = parse_double(s, name);
        } else {
            ref = static_cast<T>(parse_int(s, name));
        }
    };
    f.from_json = [&ref, name, text = f.from_text](const json& j) {
        if (j.is_null()) {
            ref.reset();
        } else if (j.is_string()) {
            text(j.get<std::string>());
        } else if (!j.is_number() || (std::is_integral_v<T> && !j.is_number_integer())) {
            throw config_error(name + ": expected a number or \"auto\"");
        } else {
            ref = j.get<T>();
        }
    };
    return f;
}

template <class T>
Field list_field(std::string section, std::string key, std::vector<T>& ref) {
    const std::string name = section + "." + key;
    Field f{section, key, {}, {}, {}};
    f.from_text = [&ref, name](const std::string& s) {
        std::vector<T> out;
        for (const auto& item : split_list(s)) {
            if constexpr (std::is_same_v<T, double>) {
                out.push_back(parse_double(item, name));
            } else {
                out.push_back(static_cast<T>(parse_int(item, name)));
            }
        }
        ref = std::move(out);
    };
    f.from_json = [&ref, name, text = f.from_text](const json& j) {
        if (j.is_string()) {
            text(j.get<std::string>());
            return;
        }
        if (!j.is_array()) {
            throw config_error(name + ": expected a list");
        }
        std::vector<T> out;
        for (const auto& item : j) {
            if (!item.is_number() || (std::is_integral_v<T> && !item.is_number_integer())) {
                throw config_error(name + ": list entries must be numbers");
            }
            out.push_back(item.get<T>());
        }
        ref = std::move(out);
    };
    f.echo = [&ref] { return json(ref); };
    return f;
}

inline std::vector<Field> fields(RunConfig& c) {
    auto& s = c.system;
    std::vector<Field> f;
    f.push_back(scalar_field("system", "a", s.a));
    f.push_back(scalar_field("system", "x_star", s.x_star));
    f.push_back(scalar_field("system", "delta", s.delta));
    f.push_back(scalar_field("system", "delta0", s.delta0));
    f.push_back(scalar_field("system", "delta1", s.delta1));
    f.push_back(scalar_field("system", "tau_My", s.tau_My));
    f.push_back(scalar_field("system", "tau_Mu", s.tau_Mu));
    f.push_back(optional_field("system", "N0", s.N0, [&s] { return json(resolved_N0(s)); }));
    f.push_back(scalar_field("system", "N", s.N));
    f.push_back(scalar_field("system", "mode", c.mode));
    f.push_back(scalar_field("gains", "source", c.gains_source));
    f.push_back(scalar_field("gains", "file", c.gains_file));
    f.push_back(scalar_field("gains", "margin", c.design_margin));
    f.push_back(scalar_field("solver", "max_iter", c.solver.max_iter));
    f.push_back(scalar_field("solver", "tol", c.solver.tol));
    f.push_back(scalar_field("solver", "margin_eps", c.solver.margin_eps));
    f.push_back(scalar_field("solver", "step_fraction", c.solver.step_fraction));
    f.push_back(scalar_field("sim", "M", c.M));
    f.push_back(scalar_field("sim", "T", c.T));
    f.push_back(optional_field("sim", "dt", c.dt, [&c] { return c.dt ? json(*c.dt) : json("auto"); }));
    f.push_back(scalar_field("sim", "record_every", c.record_every));
    f.push_back(scalar_field("sim", "open_loop", c.open_loop));
    f.push_back(scalar_field("sim", "jitter", c.jitter));
    f.push_back(scalar_field("sim", "seed", c.seed));
    f.push_back(scalar_field("sim", "window", c.window));
    f.push_back(list_field("sweep", "N", c.sweep_N));
    f.push_back(list_field("sweep", "tau_My", c.sweep_tau_My));
    f.push_back(scalar_field("sweep", "grid_step", c.grid_step));
    f.push_back(scalar_field("sweep", "max_tau", c.max_tau));
    f.push_back(scalar_field("sweep", "jobs", c.jobs));
    f.push_back(scalar_field("output", "dir", c.out));
    return f;
}

inline Field& find_field(std::vector<Field>& fs, const std::string& section, const std::string& key) {
    for (auto& f : fs) {
        if (f.section == section && f.key == key) {
            return f;
        }
    }
    throw config_error("unknown configuration key '" + section + "." + key + "'");
}

inline std::string env_name(const Field& f) {
    std::string s = env_prefix + f.section + "_" + f.key;
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return std::toupper(ch); });
    return s;
}

} // namespace detail

inline void RunConfig::validate() const {
    if (mode != "continuous" && mode != "sampled") {
        throw config_error("system.mode must be 'continuous' or 'sampled', got '" + mode + "'");
    }
    if (gains_source != "reference" && gains_source != "design" && gains_source != "file") {
        throw config_error("gains.source must be 'reference', 'design' or 'file', got '" + gains_source + "'");
    }
    if (gains_source == "file" && gains_file.empty()) {
        throw config_error("gains.file is required when gains.source = file");
    }
    if (system.N < 1) {
        throw config_error("system.N must be >= 1");
    }
    if (system.N0 && *system.N0 < 1) {
        throw config_error("system.N0 must be >= 1");
    }
    if (!(design_margin > 0.0)) {
        throw config_error("gains.margin must be positive");
    }
    if (solver.max_iter < 1 || !(solver.tol > 0.0) || solver.margin_eps < 0.0 ||
        !(solver.step_fraction > 0.0 && solver.step_fraction < 1.0)) {
        throw config_error("solver options out of range");
    }
    if (M < 0 || !(T > 0.0) || (dt && !(*dt > 0.0)) || record_every < 1 || window < 0.0) {
        throw config_error("sim options out of range");
    }
    if (!(grid_step > 0.0) || !(max_tau >= grid_step) || jobs < 1) {
        throw config_error("sweep options out of range");
    }
    for (int n : sweep_N) {
        if (n < 1) {
            throw config_error("sweep.N entries must be >= 1");
        }
    }
    for (double t : sweep_tau_My) {
        if (!(t > 0.0)) {
            throw config_error("sweep.tau_My entries must be positive");
        }
    }
    if (out.empty()) {
        throw config_error("output.dir must not be empty");
    }
    try {
        system.validate(sampled());
    } catch (const argument_error& e) {
        throw config_error(std::string("system: ") + e.what());
    }
}

// Applies a section -> key -> value document; unknown keys are rejected.
inline void apply_json(RunConfig& c, const json& doc) {
    if (!doc.is_object()) {
        throw config_error("configuration must be an object of sections");
    }
    auto fs = detail::fields(c);
    for (const auto& [section, body] : doc.items()) {
        if (!body.is_object()) {
            throw config_error("section '" + section + "' must be an object");
        }
        for (const auto& [key, value] : body.items()) {
            detail::find_field(fs, section, key).from_json(value);
        }
    }
}

inline void apply_ini(RunConfig& c, std::istream& in) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw config_error(std::string("malformed configuration: ") + e.what());
    }
    auto fs = detail::fields(c);
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw config_error("key '" + section + "' must live inside a section");
        }
        for (const auto& [key, value] : body) {
            detail::find_field(fs, section, key).from_text(value.data());
        }
    }
}

// HEATCTL_<SECTION>_<KEY>, e.g. HEATCTL_SYSTEM_TAU_MY=0.004.
inline void apply_env(RunConfig& c) {
    for (auto& f : detail::fields(c)) {
        if (const char* v = std::getenv(detail::env_name(f).c_str())) {
            f.from_text(v);
        }
    }
}

inline RunConfig load_config(const std::string& path) {
    RunConfig c;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) {
            throw config_error("cannot open configuration file '" + path + "'");
        }
        const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
        if (is_json) {
            json doc;
            try {
                doc = json::parse(in);
            } catch (const json::exception& e) {
                throw config_error(std::string("malformed JSON configuration: ") + e.what());
            }
            apply_json(c, doc);
        } else {
            apply_ini(c, in);
        }
    }
    apply_env(c);
    return c;
}

// Every key with its resolved value.
inline json effective_config(const RunConfig& cfg) {
    RunConfig c = cfg;
    json out = json::object();
    for (auto& f : detail::fields(c)) {
        json v;
        try {
            v = f.echo();
        } catch (const std::exception&) {
            v = nullptr;
        }
        out[f.section][f.key] = std::move(v);
    }
    out["sim"]["M"] = c.resolved_M();
    out["sim"]["window"] = c.fit_window();
    return out;
}

} // namespace heatctl::io
