#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "heatctl/heatctl.hpp"
#include "heatctl/io/config.hpp"
#include "heatctl/io/csv.hpp"
#include "heatctl/io/json.hpp"
#include "heatctl/io/svg.hpp"

namespace fs = std::filesystem;
using namespace heatctl;
using io::json;

namespace {

enum Exit : int { ok = 0, config_failure = 2, inconclusive = 3, infeasible = 4, simulation_failure = 5 };

struct Overrides {
    std::string config;
    std::optional<std::string> out;
    std::optional<int> jobs;
    std::optional<std::uint64_t> seed;
};

void write_json(const fs::path& p, const json& j) {
    std::ofstream f(p);
    if (!f) {
        throw std::runtime_error("cannot write " + p.string());
    }
    f << j.dump(2) << '\n';
}

io::RunConfig prepare(const Overrides& o) {
    auto cfg = io::load_config(o.config);
    if (o.out) {
        cfg.out = *o.out;
    }
    if (o.jobs) {
        cfg.jobs = *o.jobs;
    }
    if (o.seed) {
        cfg.seed = *o.seed;
    }
    cfg.validate();
    fs::create_directories(cfg.out);
    write_json(fs::path(cfg.out) / "effective_config.json", io::effective_config(cfg));
    return cfg;
}

GainSet resolve_gains(const io::RunConfig& cfg, const ModalModel& m) {
    GainSet g;
    if (cfg.gains_source == "design") {
        g = design_gains(m, cfg.system.delta, cfg.design_margin, cfg.solver);
    } else if (cfg.gains_source == "file") {
        std::ifstream f(cfg.gains_file);
        if (!f) {
            throw config_error("cannot open gains file '" + cfg.gains_file + "'");
        }
        try {
            g = io::gains_from_json(json::parse(f));
        } catch (const json::exception& e) {
            throw config_error(std::string("malformed gains file: ") + e.what());
        }
    } else {
        g = reference_gains();
    }
    if (g.L0.size() != m.N0) {
        throw config_error("gains are sized for N0 = " + std::to_string(g.L0.size()) + " but the model has N0 = " +
                           std::to_string(m.N0));
    }
    return g;
}

std::string row(const RowVector& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        s += (i ? ", " : "") + format_number(v(i));
    }
    return s + "]";
}

int cmd_design(const io::RunConfig& cfg) {
    const auto m = reduced_matrices(cfg.system);
    std::ostringstream rep;
    rep << "N0 = " << m.N0 << "\n";
    rep << "N = " << m.N << "\n";
    const GainSet g = design_gains(m, cfg.system.delta, cfg.design_margin, cfg.solver);
    const auto check = verify_gains(g, m, cfg.system.delta);
    rep << "L0 = " << row(g.L0.transpose()) << "\n";
    rep << "K0 = " << row(g.K0) << "\n";
    rep << "margin = " << format_number(g.margin) << "\n";
    rep << "observer abscissa = " << format_number(check.observer_abscissa) << "\n";
    rep << "controller abscissa = " << format_number(check.controller_abscissa) << "\n";
    rep << "certificates " << (check.passed() ? "valid" : "INVALID") << "\n";
    std::cout << rep.str();
    std::ofstream(fs::path(cfg.out) / "design_report.txt") << rep.str();
    write_json(fs::path(cfg.out) / "gains.json", io::to_json(g));
    return check.passed() ? ok : infeasible;
}

int cmd_verify(const io::RunConfig& cfg) {
    const auto& s = cfg.system;
    const auto m = reduced_matrices(s);
    const GainSet g = resolve_gains(cfg, m);
    const auto cl = assemble_closed_loop(m, g);
    sdp::SolveOutcome out;
    json rep;
    rep["mode"] = cfg.mode;
    rep["N0"] = m.N0;
    rep["N"] = m.N;
    std::optional<LmiCertificate> cert;
    const auto start = std::chrono::steady_clock::now();
    if (cfg.sampled()) {
        const auto lmi = build_sampled_lmis(cl, m, {s.delta0, s.delta1, s.tau_My, s.tau_Mu});
        out = sdp::solve_feasibility(lmi.problem, cfg.solver);
        if (out.status == sdp::Status::feasible) {
            cert = extract_certificate(lmi, out);
        }
        rep["tau_My"] = s.tau_My;
        rep["tau_Mu"] = s.tau_Mu;
        rep["delta_tau"] = halanay_rate(s.delta0, s.delta1, s.tau_My);
    } else {
        const auto lmi = build_continuous_lmi(cl, m, s.delta);
        out = sdp::solve_feasibility(lmi.problem, cfg.solver);
        if (out.status == sdp::Status::feasible) {
            cert = extract_certificate(lmi, out);
        }
        rep["delta"] = s.delta;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    rep["status"] = sdp::to_string(out.status);
    rep["margin"] = out.margin;
    rep["best_t"] = out.best_t;
    rep["lower_bound"] = out.lower_bound;
    rep["iterations"] = out.iterations;
    rep["message"] = out.message;
    rep["seconds"] = secs;
    std::cout << "status = " << sdp::to_string(out.status) << "\n";
    std::cout << "margin = " << format_number(out.margin) << "\n";
    if (cfg.sampled()) {
        std::cout << "delta_tau = " << format_number(rep["delta_tau"].get<double>()) << "\n";
    }
    if (cert) {
        write_json(fs::path(cfg.out) / "certificate.json", io::to_json(*cert));
    }
    write_json(fs::path(cfg.out) / "verify.json", rep);
    switch (out.status) {
    case sdp::Status::feasible:
        return ok;
    case sdp::Status::infeasible:
        return infeasible;
    default:
        return inconclusive;
    }
}

int cmd_sweep(const io::RunConfig& cfg) {
    SweepSpec spec;
    spec.base = cfg.system;
    spec.Ns = cfg.sweep_N;
    spec.tau_My = cfg.sweep_tau_My;
    spec.search.grid_step = cfg.grid_step;
    spec.search.max_tau = cfg.max_tau;
    spec.search.solver = cfg.solver;
    spec.jobs = cfg.jobs;
    if (cfg.gains_source != "reference" && !spec.Ns.empty()) {
        SystemConfig probe = cfg.system;
        probe.N = std::max(probe.N, resolved_N0(probe));
        spec.gains = resolve_gains(cfg, reduced_matrices(probe));
    }
    int errors = 0;
    int inconclusive_probes = 0;
    const auto cells = run_sweep(spec, [&](const SweepCell& c) {
        std::cerr << "N=" << c.N << " tau_My=" << io::format_tau(c.tau_My) << " -> " << io::cell_text(c);
        if (c.inconclusive) {
            std::cerr << " (" << c.inconclusive << " inconclusive probes read as infeasible)";
        }
        if (!c.message.empty()) {
            std::cerr << " " << c.message;
        }
        std::cerr << "\n";
        errors += c.kind == SweepCell::Kind::error;
        inconclusive_probes += c.inconclusive;
    });
    std::ofstream f(fs::path(cfg.out) / "sweep.csv", std::ios::binary);
    io::write_sweep_csv(f, spec.Ns, spec.tau_My, cells);
    io::write_sweep_csv(std::cout, spec.Ns, spec.tau_My, cells);
    std::cerr << "cells: " << cells.size() << ", failed: " << errors << ", inconclusive probes: " << inconclusive_probes
              << "\n";
    return ok;
}

int cmd_simulate(const io::RunConfig& cfg) {
    const auto& s = cfg.system;
    const auto m = reduced_matrices(s);
    const GainSet g = cfg.open_loop ? zero_gains(m.N0) : resolve_gains(cfg, m);
    SimConfig sc;
    sc.M = cfg.M;
    sc.T = cfg.T;
    sc.dt = cfg.dt;
    sc.record_every = cfg.record_every;
    double envelope = s.delta;
    if (cfg.sampled()) {
        sc.sampled = true;
        sc.tau_My = s.tau_My;
        sc.tau_Mu = s.tau_Mu;
        if (cfg.jitter) {
            sc.s = jittered_instants(cfg.T, s.tau_My, cfg.seed);
            sc.t = jittered_instants(cfg.T, s.tau_Mu, cfg.seed + 1);
        } else {
            sc.s = uniform_instants(cfg.T + s.tau_My, s.tau_My);
            sc.t = uniform_instants(cfg.T + s.tau_Mu, s.tau_Mu);
        }
        envelope = halanay_rate(s.delta0, s.delta1, s.tau_My);
    }
    Trajectory tr;
    double rate = 0.0;
    try {
        tr = simulate(m, g, sc);
        rate = decay_rate_estimate(tr, cfg.fit_window());
    } catch (const argument_error& e) {
        throw simulation_error(e.what());
    }
    {
        std::ofstream f(fs::path(cfg.out) / "trajectory.csv", std::ios::binary);
        write_trajectory_csv(f, tr);
    }
    {
        io::DecayPlot plot{tr.times, state_energy(tr), envelope, rate,
                           std::string(cfg.open_loop ? "open loop" : "closed loop") + ", " + cfg.mode + ", N = " +
                               std::to_string(m.N)};
        std::ofstream f(fs::path(cfg.out) / "decay.svg");
        io::write_decay_svg(f, plot);
    }
    json rep;
    rep["mode"] = cfg.mode;
    rep["open_loop"] = cfg.open_loop;
    rep["M"] = tr.M;
    rep["samples"] = tr.size();
    rep["fitted_rate"] = rate;
    rep["envelope_rate"] = envelope;
    rep["window"] = cfg.fit_window();
    write_json(fs::path(cfg.out) / "simulate.json", rep);
    std::cout << "M = " << tr.M << "\n";
    std::cout << "fitted rate = " << format_number(rate) << "\n";
    std::cout << "envelope rate = " << format_number(envelope) << "\n";
    return ok;
}

int cmd_halanay(const io::RunConfig& cfg, std::optional<double> h) {
    const double rate = halanay_rate(cfg.system.delta0, cfg.system.delta1, h.value_or(cfg.system.tau_My));
    std::cout << "delta_tau = " << format_number(rate) << "\n";
    json rep{{"delta0", cfg.system.delta0}, {"delta1", cfg.system.delta1}, {"h", h.value_or(cfg.system.tau_My)},
             {"delta_tau", rate}};
    write_json(fs::path(cfg.out) / "halanay.json", rep);
    return ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Observer-based boundary control of a reaction-diffusion equation"};
    app.require_subcommand(1);
    Overrides o;
    app.add_option("--config", o.config, "INI or JSON configuration file");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--jobs", o.jobs, "sweep worker threads")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "sampling jitter seed");
    auto* design = app.add_subcommand("design", "design L0 and K0 and report N0");
    auto* verify = app.add_subcommand("verify", "solve the continuous or sampled-data stability LMIs");
    auto* sweep = app.add_subcommand("sweep", "tabulate the largest hold bound over N and tau_My");
    auto* simulate_cmd = app.add_subcommand("simulate", "simulate the closed loop and fit its decay rate");
    auto* halanay = app.add_subcommand("halanay", "decay rate guaranteed by the Halanay inequality");
    std::optional<double> h;
    halanay->add_option("--delay", h, "delay bound (default system.tau_My)");
    for (auto* sub : {design, verify, sweep, simulate_cmd, halanay}) {
        sub->fallthrough();
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : config_failure;
    }

    try {
        const auto cfg = prepare(o);
        if (*design) {
            return cmd_design(cfg);
        }
        if (*verify) {
            return cmd_verify(cfg);
        }
        if (*sweep) {
            return cmd_sweep(cfg);
        }
        if (*simulate_cmd) {
            return cmd_simulate(cfg);
        }
        return cmd_halanay(cfg, h);
    } catch (const config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return config_failure;
    } catch (const argument_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return config_failure;
    } catch (const inconclusive_error& e) {
        std::cerr << "inconclusive: " << e.what() << "\n";
        return inconclusive;
    } catch (const synthesis_error& e) {
        std::cerr << "synthesis failed: " << e.what() << "\n";
        return infeasible;
    } catch (const simulation_error& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        return simulation_failure;
    } catch (const analysis_error& e) {
        std::cerr << "simulation failed: " << e.what() << "\n";
        return simulation_failure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
