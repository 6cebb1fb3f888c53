#pragma once

#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "heatctl/error.hpp"
#include "heatctl/modal.hpp"
#include "heatctl/sdp/solver.hpp"
#include "heatctl/synthesis/closed_loop.hpp"
#include "heatctl/synthesis/gains.hpp"
#include "heatctl/synthesis/lmi.hpp"

namespace heatctl {

struct Probe {
    double tau_Mu = 0.0;
    sdp::Status status = sdp::Status::inconclusive;
    int iterations = 0;
};

struct TauSearchOptions {
    double grid_step = 0.001;
    double max_tau = 0.2;
    bool inconclusive_as_infeasible = false;
    sdp::SolveOptions solver;
};

struct TauSearchResult {
    std::optional<double> tau_Mu; // empty when the smallest grid point is infeasible
    std::vector<Probe> probes;
    int inconclusive = 0;
};

// Solves the sampled-data conditions at one (tau_My, tau_Mu).
inline sdp::SolveOutcome probe_sampled(const ModalModel& m, const ClosedLoopMatrices& cl, const SampledParams& sp,
                                       const sdp::SolveOptions& opt = {}) {
    const auto lmi = build_sampled_lmis(cl, m, sp);
    return sdp::solve_feasibility(lmi.problem, opt);
}

// Largest grid value k * grid_step <= max_tau at which the sampled-data
// conditions hold, by bisection over grid indices (feasibility is monotone
// in tau_Mu). Inconclusive probes raise inconclusive_error unless they are
// to be read as infeasible.
inline TauSearchResult max_feasible_tau_u(const ModalModel& m, const GainSet& gains, double tau_My, double delta0,
                                          double delta1, const TauSearchOptions& opt = {}) {
    if (!(opt.grid_step > 0.0) || !(opt.max_tau >= opt.grid_step)) {
        throw argument_error("max_feasible_tau_u: need 0 < grid_step <= max_tau");
    }
    const auto cl = assemble_closed_loop(m, gains);
    TauSearchResult res;
    auto feasible_at = [&](long k) {
        const double tau = static_cast<double>(k) * opt.grid_step;
        const auto out = probe_sampled(m, cl, {delta0, delta1, tau_My, tau}, opt.solver);
        res.probes.push_back({tau, out.status, out.iterations});
        if (out.status == sdp::Status::inconclusive) {
            ++res.inconclusive;
            if (!opt.inconclusive_as_infeasible) {
                throw inconclusive_error("solver inconclusive at tau_Mu = " + std::to_string(tau) + ": " + out.message,
                                         tau);
            }
        }
        return out.status == sdp::Status::feasible;
    };
    const long top = std::lround(std::floor(opt.max_tau / opt.grid_step + 1e-9));
    if (!feasible_at(1)) {
        return res;
    }
    if (feasible_at(top)) {
        res.tau_Mu = static_cast<double>(top) * opt.grid_step;
        return res;
    }
    long lo = 1;
    long hi = top;
    while (hi - lo > 1) {
        const long mid = lo + (hi - lo) / 2;
        if (feasible_at(mid)) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    res.tau_Mu = static_cast<double>(lo) * opt.grid_step;
    return res;
}

struct SweepCell {
    int N = 0;
    double tau_My = 0.0;
    enum class Kind { value, infeasible, error } kind = Kind::error;
    double tau_Mu = 0.0;
    int inconclusive = 0;
    std::string message;
};

struct SweepSpec {
    SystemConfig base;
    std::vector<int> Ns;
    std::vector<double> tau_My;
    std::optional<GainSet> gains; // reference gains when empty
    TauSearchOptions search;
    int jobs = 1;
};

// Row-major over tau_My, then N. Cells run on `jobs` worker threads, each
// owning its own solver state.
inline std::vector<SweepCell> run_sweep(const SweepSpec& spec,
                                        const std::function<void(const SweepCell&)>& on_cell = {}) {
    std::vector<SweepCell> cells;
    for (double ty : spec.tau_My) {
        for (int N : spec.Ns) {
            SweepCell c;
            c.N = N;
            c.tau_My = ty;
            cells.push_back(c);
        }
    }
    std::atomic<std::size_t> next{0};
    std::mutex report;
    auto worker = [&]() {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            SweepCell& c = cells[i];
            try {
                SystemConfig cfg = spec.base;
                cfg.N = c.N;
                const auto m = reduced_matrices(cfg);
                const GainSet g = spec.gains ? *spec.gains : reference_gains();
                TauSearchOptions opt = spec.search;
                opt.inconclusive_as_infeasible = true;
                const auto r = max_feasible_tau_u(m, g, c.tau_My, cfg.delta0, cfg.delta1, opt);
                c.inconclusive = r.inconclusive;
                if (r.tau_Mu) {
                    c.kind = SweepCell::Kind::value;
                    c.tau_Mu = *r.tau_Mu;
                } else {
                    c.kind = SweepCell::Kind::infeasible;
                }
            } catch (const std::exception& e) {
                c.kind = SweepCell::Kind::error;
                c.message = e.what();
            }
            if (on_cell) {
                std::lock_guard<std::mutex> lock(report);
                on_cell(c);
            }
        }
    };
    const int jobs = std::max(1, spec.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) {
            pool.emplace_back(worker);
        }
        for (auto& t : pool) {
            t.join();
        }
    }
    return cells;
}

} // namespace heatctl
