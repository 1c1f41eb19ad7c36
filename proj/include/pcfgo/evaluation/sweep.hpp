// Interruption-rate sweeps over paired seeds, with median aggregation.
#pragma once

#include <algorithm>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/evaluation/metrics.hpp"
#include "pcfgo/evaluation/pipeline.hpp"

namespace pcfgo::eval {

/// One scenario run, reduced to its headline numbers.
struct SweepRun {
    double rate = 0.0;
    MethodMode mode = MethodMode::NonCP;
    std::uint64_t seed = 0;
    Summary summary;
    Summary target_summary;
    PlaneCounts planes;
    SolverStats solver;
};

/// Per-(rate, mode) medians over seeds.
struct SweepAggregate {
    double rate = 0.0;
    MethodMode mode = MethodMode::NonCP;
    int n_seeds = 0;
    Summary median;  ///< field-wise median; n is the number of runs
};

struct SweepResult {
    std::vector<SweepRun> runs;  ///< rate-major, then mode, then seed
    std::vector<SweepAggregate> aggregates;
};

inline Summary median_summary(const std::vector<Summary>& runs) {
    if (runs.empty()) throw Error(ErrorCode::Empty, "no runs to aggregate");
    auto field = [&](double Summary::*f) {
        std::vector<double> v;
        v.reserve(runs.size());
        for (const auto& s : runs) v.push_back(s.*f);
        return median(std::move(v));
    };
    Summary m;
    m.h_rmse = field(&Summary::h_rmse);
    m.v_rmse = field(&Summary::v_rmse);
    m.cep95 = field(&Summary::cep95);
    m.max_hpe = field(&Summary::max_hpe);
    m.max_vpe = field(&Summary::max_vpe);
    m.n = static_cast<int>(runs.size());
    return m;
}

/// Seeds are cfg.seed, cfg.seed + 1, ... so every (rate, mode) cell sees the
/// same scenarios. Runs execute on up to `jobs` threads; results are stored by
/// canonical index, so the output does not depend on scheduling.
inline SweepResult interruption_sweep(const sim::ScenarioConfig& cfg, const std::vector<double>& rates,
                                      const std::vector<MethodMode>& modes, int n_seeds, int jobs = 1) {
    for (double r : rates) {
        if (!(r >= 0.0 && r <= 1.0)) throw Error(ErrorCode::InvalidArgument, "interruption rates must lie in [0, 1]");
    }
    if (n_seeds < 1) throw Error(ErrorCode::InvalidArgument, "n_seeds must be >= 1");

    SweepResult out;
    for (double r : rates) {
        for (auto m : modes) {
            for (int k = 0; k < n_seeds; ++k) {
                SweepRun run;
                run.rate = r;
                run.mode = m;
                run.seed = cfg.seed + static_cast<std::uint64_t>(k);
                out.runs.push_back(run);
            }
        }
    }

    std::size_t next = 0;
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        while (true) {
            std::size_t i;
            {
                std::lock_guard lock(mu);
                if (next >= out.runs.size() || failure) return;
                i = next++;
            }
            try {
                auto& run = out.runs[i];
                sim::ScenarioConfig c = cfg;
                c.interruption_rate = run.rate;
                c.seed = run.seed;
                const auto report = run_scenario(c, run.mode);
                run.summary = report.summary;
                run.target_summary = report.target_summary;
                run.planes = report.planes;
                run.solver = report.solver;
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };
    const int n_threads = std::clamp(jobs, 1, static_cast<int>(std::max<std::size_t>(out.runs.size(), 1)));
    std::vector<std::thread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);

    for (std::size_t cell = 0; cell * static_cast<std::size_t>(n_seeds) < out.runs.size(); ++cell) {
        const auto begin = out.runs.begin() + static_cast<std::ptrdiff_t>(cell * static_cast<std::size_t>(n_seeds));
        std::vector<Summary> s;
        for (auto it = begin; it != begin + n_seeds; ++it) s.push_back(it->summary);
        out.aggregates.push_back({begin->rate, begin->mode, n_seeds, median_summary(s)});
    }
    return out;
}

}  // namespace pcfgo::eval
