// End-to-end cooperative positioning loop over a simulated scenario:
// simulate -> SPP/gate -> planes -> graph -> solve -> record -> feed back.
#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/evaluation/metrics.hpp"
#include "pcfgo/factor_graph/gating.hpp"
#include "pcfgo/factor_graph/graph.hpp"
#include "pcfgo/factor_graph/solver.hpp"
#include "pcfgo/factor_graph/velocity.hpp"
#include "pcfgo/geodesy.hpp"
#include "pcfgo/plane_engine.hpp"
#include "pcfgo/simulator/measurements.hpp"

namespace pcfgo::eval {

enum class MethodMode { NonCP, MCI, PCAided, PCAidedNoIR, PCAidedNoFE };

inline std::string_view to_string(MethodMode m) {
    switch (m) {
    case MethodMode::NonCP: return "non-cp";
    case MethodMode::MCI: return "mci";
    case MethodMode::PCAided: return "pc-aided";
    case MethodMode::PCAidedNoIR: return "pc-aided-no-ir";
    case MethodMode::PCAidedNoFE: return "pc-aided-no-fe";
    }
    return "unknown";
}

inline MethodMode parse_mode(std::string_view name) {
    for (auto m : {MethodMode::NonCP, MethodMode::MCI, MethodMode::PCAided, MethodMode::PCAidedNoIR,
                   MethodMode::PCAidedNoFE}) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorCode::Config, "unknown method mode '" + std::string(name) + "'");
}

inline bool uses_planes(MethodMode m) {
    return m == MethodMode::PCAided || m == MethodMode::PCAidedNoIR || m == MethodMode::PCAidedNoFE;
}
inline bool uses_ranges(MethodMode m) {
    return m == MethodMode::MCI || m == MethodMode::PCAided || m == MethodMode::PCAidedNoFE;
}

struct PlaneCounts {
    int available = 0;
    int after_exclusion = 0;
    int unavailable = 0;

    int total() const { return available + after_exclusion + unavailable; }
    double available_fraction() const {
        return total() == 0 ? 0.0 : static_cast<double>(available) / total();
    }
};

struct SolverStats {
    int solves = 0;
    long total_iterations = 0;
    int non_convergences = 0;
};

struct RunReport {
    MethodMode mode = MethodMode::NonCP;
    double interruption_rate = 0.0;
    std::uint64_t seed = 0;
    VehicleId target_vehicle = 0;
    std::vector<ErrorRecord> records;  ///< (epoch, vehicle) order
    /// Estimate of each state at the epoch it was added.
    std::map<StateKey, NodeState> estimates;
    Summary summary;         ///< all vehicles pooled
    Summary target_summary;  ///< designated target vehicle only
    PlaneCounts planes;
    SolverStats solver;
};

/// Runs one scenario under one method mode. Deterministic in (cfg, mode).
inline RunReport run_scenario(const sim::ScenarioConfig& cfg_in, MethodMode mode) {
    sim::ScenarioConfig cfg = cfg_in;
    if (mode == MethodMode::PCAidedNoFE) cfg.plane.use_fault_exclusion = false;
    const sim::Simulator simulator(cfg);
    const fgo::GraphModes modes{uses_planes(mode), uses_ranges(mode)};

    RunReport report;
    report.mode = mode;
    report.interruption_rate = cfg.interruption_rate;
    report.seed = cfg.seed;
    report.target_vehicle = cfg.target_vehicle;

    plane::PositionHistory history(cfg.plane.history_capacity);
    fgo::GraphState graph;
    graph.max_window = cfg.estimator.window_length;
    std::map<VehicleId, NodeState> latest;

    for (int e = 0; e < simulator.duration(); ++e) {
        const auto meas = simulator.epoch(e);
        fgo::EpochData data{e, meas.time, {}, {}};
        std::map<VehicleId, NodeState> spp;
        std::map<VehicleId, std::optional<plane::PlaneStatus>> plane_status;
        const auto snapshot = modes.use_planes ? history.snapshot() : std::vector<plane::PositionRecord>{};

        for (const auto& vm : meas.vehicles) {
            const VehicleId v = vm.vehicle;
            const auto hv = cfg.antenna_heights[static_cast<std::size_t>(v)];
            const EcefVector init = latest.contains(v) ? latest.at(v).position : EcefVector::Zero();
            auto gated = fgo::gate_pseudoranges(vm.pseudoranges, vm.sats, init, cfg.estimator.pseudorange_gate);

            fgo::VehicleEpochData ved;
            ved.vehicle = v;
            ved.spp = gated.spp;
            ved.sats = vm.sats;
            ved.pseudoranges = std::move(gated.kept);

            std::optional<EcefVector> anchor;
            if (ved.spp) anchor = ved.spp->position;
            else if (latest.contains(v)) anchor = latest.at(v).position;
            if (anchor) {
                try {
                    ved.velocity = fgo::estimate_velocity(vm.dopplers, vm.sats, *anchor, cfg.estimator.velocity_sigma);
                } catch (const Error&) {
                    ved.velocity.reset();
                }
            }

            if (ved.spp) spp[v] = *ved.spp;
            if (modes.use_planes) {
                plane_status[v] = plane::PlaneStatus::Unavailable;
                if (ved.spp) {
                    const auto built = plane::build_plane(snapshot, ved.spp->position, hv, cfg.plane,
                                                          substream_seed(cfg.seed, {kStreamPlaneSelect, v, e}), v, e);
                    plane_status[v] = built.plane.status;
                    if (plane::usable(built.plane.status)) ved.plane = built.plane;
                }
                switch (*plane_status[v]) {
                case plane::PlaneStatus::Available: ++report.planes.available; break;
                case plane::PlaneStatus::AvailableAfterExclusion: ++report.planes.after_exclusion; break;
                case plane::PlaneStatus::Unavailable: ++report.planes.unavailable; break;
                }
            }
            data.vehicles.push_back(std::move(ved));
        }
        if (modes.use_ranges) data.ranges = fgo::gate_ranges(meas.ranges, spp, cfg.estimator.range_gate);

        graph = fgo::advance_window(std::move(graph), data, modes);
        if (graph.factors.empty()) continue;
        const auto solved = fgo::solve(graph, cfg.estimator.solver);
        graph.states = solved.states;
        ++report.solver.solves;
        report.solver.total_iterations += solved.iterations;
        if (!solved.converged) ++report.solver.non_convergences;

        std::map<VehicleId, int> ranges_used;
        for (const auto& f : graph.factors) {
            if (const auto* r = std::get_if<fgo::RangeFactor>(&f); r && r->a.epoch == e) {
                ++ranges_used[r->a.vehicle];
                ++ranges_used[r->b.vehicle];
            }
        }

        for (const auto& vt : meas.truth) {
            const fgo::StateKey key{vt.vehicle, e};
            auto it = graph.states.find(key);
            if (it == graph.states.end()) continue;
            const NodeState& est = it->second;
            latest[vt.vehicle] = est;
            report.estimates[key] = est;

            auto rec = enu_error(est.position, vt.state.position);
            rec.epoch = e;
            rec.vehicle = vt.vehicle;
            for (const auto& ved : data.vehicles) {
                if (ved.vehicle == vt.vehicle) rec.n_sats = static_cast<int>(ved.pseudoranges.size());
            }
            rec.n_ranges = ranges_used[vt.vehicle];
            rec.plane_status = plane_status.contains(vt.vehicle) ? plane_status.at(vt.vehicle) : std::nullopt;
            rec.solver_iterations = solved.iterations;
            report.records.push_back(rec);

            if (modes.use_planes) {
                const auto hv = cfg.antenna_heights[static_cast<std::size_t>(vt.vehicle)];
                history.push({vt.vehicle, e, geodesy::project_to_road(est.position, hv)});
            }
        }
    }

    if (report.records.empty()) throw Error(ErrorCode::Empty, "scenario produced no estimates");
    report.summary = summarize(report.records);
    std::vector<ErrorRecord> target;
    for (const auto& r : report.records) {
        if (r.vehicle == cfg.target_vehicle) target.push_back(r);
    }
    if (!target.empty()) report.target_summary = summarize(target);
    return report;
}

}  // namespace pcfgo::eval
