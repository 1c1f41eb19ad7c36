// Output writers: per-epoch CSV, summary JSON, sweep table and measurement dump.
// All lengths are meters, velocities m/s, times seconds.
#pragma once

#include <cstdio>
#include <ostream>
#include <string>

#include <json.hpp>

#include "pcfgo/evaluation/pipeline.hpp"
#include "pcfgo/evaluation/sweep.hpp"
#include "pcfgo/simulator/measurements.hpp"

namespace pcfgo::io {

using nlohmann::json;

inline constexpr const char* kEpochCsvHeader =
    "epoch,vehicle,mode,err_e,err_n,err_u,hpe,vpe,n_sats,n_ranges,plane_status,solver_iters";

inline constexpr const char* kSweepCsvHeader =
    "row,rate,mode,seed,n_seeds,h_rmse,v_rmse,cep95,max_hpe,max_vpe";

/// Fixed-format number so repeated runs give identical bytes.
inline std::string fmt(double x, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

inline std::string plane_status_name(const std::optional<plane::PlaneStatus>& s) {
    return s ? std::string(plane::to_string(*s)) : "none";
}

inline void write_epoch_csv(std::ostream& os, const eval::RunReport& report) {
    os << kEpochCsvHeader << '\n';
    const std::string mode(eval::to_string(report.mode));
    for (const auto& r : report.records) {
        os << r.epoch << ',' << r.vehicle << ',' << mode << ',' << fmt(r.east) << ',' << fmt(r.north) << ','
           << fmt(r.up) << ',' << fmt(r.hpe) << ',' << fmt(r.vpe) << ',' << r.n_sats << ',' << r.n_ranges << ','
           << plane_status_name(r.plane_status) << ',' << r.solver_iterations << '\n';
    }
}

inline json summary_json(const eval::Summary& s) {
    return json{{"h_rmse", s.h_rmse}, {"v_rmse", s.v_rmse}, {"cep95", s.cep95},
                {"max_hpe", s.max_hpe}, {"max_vpe", s.max_vpe}, {"n", s.n}};
}

inline json summary_document(const eval::RunReport& report) {
    json doc = summary_json(report.summary);
    doc["mode"] = std::string(eval::to_string(report.mode));
    doc["rate"] = report.interruption_rate;
    doc["seed"] = report.seed;
    doc["target_vehicle"] = report.target_vehicle;
    doc["target"] = summary_json(report.target_summary);
    doc["planes"] = json{{"available", report.planes.available},
                         {"available_after_exclusion", report.planes.after_exclusion},
                         {"unavailable", report.planes.unavailable}};
    doc["solver"] = json{{"solves", report.solver.solves},
                         {"iterations", report.solver.total_iterations},
                         {"non_convergences", report.solver.non_convergences}};
    return doc;
}

inline void write_summary_json(std::ostream& os, const eval::RunReport& report) {
    os << summary_document(report).dump(2) << '\n';
}

/// Per-run rows ("run") followed by per-(rate, mode) median rows ("median").
inline void write_sweep_csv(std::ostream& os, const eval::SweepResult& sweep) {
    os << kSweepCsvHeader << '\n';
    auto row = [&](const char* kind, double rate, eval::MethodMode mode, const std::string& seed, int n,
                   const eval::Summary& s) {
        os << kind << ',' << fmt(rate, 3) << ',' << eval::to_string(mode) << ',' << seed << ',' << n << ','
           << fmt(s.h_rmse) << ',' << fmt(s.v_rmse) << ',' << fmt(s.cep95) << ',' << fmt(s.max_hpe) << ','
           << fmt(s.max_vpe) << '\n';
    };
    for (const auto& r : sweep.runs) row("run", r.rate, r.mode, std::to_string(r.seed), 1, r.summary);
    for (const auto& a : sweep.aggregates) row("median", a.rate, a.mode, "", a.n_seeds, a.median);
}

inline json vec3(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

/// One JSON object per epoch: satellites, observations, ranges and truth.
inline json measurement_record(const sim::EpochMeasurements& m) {
    json vehicles = json::array();
    for (const auto& vm : m.vehicles) {
        json sats = json::array();
        for (const auto& s : vm.sats) {
            sats.push_back({{"id", s.id}, {"position", vec3(s.position)}, {"velocity", vec3(s.velocity)},
                            {"clock_drift", s.clock_drift}, {"elevation", s.elevation}});
        }
        json prs = json::array();
        for (const auto& p : vm.pseudoranges) {
            prs.push_back({{"sat_id", p.sat_id}, {"value", p.value}, {"dgnss_correction", p.dgnss_correction},
                           {"sigma", p.sigma}});
        }
        json dops = json::array();
        for (const auto& d : vm.dopplers) {
            dops.push_back({{"sat_id", d.sat_id}, {"value", d.value}, {"wavelength", d.wavelength}});
        }
        vehicles.push_back({{"vehicle", vm.vehicle}, {"satellites", sats}, {"pseudoranges", prs}, {"dopplers", dops}});
    }
    json ranges = json::array();
    for (const auto& r : m.ranges) {
        ranges.push_back({{"vehicle_a", r.vehicle_a}, {"vehicle_b", r.vehicle_b}, {"value", r.value}, {"sigma", r.sigma}});
    }
    json truth = json::array();
    for (const auto& t : m.truth) {
        truth.push_back({{"vehicle", t.vehicle}, {"position", vec3(t.state.position)},
                         {"clock_bias", t.state.clock_bias}, {"velocity", vec3(t.velocity)},
                         {"clock_drift", t.clock_drift}, {"road_point", vec3(t.road_point)}});
    }
    return json{{"epoch", m.epoch}, {"time", m.time}, {"vehicles", vehicles}, {"ranges", ranges}, {"truth", truth}};
}

inline void write_measurements(std::ostream& os, const sim::Simulator& simulator) {
    for (int e = 0; e < simulator.duration(); ++e) os << measurement_record(simulator.epoch(e)).dump() << '\n';
}

}  // namespace pcfgo::io
