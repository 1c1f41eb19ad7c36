// Forward models for pseudorange, Doppler and inter-vehicle range measurements.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pcfgo/factor_graph/factors.hpp"
#include "pcfgo/rng.hpp"
#include "pcfgo/simulator/config.hpp"
#include "pcfgo/simulator/constellation.hpp"
#include "pcfgo/simulator/trajectory.hpp"

namespace pcfgo::sim {

/// Ground truth for one vehicle at one epoch; never given to the estimator.
struct VehicleTruth {
    VehicleId vehicle = 0;
    NodeState state;  ///< antenna position and receiver clock bias
    EcefVector velocity = EcefVector::Zero();
    double clock_drift = 0.0;
    EcefVector road_point = EcefVector::Zero();
};

struct VehicleMeasurements {
    VehicleId vehicle = 0;
    std::vector<fgo::SatelliteState> sats;  ///< visible satellites, elevation filled
    std::vector<fgo::PseudorangeObs> pseudoranges;
    std::vector<fgo::DopplerObs> dopplers;
};

struct EpochMeasurements {
    int epoch = 0;
    double time = 0.0;
    std::vector<VehicleMeasurements> vehicles;
    std::vector<fgo::RangeObs> ranges;  ///< after interruption
    std::vector<VehicleTruth> truth;
};

/// Receiver clock bias and drift per epoch for one vehicle.
struct ClockTrack {
    std::vector<double> bias;
    std::vector<double> drift;
};

inline ClockTrack generate_clock(const ScenarioConfig& cfg, VehicleId v) {
    Rng rng(cfg.seed, {kStreamReceiverClock, v});
    ClockTrack c;
    double bias = rng.uniform(-3.0e4, 3.0e4);
    double drift = rng.uniform(-20.0, 20.0);
    const double dt = cfg.epoch_interval;
    for (int e = 0; e < cfg.duration; ++e) {
        c.bias.push_back(bias);
        c.drift.push_back(drift);
        const double w_bias = rng.normal(std::sqrt(cfg.noise.clock_bias_psd * dt));
        const double w_drift = rng.normal(std::sqrt(cfg.noise.clock_drift_psd * dt));
        bias += drift * dt + w_bias;
        drift += w_drift;
    }
    return c;
}

/// Multipath bias [m] per epoch for one (vehicle, satellite): bursts start with
/// probability `multipath_rate` and last a geometric number of epochs.
inline std::vector<double> generate_multipath(const ScenarioConfig& cfg, VehicleId v, SatelliteId s) {
    std::vector<double> bias(static_cast<std::size_t>(cfg.duration), 0.0);
    if (cfg.noise.multipath_rate <= 0.0) return bias;
    Rng rng(cfg.seed, {kStreamMultipath, v, s});
    const double p_end = 1.0 / cfg.noise.multipath_mean_duration;
    double current = 0.0;
    for (auto& b : bias) {
        if (current == 0.0) {
            if (rng.uniform() < cfg.noise.multipath_rate) {
                current = rng.uniform(cfg.noise.multipath_min, cfg.noise.multipath_max);
            }
        } else if (rng.uniform() < p_end) {
            current = 0.0;
        }
        b = current;
    }
    return bias;
}

/// Everything stochastic that persists across epochs, drawn once per scenario.
struct ScenarioProcesses {
    std::vector<std::vector<TruthSample>> trajectories;
    std::vector<ClockTrack> clocks;
    /// multipath[vehicle][sat_id - 1][epoch]
    std::vector<std::vector<std::vector<double>>> multipath;

    explicit ScenarioProcesses(const ScenarioConfig& cfg) : trajectories(generate_trajectories(cfg)) {
        constexpr int kSats = orbit::kPlanes * orbit::kSatsPerPlane;
        for (int v = 0; v < cfg.n_vehicles; ++v) {
            clocks.push_back(generate_clock(cfg, v));
            auto& per_sat = multipath.emplace_back();
            for (int s = 1; s <= kSats; ++s) per_sat.push_back(generate_multipath(cfg, v, s));
        }
    }

    std::vector<VehicleTruth> truth(int epoch) const {
        std::vector<VehicleTruth> out;
        const auto e = static_cast<std::size_t>(epoch);
        for (std::size_t v = 0; v < trajectories.size(); ++v) {
            const auto& t = trajectories[v][e];
            out.push_back({static_cast<VehicleId>(v), {t.antenna, clocks[v].bias[e]}, t.velocity, clocks[v].drift[e],
                           t.road_point});
        }
        return out;
    }
};

namespace detail {

/// Satellite clock bias [m] at time t; drift matches SatelliteState::clock_drift.
inline double satellite_clock_bias(std::uint64_t seed, const fgo::SatelliteState& s, double t) {
    Rng rng(seed, {kStreamSatClock, s.id, 1});
    return rng.uniform(-1.0e5, 1.0e5) + s.clock_drift * t;
}

/// Ionospheric + tropospheric delay [m]; removed exactly by the DGNSS correction.
inline double atmosphere_delay(std::uint64_t seed, SatelliteId id, double elevation, double t) {
    Rng rng(seed, {kStreamAtmosphere, id});
    const double zenith_iono = rng.uniform(2.0, 6.0);
    const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double sin_el = std::max(std::sin(elevation), 0.05);
    const double iono = zenith_iono * (1.0 + 0.2 * std::sin(2.0 * std::numbers::pi * t / 7200.0 + phase)) /
                        std::sqrt(1.0 - 0.9 * (1.0 - sin_el * sin_el));
    const double tropo = 2.3 / sin_el;
    return iono + tropo;
}

}  // namespace detail

/// Zenith-scaled simulator noise sigma; matches sqrt(a^2 + b^2/sin^2 el) with
/// a = b = base / sqrt(2).
inline double simulated_pseudorange_sigma(double base, double elevation) {
    const double s = std::max(std::sin(elevation), 0.05);
    return base * std::sqrt(0.5 * (1.0 + 1.0 / (s * s)));
}

/// Measurements for one epoch. Each measurement class draws from its own
/// (class, vehicle or pair, epoch) substream, so changing interruption_rate
/// changes nothing but the surviving range list.
inline EpochMeasurements synthesize_measurements(const std::vector<VehicleTruth>& truth,
                                                 const std::vector<fgo::SatelliteState>& all_sats,
                                                 const ScenarioConfig& cfg, int epoch,
                                                 const ScenarioProcesses& processes) {
    EpochMeasurements m;
    m.epoch = epoch;
    m.time = epoch * cfg.epoch_interval;
    m.truth = truth;
    const double t_abs = constellation_start_time(cfg.seed) + m.time;
    const auto e = static_cast<std::size_t>(epoch);

    for (const auto& vt : truth) {
        VehicleMeasurements vm;
        vm.vehicle = vt.vehicle;
        vm.sats = visible_satellites(all_sats, vt.state.position, epoch, cfg);
        Rng pr_rng(cfg.seed, {kStreamPseudorange, vt.vehicle, epoch});
        Rng dop_rng(cfg.seed, {kStreamDoppler, vt.vehicle, epoch});
        for (const auto& s : vm.sats) {
            const Eigen::Vector3d los = s.position - vt.state.position;
            const double range = los.norm();
            const Eigen::Vector3d unit = los / range;

            const double sat_clock = detail::satellite_clock_bias(cfg.seed, s, t_abs);
            const double atmos = detail::atmosphere_delay(cfg.seed, s.id, s.elevation, t_abs);
            const double noise = pr_rng.normal(simulated_pseudorange_sigma(cfg.noise.pseudorange_sigma, s.elevation)) +
                                 pr_rng.normal(cfg.noise.differential_sigma);
            const double mp = processes.multipath[static_cast<std::size_t>(vt.vehicle)]
                                                 [static_cast<std::size_t>(s.id - 1)][e];
            fgo::PseudorangeObs pr;
            pr.sat_id = s.id;
            pr.dgnss_correction = -sat_clock + atmos;
            pr.value = range + vt.state.clock_bias + pr.dgnss_correction + noise + mp;
            pr.sigma = cfg.estimator.pseudorange.sigma(s.elevation);
            vm.pseudoranges.push_back(pr);

            fgo::DopplerObs d;
            d.sat_id = s.id;
            const double rate = (s.velocity - vt.velocity).dot(unit) + vt.clock_drift - s.clock_drift +
                                dop_rng.normal(cfg.noise.doppler_sigma);
            d.value = -rate / d.wavelength;
            vm.dopplers.push_back(d);
        }
        m.vehicles.push_back(std::move(vm));
    }

    for (std::size_t a = 0; a < truth.size(); ++a) {
        for (std::size_t b = a + 1; b < truth.size(); ++b) {
            const auto va = truth[a].vehicle, vb = truth[b].vehicle;
            Rng noise_rng(cfg.seed, {kStreamUwbNoise, va, vb, epoch});
            Rng drop_rng(cfg.seed, {kStreamUwbDrop, va, vb, epoch});
            const double value =
                (truth[a].state.position - truth[b].state.position).norm() + noise_rng.normal(cfg.noise.uwb_sigma);
            if (drop_rng.uniform() < cfg.interruption_rate) continue;
            m.ranges.push_back({va, vb, value, cfg.estimator.range_sigma});
        }
    }
    return m;
}

/// Lazily generated measurement stream for one scenario.
class Simulator {
public:
    explicit Simulator(ScenarioConfig cfg) : cfg_(std::move(cfg)), processes_((cfg_.validate(), cfg_)) {}

    const ScenarioConfig& config() const { return cfg_; }
    int duration() const { return cfg_.duration; }

    EpochMeasurements epoch(int e) const {
        if (e < 0 || e >= cfg_.duration) throw Error(ErrorCode::InvalidArgument, "epoch outside scenario");
        return synthesize_measurements(processes_.truth(e), generate_constellation(e, cfg_), cfg_, e, processes_);
    }

    const ScenarioProcesses& processes() const { return processes_; }

private:
    ScenarioConfig cfg_;
    ScenarioProcesses processes_;
};

}  // namespace pcfgo::sim
