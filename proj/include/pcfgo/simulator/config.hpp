#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"
#include "pcfgo/factor_graph/solver.hpp"
#include "pcfgo/geodesy.hpp"
#include "pcfgo/plane_engine.hpp"

namespace pcfgo::sim {

enum class RoadShape { Plane, Slope, Curved };

struct RoadConfig {
    RoadShape shape = RoadShape::Plane;
    double grade = 0.0;            ///< rise over run, for Slope
    double radius = 500.0;         ///< m, radius of vertical curvature, for Curved
    double heading_deg = 30.0;     ///< direction of travel, degrees clockwise from north
};

struct NoiseConfig {
    /// Zenith pseudorange noise [m]; scaled by elevation like the estimator's model.
    double pseudorange_sigma = 1.5;
    /// Doppler noise as line-of-sight velocity [m/s].
    double doppler_sigma = 0.1;
    double uwb_sigma = 0.3;
    /// Differential error left after DGNSS corrections [m].
    double differential_sigma = 0.2;
    /// Probability per (vehicle, satellite, epoch) that a multipath burst starts.
    double multipath_rate = 0.0;
    double multipath_min = 5.0;
    double multipath_max = 15.0;
    double multipath_mean_duration = 10.0;  ///< epochs
    double clock_bias_psd = 0.0;             ///< m^2/s
    double clock_drift_psd = 0.0;            ///< (m/s)^2/s
};

/// Street-canyon visibility: inside a canyon period, satellites below
/// `mask_deg` are blocked unless their azimuth is within `street_halfwidth_deg`
/// of the street axis.
struct UrbanConfig {
    double mask_deg = 10.0;
    double street_halfwidth_deg = 30.0;
    std::vector<std::pair<int, int>> canyon_epochs;  ///< inclusive ranges
};

struct EstimatorConfig {
    fgo::PseudorangeNoiseModel pseudorange{};
    double range_sigma = 0.3;
    double velocity_sigma = 0.6;
    double pseudorange_gate = 10.0;
    double range_gate = 5.0;
    int window_length = 5;
    fgo::SolverOptions solver{};
};

struct ScenarioConfig {
    int n_vehicles = 4;
    int duration = 120;
    double epoch_interval = 1.0;
    geodesy::GeodeticPoint origin{0.6978, 2.0300, 50.0};
    RoadConfig road{};
    std::vector<double> lane_offsets{0.0, 3.5, 0.0, 3.5};
    std::vector<double> start_offsets{0.0, 10.0, 20.0, 30.0};
    std::vector<double> speeds{10.0, 10.0, 10.0, 10.0};
    std::vector<double> antenna_heights{1.5, 1.6, 1.8, 1.7};
    NoiseConfig noise{};
    UrbanConfig urban{};
    double elevation_mask_deg = 10.0;
    double interruption_rate = 0.0;
    std::uint64_t seed = 1;
    VehicleId target_vehicle = 0;
    plane::PlaneConfig plane{};
    EstimatorConfig estimator{};

    void validate() const {
        auto fail = [](const std::string& what) { throw Error(ErrorCode::Config, what); };
        if (n_vehicles < 1) fail("n_vehicles must be >= 1");
        if (duration < 1) fail("duration must be >= 1");
        if (!(epoch_interval > 0.0)) fail("epoch_interval must be > 0");
        const auto n = static_cast<std::size_t>(n_vehicles);
        if (lane_offsets.size() != n || start_offsets.size() != n || speeds.size() != n ||
            antenna_heights.size() != n) {
            fail("per-vehicle lists must have n_vehicles entries");
        }
        for (double h : antenna_heights) {
            if (h < 0.0) fail("antenna heights must be >= 0");
        }
        if (interruption_rate < 0.0 || interruption_rate > 1.0) fail("interruption_rate must be in [0, 1]");
        if (noise.pseudorange_sigma < 0.0 || noise.doppler_sigma < 0.0 || noise.uwb_sigma < 0.0 ||
            noise.differential_sigma < 0.0 || noise.clock_bias_psd < 0.0 || noise.clock_drift_psd < 0.0) {
            fail("noise sigmas must be >= 0");
        }
        if (noise.multipath_rate < 0.0 || noise.multipath_rate > 1.0) fail("multipath_rate must be in [0, 1]");
        if (noise.multipath_min > noise.multipath_max) fail("multipath_min must be <= multipath_max");
        if (noise.multipath_mean_duration < 1.0) fail("multipath_mean_duration must be >= 1");
        if (road.shape == RoadShape::Curved && !(road.radius > 0.0)) fail("road radius must be > 0");
        if (target_vehicle < 0 || target_vehicle >= n_vehicles) fail("target_vehicle out of range");
        if (estimator.window_length < 1) fail("window_length must be >= 1");
        if (!(estimator.range_sigma > 0.0) || !(estimator.velocity_sigma > 0.0)) fail("estimator sigmas must be > 0");
        plane.validate();
    }

    /// Noise-free copy: every stochastic error term is zeroed.
    ScenarioConfig noise_free() const {
        ScenarioConfig c = *this;
        c.noise.pseudorange_sigma = 0.0;
        c.noise.doppler_sigma = 0.0;
        c.noise.uwb_sigma = 0.0;
        c.noise.differential_sigma = 0.0;
        c.noise.multipath_rate = 0.0;
        c.noise.clock_bias_psd = 0.0;
        c.noise.clock_drift_psd = 0.0;
        return c;
    }
};

}  // namespace pcfgo::sim
