// GPS-like constellation on circular orbits, expressed in a rotating ECEF frame.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pcfgo/factor_graph/factors.hpp"
#include "pcfgo/geodesy.hpp"
#include "pcfgo/rng.hpp"
#include "pcfgo/simulator/config.hpp"

namespace pcfgo::sim {

namespace orbit {
inline constexpr double kRadius = 26'560'000.0;
inline constexpr double kGravitationalParameter = 3.986004418e14;
inline constexpr double kEarthRotationRate = 7.2921151467e-5;
inline constexpr double kInclination = 55.0 * std::numbers::pi / 180.0;
inline constexpr int kPlanes = 6;
inline constexpr int kSatsPerPlane = 4;
inline const double kMeanMotion = std::sqrt(kGravitationalParameter / (kRadius * kRadius * kRadius));
}  // namespace orbit

/// Time of epoch 0 within the orbital period; a per-seed offset gives every
/// scenario seed its own sky geometry.
inline double constellation_start_time(std::uint64_t seed) {
    Rng rng(seed, {kStreamConstellation});
    return rng.uniform(0.0, 2.0 * std::numbers::pi / orbit::kMeanMotion);
}

/// Per-satellite clock drift [m/s], constant over a scenario.
inline double satellite_clock_drift(std::uint64_t seed, SatelliteId id) {
    Rng rng(seed, {kStreamSatClock, id});
    return rng.uniform(-0.05, 0.05);
}

/// Position and velocity of every satellite at an absolute time [s].
inline std::vector<fgo::SatelliteState> constellation_at(double t, std::uint64_t seed) {
    using namespace orbit;
    std::vector<fgo::SatelliteState> sats;
    sats.reserve(kPlanes * kSatsPerPlane);
    const double theta = kEarthRotationRate * t;
    const Eigen::Matrix3d to_ecef = Eigen::AngleAxisd(-theta, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Eigen::Vector3d omega(0.0, 0.0, kEarthRotationRate);
    const double ci = std::cos(kInclination), si = std::sin(kInclination);

    for (int p = 0; p < kPlanes; ++p) {
        const double raan = p * 2.0 * std::numbers::pi / kPlanes;
        const double cr = std::cos(raan), sr = std::sin(raan);
        for (int k = 0; k < kSatsPerPlane; ++k) {
            const double phase = k * 2.0 * std::numbers::pi / kSatsPerPlane + p * std::numbers::pi / 12.0;
            const double u = phase + kMeanMotion * t;
            const double cu = std::cos(u), su = std::sin(u);
            const Eigen::Vector3d pos_inertial =
                kRadius * Eigen::Vector3d(cu * cr - su * ci * sr, cu * sr + su * ci * cr, su * si);
            const Eigen::Vector3d vel_inertial = kRadius * kMeanMotion *
                                                 Eigen::Vector3d(-su * cr - cu * ci * sr, -su * sr + cu * ci * cr, cu * si);
            fgo::SatelliteState s;
            s.id = p * kSatsPerPlane + k + 1;
            s.position = to_ecef * pos_inertial;
            s.velocity = to_ecef * (vel_inertial - omega.cross(pos_inertial));
            s.clock_drift = satellite_clock_drift(seed, s.id);
            s.elevation = std::numeric_limits<double>::quiet_NaN();
            sats.push_back(s);
        }
    }
    return sats;
}

/// All satellites at a scenario epoch.
inline std::vector<fgo::SatelliteState> generate_constellation(int epoch, const ScenarioConfig& cfg) {
    return constellation_at(constellation_start_time(cfg.seed) + epoch * cfg.epoch_interval, cfg.seed);
}

struct LookAngles {
    double elevation = 0.0;
    double azimuth = 0.0;  ///< rad, clockwise from north
};

inline LookAngles look_angles(const EcefVector& receiver, const EcefVector& sat,
                              const geodesy::EnuRotation& enu) {
    const Eigen::Vector3d d = enu.to_enu(sat - receiver);
    return {std::atan2(d.z(), std::hypot(d.x(), d.y())), std::atan2(d.x(), d.y())};
}

inline bool in_canyon(int epoch, const UrbanConfig& urban) {
    for (const auto& [a, b] : urban.canyon_epochs) {
        if (epoch >= a && epoch <= b) return true;
    }
    return false;
}

/// Satellites visible from `receiver`, with their elevation filled in. The
/// elevation mask always applies; inside canyon periods low satellites off the
/// street axis are blocked as well.
inline std::vector<fgo::SatelliteState> visible_satellites(const std::vector<fgo::SatelliteState>& all,
                                                           const EcefVector& receiver, int epoch,
                                                           const ScenarioConfig& cfg) {
    constexpr double kDeg = std::numbers::pi / 180.0;
    const auto enu = geodesy::enu_rotation_at(receiver);
    const bool canyon = in_canyon(epoch, cfg.urban);
    const double street = cfg.road.heading_deg * kDeg;
    std::vector<fgo::SatelliteState> out;
    for (const auto& s : all) {
        const auto look = look_angles(receiver, s.position, enu);
        if (look.elevation < cfg.elevation_mask_deg * kDeg) continue;
        if (canyon && look.elevation < cfg.urban.mask_deg * kDeg) {
            // Angular distance to the street axis, folded over both directions.
            double diff = std::remainder(look.azimuth - street, std::numbers::pi);
            if (std::abs(diff) > cfg.urban.street_halfwidth_deg * kDeg) continue;
        }
        auto v = s;
        v.elevation = look.elevation;
        out.push_back(v);
    }
    return out;
}

}  // namespace pcfgo::sim
