#pragma once

#include <cmath>

#include <Eigen/Core>

namespace pcfgo {

/// Position or velocity in the Earth-Centered-Earth-Fixed frame [m or m/s].
using EcefVector = Eigen::Vector3d;

using VehicleId = int;
using SatelliteId = int;

/// Per-vehicle, per-epoch unknowns: antenna position and receiver clock bias [m].
struct NodeState {
    EcefVector position = EcefVector::Zero();
    double clock_bias = 0.0;

    bool finite() const { return position.allFinite() && std::isfinite(clock_bias); }
};

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kGpsL1Wavelength = kSpeedOfLight / 1575.42e6;

}  // namespace pcfgo
