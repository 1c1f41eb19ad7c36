// Kinematic lane following on a synthetic road surface.
#pragma once

#include <cmath>
#include <numbers>
#include <vector>

#include "pcfgo/geodesy.hpp"
#include "pcfgo/simulator/config.hpp"

namespace pcfgo::sim {

struct TruthSample {
    int epoch = 0;
    EcefVector road_point = EcefVector::Zero();
    EcefVector antenna = EcefVector::Zero();
    EcefVector velocity = EcefVector::Zero();
    Eigen::Vector3d road_normal = Eigen::Vector3d::UnitZ();
};

/// Road surface in the ENU frame of the scenario origin, parametrized by
/// along-track arc length and lateral offset.
class RoadSurface {
public:
    explicit RoadSurface(const ScenarioConfig& cfg)
        : cfg_(cfg.road),
          origin_(geodesy::geodetic_to_ecef(cfg.origin)),
          enu_(geodesy::enu_rotation(cfg.origin)) {
        const double h = cfg.road.heading_deg * std::numbers::pi / 180.0;
        along_ = Eigen::Vector3d(std::sin(h), std::cos(h), 0.0);
        lateral_ = Eigen::Vector3d(std::cos(h), -std::sin(h), 0.0);  // to the right of travel
    }

    struct Point {
        EcefVector position;
        Eigen::Vector3d tangent;  ///< unit, ECEF
        Eigen::Vector3d normal;   ///< unit, ECEF, upward
        double curvature = 0.0;   ///< 1/m; the normal turns by -curvature * tangent per meter
    };

    Point at(double s, double lateral) const {
        const Eigen::Vector3d up = Eigen::Vector3d::UnitZ();
        Eigen::Vector3d local, tangent, normal;
        double curvature = 0.0;
        switch (cfg_.shape) {
        case RoadShape::Plane:
            local = s * along_;
            tangent = along_;
            normal = up;
            break;
        case RoadShape::Slope: {
            const double k = std::sqrt(1.0 + cfg_.grade * cfg_.grade);
            tangent = (along_ + cfg_.grade * up) / k;
            normal = (up - cfg_.grade * along_) / k;
            local = s * tangent;
            break;
        }
        case RoadShape::Curved: {
            // Sag curve of constant radius; arc length s from the origin.
            const double phi = s / cfg_.radius;
            local = cfg_.radius * std::sin(phi) * along_ + cfg_.radius * (1.0 - std::cos(phi)) * up;
            tangent = std::cos(phi) * along_ + std::sin(phi) * up;
            normal = -std::sin(phi) * along_ + std::cos(phi) * up;
            curvature = 1.0 / cfg_.radius;
            break;
        }
        }
        local += lateral * lateral_;
        return {origin_ + enu_.to_ecef(local), enu_.to_ecef(tangent), enu_.to_ecef(normal), curvature};
    }

private:
    RoadConfig cfg_;
    EcefVector origin_;
    geodesy::EnuRotation enu_;
    Eigen::Vector3d along_;
    Eigen::Vector3d lateral_;
};

/// Truth for every vehicle at every epoch. Antennas sit antenna_height above
/// the road along the surface normal.
inline std::vector<std::vector<TruthSample>> generate_trajectories(const ScenarioConfig& cfg) {
    const RoadSurface road(cfg);
    std::vector<std::vector<TruthSample>> out(static_cast<std::size_t>(cfg.n_vehicles));
    for (int v = 0; v < cfg.n_vehicles; ++v) {
        const auto i = static_cast<std::size_t>(v);
        auto& track = out[i];
        track.reserve(static_cast<std::size_t>(cfg.duration));
        for (int e = 0; e < cfg.duration; ++e) {
            const double s = cfg.start_offsets[i] + cfg.speeds[i] * e * cfg.epoch_interval;
            const auto p = road.at(s, cfg.lane_offsets[i]);
            TruthSample t;
            t.epoch = e;
            t.road_point = p.position;
            t.antenna = p.position + cfg.antenna_heights[i] * p.normal;
            t.velocity = cfg.speeds[i] * (1.0 - cfg.antenna_heights[i] * p.curvature) * p.tangent;
            t.road_normal = p.normal;
            track.push_back(t);
        }
    }
    return out;
}

}  // namespace pcfgo::sim
