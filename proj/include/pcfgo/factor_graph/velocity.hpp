#pragma once

#include <map>
#include <span>

#include <Eigen/Dense>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"

namespace pcfgo::fgo {

/// Least-squares receiver velocity and clock drift from Doppler measurements.
///
/// Each row relates y = -lambda*f_d - v_s.e + drift_s to the unknowns through
/// [-e^T, 1], with e the unit vector from `spp_position` to the satellite.
/// Dopplers without a matching satellite are ignored.
inline VelocityEstimate estimate_velocity(std::span<const DopplerObs> dopplers,
                                          std::span<const SatelliteState> sats,
                                          const EcefVector& spp_position, double sigma_v = 0.6) {
    std::map<SatelliteId, const SatelliteState*> by_id;
    for (const auto& s : sats) by_id[s.id] = &s;

    std::map<SatelliteId, const DopplerObs*> used;
    for (const auto& d : dopplers) {
        if (by_id.contains(d.sat_id)) used[d.sat_id] = &d;
    }
    if (used.size() < 4) {
        throw Error(ErrorCode::InsufficientSatellites, "velocity estimation needs >= 4 Dopplers");
    }

    const auto m = static_cast<Eigen::Index>(used.size());
    Eigen::MatrixX4d g(m, 4);
    Eigen::VectorXd y(m);
    Eigen::Index row = 0;
    for (const auto& [id, d] : used) {
        const SatelliteState& sat = *by_id.at(id);
        const Eigen::Vector3d e = (sat.position - spp_position).normalized();
        g.row(row) << -e.transpose(), 1.0;
        y(row) = -d->wavelength * d->value - sat.velocity.dot(e) + sat.clock_drift;
        ++row;
    }

    const Eigen::Matrix4d normal = g.transpose() * g;
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > 1e12) {
        throw Error(ErrorCode::SingularGeometry, "Doppler geometry matrix is ill-conditioned");
    }
    const Eigen::Vector4d x = normal.ldlt().solve(g.transpose() * y);
    return {x.head<3>(), x(3), sigma_v};
}

}  // namespace pcfgo::fgo
