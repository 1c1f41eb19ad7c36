// Single point positioning: per-epoch weighted least squares on corrected pseudoranges.
#pragma once

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"

namespace pcfgo::sim {

struct SppOptions {
    double step_tolerance = 1e-4;
    int max_iterations = 20;
};

struct SppSolution {
    NodeState state;
    int iterations = 0;
    /// Post-fit residual per used observation, in input order.
    std::vector<double> residuals;
};

namespace detail {

inline std::vector<std::pair<const fgo::PseudorangeObs*, const fgo::SatelliteState*>> match_observations(
    std::span<const fgo::PseudorangeObs> obs, std::span<const fgo::SatelliteState> sats) {
    std::map<SatelliteId, const fgo::SatelliteState*> by_id;
    for (const auto& s : sats) by_id[s.id] = &s;
    std::vector<std::pair<const fgo::PseudorangeObs*, const fgo::SatelliteState*>> out;
    for (const auto& o : obs) {
        if (auto it = by_id.find(o.sat_id); it != by_id.end()) out.emplace_back(&o, it->second);
    }
    return out;
}

}  // namespace detail

/// Gauss-Newton iterations from `init` (clock bias starts at zero) until the
/// update is below the step tolerance.
inline SppSolution spp_solve_detailed(std::span<const fgo::PseudorangeObs> obs,
                                      std::span<const fgo::SatelliteState> sats, const EcefVector& init,
                                      const SppOptions& opt = {}) {
    const auto matched = detail::match_observations(obs, sats);
    if (matched.size() < 4) throw Error(ErrorCode::InsufficientSatellites, "SPP needs >= 4 pseudoranges");

    const auto m = static_cast<Eigen::Index>(matched.size());
    NodeState x{init, 0.0};
    Eigen::MatrixX4d h(m, 4);
    Eigen::VectorXd r(m);
    Eigen::VectorXd w(m);

    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        for (Eigen::Index i = 0; i < m; ++i) {
            const auto& [o, s] = matched[static_cast<std::size_t>(i)];
            const Eigen::Vector3d los = s->position - x.position;
            const Eigen::Vector3d e = los.normalized();
            h.row(i) << -e.transpose(), 1.0;
            r(i) = fgo::pseudorange_error(x, *s, *o);
            w(i) = 1.0 / (o->sigma * o->sigma);
        }
        const Eigen::Matrix4d normal = h.transpose() * w.asDiagonal() * h;
        const Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(normal, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        if (!(lo > 0.0) || eig.eigenvalues().maxCoeff() / lo > 1e12) {
            throw Error(ErrorCode::SingularGeometry, "SPP geometry is singular");
        }
        const Eigen::Vector4d dx = normal.ldlt().solve(h.transpose() * w.asDiagonal() * r);
        x.position += dx.head<3>();
        x.clock_bias += dx(3);
        if (dx.head<3>().norm() < opt.step_tolerance) {
            SppSolution sol{x, iter, {}};
            for (const auto& [o, s] : matched) sol.residuals.push_back(fgo::pseudorange_error(x, *s, *o));
            return sol;
        }
    }
    throw Error(ErrorCode::NotConverged, "SPP did not converge");
}

inline NodeState spp_solve(std::span<const fgo::PseudorangeObs> obs, std::span<const fgo::SatelliteState> sats,
                           const EcefVector& init) {
    return spp_solve_detailed(obs, sats, init).state;
}

}  // namespace pcfgo::sim
