// Measurement types, factor error functions and their analytic Jacobians.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <type_traits>
#include <variant>

#include <Eigen/Core>

#include "pcfgo/error.hpp"
#include "pcfgo/plane_engine.hpp"
#include "pcfgo/types.hpp"

namespace pcfgo::fgo {

using plane::Plane;

struct SatelliteState {
    SatelliteId id = 0;
    EcefVector position = EcefVector::Zero();
    EcefVector velocity = EcefVector::Zero();  ///< m/s
    double clock_drift = 0.0;                   ///< m/s
    double elevation = 0.0;                     ///< rad, seen from the receiving vehicle
};

struct PseudorangeObs {
    SatelliteId sat_id = 0;
    double value = 0.0;             ///< m
    double dgnss_correction = 0.0;  ///< m, common-mode terms to remove
    double sigma = 1.0;             ///< m
};

struct DopplerObs {
    SatelliteId sat_id = 0;
    double value = 0.0;  ///< Hz
    double wavelength = kGpsL1Wavelength;
};

struct RangeObs {
    VehicleId vehicle_a = 0;
    VehicleId vehicle_b = 1;
    double value = 0.0;
    double sigma = 0.3;
};

struct VelocityEstimate {
    EcefVector velocity = EcefVector::Zero();
    double clock_drift = 0.0;
    double sigma_v = 0.6;
};

/// Elevation-dependent pseudorange standard deviation sqrt(a^2 + b^2 / sin^2(el)).
struct PseudorangeNoiseModel {
    double a = 0.5;
    double b = 0.5;

    double sigma(double elevation) const {
        const double s = std::max(std::sin(elevation), 0.05);
        return std::sqrt(a * a + b * b / (s * s));
    }
};

// -----------------------------------------------------------------------------
// Error functions
// -----------------------------------------------------------------------------

namespace detail {

// Error-free transformations: a + b = s + err and a * b = p + err exactly.
inline void two_sum(double a, double b, double& s, double& err) {
    s = a + b;
    const double bb = s - a;
    err = (a - (s - bb)) + (b - bb);
}

inline void two_prod(double a, double b, double& p, double& err) {
    p = a * b;
    err = std::fma(a, b, -p);
}

/// |a - b| as an unevaluated sum hi + lo. Satellite ranges are ~2e7 m, where a
/// plain double carries ~2e-9 m of rounding; the solver needs far less.
inline void precise_distance(const EcefVector& a, const EcefVector& b, double& hi, double& lo) {
    double sum_hi = 0.0, sum_lo = 0.0;
    for (int i = 0; i < 3; ++i) {
        double d, d_err, sq, sq_err, s, s_err;
        two_sum(a(i), -b(i), d, d_err);
        two_prod(d, d, sq, sq_err);
        two_sum(sum_hi, sq, s, s_err);
        sum_hi = s;
        sum_lo += s_err + sq_err + 2.0 * d * d_err;
    }
    hi = std::sqrt(sum_hi);
    lo = (std::fma(-hi, hi, sum_hi) + sum_lo) / (2.0 * hi);
}

}  // namespace detail

/// rho - correction - (|p - p_s| + b)
inline double pseudorange_error(const NodeState& state, const SatelliteState& sat, const PseudorangeObs& obs) {
    double hi, lo;
    detail::precise_distance(state.position, sat.position, hi, lo);
    return (obs.value - hi) - lo - obs.dgnss_correction - state.clock_bias;
}

/// Signed distance of the antenna to the translated plane: A x + B y + C z + D~.
inline double plane_constraint_error(const NodeState& state, const Plane& plane) {
    if (!plane::usable(plane.status)) {
        throw Error(ErrorCode::PlaneUnavailable, "plane constraint built from an unavailable plane");
    }
    // Terms of order 6e6 m cancel; extended precision keeps the result to ~1e-12 m.
    using Extended = long double;
    return static_cast<double>(Extended(plane.a) * state.position.x() + Extended(plane.b) * state.position.y() +
                               Extended(plane.c) * state.position.z() + plane.translated_d);
}

inline double range_error(const NodeState& a, const NodeState& b, const RangeObs& obs) {
    return obs.value - (a.position - b.position).norm();
}

inline Eigen::Vector3d velocity_error(const NodeState& curr, const NodeState& prev, const VelocityEstimate& vel,
                                      double dt) {
    if (!(dt > 0.0)) throw Error(ErrorCode::InvalidArgument, "velocity factor needs dt > 0");
    return vel.velocity - (curr.position - prev.position) / dt;
}

// -----------------------------------------------------------------------------
// Factors
// -----------------------------------------------------------------------------

struct StateKey {
    VehicleId vehicle = 0;
    int epoch = 0;

    auto operator<=>(const StateKey&) const = default;
};

struct PseudorangeFactor {
    StateKey key;
    SatelliteState sat;
    PseudorangeObs obs;
};

struct PlaneFactor {
    StateKey key;
    Plane plane;
};

struct RangeFactor {
    StateKey a;
    StateKey b;
    RangeObs obs;
};

struct VelocityFactor {
    StateKey prev;
    StateKey curr;
    VelocityEstimate vel;
    double dt = 1.0;
};

using Factor = std::variant<PseudorangeFactor, PlaneFactor, RangeFactor, VelocityFactor>;

enum class FactorKind { Pseudorange, Plane, Range, Velocity };

inline FactorKind kind(const Factor& f) { return static_cast<FactorKind>(f.index()); }

/// Keys a factor touches, in Jacobian block order.
struct FactorKeys {
    std::array<StateKey, 2> keys{};
    int count = 0;
};

inline FactorKeys keys_of(const Factor& f) {
    return std::visit(
        [](const auto& x) -> FactorKeys {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, PseudorangeFactor> || std::is_same_v<T, PlaneFactor>) {
                return {{x.key, StateKey{}}, 1};
            } else if constexpr (std::is_same_v<T, RangeFactor>) {
                return {{x.a, x.b}, 2};
            } else {
                return {{x.prev, x.curr}, 2};
            }
        },
        f);
}

inline int residual_dim(const Factor& f) { return kind(f) == FactorKind::Velocity ? 3 : 1; }

/// Linearization of one factor: error, per-state Jacobian blocks with respect to
/// [x, y, z, clock_bias], and the noise sigma shared by all error rows.
struct Linearization {
    int dim = 1;
    Eigen::Vector3d error = Eigen::Vector3d::Zero();
    FactorKeys keys;
    std::array<Eigen::Matrix<double, 3, 4>, 2> jacobian{Eigen::Matrix<double, 3, 4>::Zero(),
                                                        Eigen::Matrix<double, 3, 4>::Zero()};
    double sigma = 1.0;
};

inline double factor_sigma(const Factor& f) {
    return std::visit(
        [](const auto& x) -> double {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, PseudorangeFactor>) return x.obs.sigma;
            else if constexpr (std::is_same_v<T, PlaneFactor>) return x.plane.sigma_pc;
            else if constexpr (std::is_same_v<T, RangeFactor>) return x.obs.sigma;
            else return x.vel.sigma_v;
        },
        f);
}

/// Evaluates the error of `f`; `state_of(key)` must return the NodeState for a key.
template <typename StateLookup>
Eigen::Vector3d factor_error(const Factor& f, StateLookup&& state_of) {
    return std::visit(
        [&](const auto& x) -> Eigen::Vector3d {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, PseudorangeFactor>) {
                return {pseudorange_error(state_of(x.key), x.sat, x.obs), 0.0, 0.0};
            } else if constexpr (std::is_same_v<T, PlaneFactor>) {
                return {plane_constraint_error(state_of(x.key), x.plane), 0.0, 0.0};
            } else if constexpr (std::is_same_v<T, RangeFactor>) {
                return {range_error(state_of(x.a), state_of(x.b), x.obs), 0.0, 0.0};
            } else {
                return velocity_error(state_of(x.curr), state_of(x.prev), x.vel, x.dt);
            }
        },
        f);
}

/// Analytic Jacobian of the factor error.
template <typename StateLookup>
Linearization factor_jacobian(const Factor& f, StateLookup&& state_of) {
    Linearization lin;
    lin.dim = residual_dim(f);
    lin.keys = keys_of(f);
    lin.sigma = factor_sigma(f);
    lin.error = factor_error(f, state_of);
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, PseudorangeFactor>) {
                const Eigen::Vector3d los = x.sat.position - state_of(x.key).position;
                const double r = los.norm();
                if (!(r > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "receiver coincides with satellite");
                lin.jacobian[0].block<1, 3>(0, 0) = (los / r).transpose();
                lin.jacobian[0](0, 3) = -1.0;
            } else if constexpr (std::is_same_v<T, PlaneFactor>) {
                lin.jacobian[0].block<1, 3>(0, 0) = x.plane.normal().transpose();
            } else if constexpr (std::is_same_v<T, RangeFactor>) {
                const Eigen::Vector3d baseline = state_of(x.a).position - state_of(x.b).position;
                const double d = baseline.norm();
                if (!(d > 0.0)) throw Error(ErrorCode::DegenerateGeometry, "range factor between coincident states");
                const Eigen::Vector3d u = baseline / d;
                lin.jacobian[0].block<1, 3>(0, 0) = -u.transpose();
                lin.jacobian[1].block<1, 3>(0, 0) = u.transpose();
            } else {
                const Eigen::Matrix3d block = Eigen::Matrix3d::Identity() / x.dt;
                lin.jacobian[0].block<3, 3>(0, 0) = block;   // prev
                lin.jacobian[1].block<3, 3>(0, 0) = -block;  // curr
            }
        },
        f);
    return lin;
}

}  // namespace pcfgo::fgo
