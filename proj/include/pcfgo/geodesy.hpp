// WGS-84 geodetic/ECEF conversions and the local East-North-Up frame.
#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Core>

#include "pcfgo/error.hpp"
#include "pcfgo/types.hpp"

namespace pcfgo::geodesy {

namespace wgs84 {
inline constexpr double kSemiMajorAxis = 6378137.0;
inline constexpr double kFlattening = 1.0 / 298.257223563;
inline constexpr double kSemiMinorAxis = kSemiMajorAxis * (1.0 - kFlattening);
inline constexpr double kEccentricitySq = kFlattening * (2.0 - kFlattening);
}  // namespace wgs84

/// Latitude/longitude [rad] and height above the ellipsoid [m].
struct GeodeticPoint {
    double latitude = 0.0;
    double longitude = 0.0;
    double height = 0.0;
};

/// Rotation taking East-North-Up coordinates to ECEF. Columns are the local
/// East, North and Up unit vectors expressed in ECEF.
class EnuRotation {
public:
    EnuRotation() = default;
    explicit EnuRotation(const Eigen::Matrix3d& enu_to_ecef) : matrix_(enu_to_ecef) {}

    const Eigen::Matrix3d& matrix() const { return matrix_; }
    Eigen::Vector3d east() const { return matrix_.col(0); }
    Eigen::Vector3d north() const { return matrix_.col(1); }
    Eigen::Vector3d up() const { return matrix_.col(2); }

    EcefVector to_ecef(const Eigen::Vector3d& enu) const { return matrix_ * enu; }
    Eigen::Vector3d to_enu(const EcefVector& ecef_delta) const { return matrix_.transpose() * ecef_delta; }

private:
    Eigen::Matrix3d matrix_ = Eigen::Matrix3d::Identity();
};

inline EcefVector geodetic_to_ecef(const GeodeticPoint& g) {
    using namespace wgs84;
    const double sin_lat = std::sin(g.latitude);
    const double cos_lat = std::cos(g.latitude);
    const double n = kSemiMajorAxis / std::sqrt(1.0 - kEccentricitySq * sin_lat * sin_lat);
    return {(n + g.height) * cos_lat * std::cos(g.longitude),
            (n + g.height) * cos_lat * std::sin(g.longitude),
            (n * (1.0 - kEccentricitySq) + g.height) * sin_lat};
}

/// Fixed-point iteration on latitude; height uses the form that stays
/// well-conditioned at the poles. Converges to well below 1e-9 rad in a few steps.
inline GeodeticPoint ecef_to_geodetic(const EcefVector& p) {
    using namespace wgs84;
    if (!p.allFinite() || p.norm() <= 1.0e6) {
        throw Error(ErrorCode::NearCenter, "ECEF point within 1000 km of the geocenter");
    }
    const double rho = std::hypot(p.x(), p.y());
    double lon = std::atan2(p.y(), p.x());
    if (lon <= -std::numbers::pi) lon = std::numbers::pi;

    double lat = std::atan2(p.z(), rho * (1.0 - kEccentricitySq));
    for (int i = 0; i < 20; ++i) {
        const double s = std::sin(lat);
        const double n = kSemiMajorAxis / std::sqrt(1.0 - kEccentricitySq * s * s);
        const double next = std::atan2(p.z() + kEccentricitySq * n * s, rho);
        const bool done = std::abs(next - lat) < 1e-15;
        lat = next;
        if (done) break;
    }
    const double s = std::sin(lat);
    const double c = std::cos(lat);
    const double h = rho * c + p.z() * s - kSemiMajorAxis * std::sqrt(1.0 - kEccentricitySq * s * s);
    return {lat, lon, h};
}

inline EnuRotation enu_rotation(const GeodeticPoint& ref) {
    const double sl = std::sin(ref.latitude), cl = std::cos(ref.latitude);
    const double so = std::sin(ref.longitude), co = std::cos(ref.longitude);
    Eigen::Matrix3d r;
    r.col(0) << -so, co, 0.0;
    r.col(1) << -sl * co, -sl * so, cl;
    r.col(2) << cl * co, cl * so, sl;
    return EnuRotation(r);
}

/// ENU frame at an ECEF point.
inline EnuRotation enu_rotation_at(const EcefVector& p) { return enu_rotation(ecef_to_geodetic(p)); }

/// Drops an antenna position onto the road surface: p - S * [0, 0, h].
inline EcefVector project_to_road(const EcefVector& p, double antenna_height, const GeodeticPoint& ref) {
    if (antenna_height < 0.0) throw Error(ErrorCode::InvalidArgument, "antenna height must be >= 0");
    return p - enu_rotation(ref).up() * antenna_height;
}

/// Same as above with the ENU reference taken at the point itself.
inline EcefVector project_to_road(const EcefVector& p, double antenna_height) {
    return project_to_road(p, antenna_height, ecef_to_geodetic(p));
}

}  // namespace pcfgo::geodesy
