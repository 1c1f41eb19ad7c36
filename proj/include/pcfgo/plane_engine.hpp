// Road plane construction from shared position histories: fitting-point
// selection, SVD plane fit, availability detection and RANSAC fault exclusion.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pcfgo/error.hpp"
#include "pcfgo/geodesy.hpp"
#include "pcfgo/rng.hpp"
#include "pcfgo/types.hpp"

namespace pcfgo::plane {

enum class PlaneStatus { Available, AvailableAfterExclusion, Unavailable };

inline std::string_view to_string(PlaneStatus s) {
    switch (s) {
    case PlaneStatus::Available: return "available";
    case PlaneStatus::AvailableAfterExclusion: return "available_after_exclusion";
    case PlaneStatus::Unavailable: return "unavailable";
    }
    return "unavailable";
}

inline bool usable(PlaneStatus s) { return s != PlaneStatus::Unavailable; }

/// A road-surface point contributed by one vehicle at one epoch.
struct PositionRecord {
    VehicleId vehicle_id = 0;
    int epoch = 0;
    EcefVector road_point = EcefVector::Zero();
};

struct FitPointSet {
    EcefVector anchor = EcefVector::Zero();
    std::vector<EcefVector> points;
    VehicleId target_vehicle = 0;
    int epoch = 0;
};

/// Normalized plane a*x + b*y + c*z + d = 0 with |(a, b, c)| = 1.
struct Plane {
    double a = 0.0, b = 0.0, c = 1.0, d = 0.0;
    /// Offset after shifting the plane up to the antenna.
    double translated_d = 0.0;
    PlaneStatus status = PlaneStatus::Unavailable;
    /// Standard deviation of the plane-constraint factor [m].
    double sigma_pc = 0.0;

    Eigen::Vector3d normal() const { return {a, b, c}; }
};

struct FitDiagnostics {
    std::vector<double> residuals;
    double res_max = 0.0;
    int n_points = 0;
    int excluded = 0;
    /// Ratio of the two smallest singular values of the centered point matrix.
    double singular_ratio = 0.0;
};

struct PlaneConfig {
    double range_fitting = 50.0;
    int max_fit_points = 20;
    int min_fit_points = 15;
    double residual_threshold_tf = 5.0;
    int ransac_max_iterations = 7;
    int history_capacity = 300;
    /// Fits with sigma2 / sigma3 below this are treated as near-collinear.
    double min_singular_ratio = 10.0;
    double sigma_pc_floor = 0.1;
    bool include_own_history = true;
    bool use_fault_exclusion = true;

    void validate() const {
        if (min_fit_points > max_fit_points || min_fit_points < 3 || range_fitting <= 0.0 ||
            residual_threshold_tf <= 0.0 || ransac_max_iterations <= 0 || history_capacity <= 0 ||
            min_singular_ratio < 0.0 || sigma_pc_floor <= 0.0) {
            throw Error(ErrorCode::Config, "invalid plane configuration");
        }
    }
};

// -----------------------------------------------------------------------------
// History
// -----------------------------------------------------------------------------

/// Bounded per-vehicle history of road points; oldest entries are evicted.
class PositionHistory {
public:
    explicit PositionHistory(int capacity_per_vehicle = 300) : capacity_(capacity_per_vehicle) {}

    void push(const PositionRecord& r) {
        auto& buf = buffers_[r.vehicle_id];
        buf.push_back(r);
        while (static_cast<int>(buf.size()) > capacity_) buf.pop_front();
    }

    /// Flattened copy in (vehicle, epoch) order.
    std::vector<PositionRecord> snapshot() const {
        std::vector<PositionRecord> out;
        for (const auto& [id, buf] : buffers_) out.insert(out.end(), buf.begin(), buf.end());
        return out;
    }

    std::size_t size() const {
        std::size_t n = 0;
        for (const auto& [id, buf] : buffers_) n += buf.size();
        return n;
    }

private:
    int capacity_;
    std::map<VehicleId, std::deque<PositionRecord>> buffers_;
};

// -----------------------------------------------------------------------------
// Fitting
// -----------------------------------------------------------------------------

inline FitPointSet collect_fit_points(std::span<const PositionRecord> history, const EcefVector& anchor,
                                      const PlaneConfig& cfg, std::uint64_t rng_seed,
                                      VehicleId target_vehicle = 0, int epoch = 0) {
    FitPointSet set{anchor, {}, target_vehicle, epoch};
    for (const auto& r : history) {
        if (!cfg.include_own_history && r.vehicle_id == target_vehicle) continue;
        if ((r.road_point - anchor).norm() < cfg.range_fitting) set.points.push_back(r.road_point);
    }
    const auto n = set.points.size();
    const auto keep = static_cast<std::size_t>(cfg.max_fit_points);
    if (n > keep) {
        // Partial Fisher-Yates over indices; survivors keep their history order.
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        Rng rng(rng_seed);
        for (std::size_t i = 0; i < keep; ++i) {
            const std::size_t j = i + rng.index(n - i);
            std::swap(idx[i], idx[j]);
        }
        idx.resize(keep);
        std::sort(idx.begin(), idx.end());
        std::vector<EcefVector> chosen;
        chosen.reserve(keep);
        for (auto i : idx) chosen.push_back(set.points[i]);
        set.points = std::move(chosen);
    }
    return set;
}

/// |a*x + b*y + c*z + d| for a normalized plane.
inline double point_plane_distance(const EcefVector& p, const Plane& plane) {
    return std::abs(plane.normal().dot(p) + plane.d);
}

/// Least-squares plane through the points. The normal is the right singular
/// vector of the centered point matrix for the smallest singular value, signed
/// so that it points along `up`.
inline std::pair<Plane, FitDiagnostics> fit_plane_svd(const FitPointSet& set, const Eigen::Vector3d& up,
                                                      double min_singular_ratio = 10.0) {
    const auto n = static_cast<Eigen::Index>(set.points.size());
    if (n < 3) throw Error(ErrorCode::TooFewPoints, "plane fit needs at least 3 points");

    // Mean offset from the first point keeps the centroid exact at ECEF magnitudes.
    const EcefVector& origin = set.points.front();
    Eigen::Vector3d mean_offset = Eigen::Vector3d::Zero();
    for (const auto& p : set.points) mean_offset += p - origin;
    mean_offset /= static_cast<double>(n);
    const Eigen::Vector3d centroid = origin + mean_offset;

    Eigen::MatrixX3d centered(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        centered.row(i) = ((set.points[static_cast<std::size_t>(i)] - origin) - mean_offset).transpose();
    }

    Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeFullV);
    const Eigen::Vector3d sv = svd.singularValues();
    const double scale = std::max(sv(0), std::numeric_limits<double>::min());
    const double ratio = sv(2) > 0.0 ? sv(1) / sv(2) : std::numeric_limits<double>::infinity();
    if (sv(1) <= 1e-9 * scale || ratio < min_singular_ratio) {
        throw Error(ErrorCode::DegenerateGeometry, "fitting points are nearly collinear");
    }

    Eigen::Vector3d normal = svd.matrixV().col(2).normalized();
    if (normal.dot(up) < 0.0) normal = -normal;

    Plane plane;
    plane.a = normal.x();
    plane.b = normal.y();
    plane.c = normal.z();
    plane.d = -normal.dot(centroid);
    plane.translated_d = plane.d;
    plane.status = PlaneStatus::Unavailable;

    FitDiagnostics diag;
    diag.n_points = static_cast<int>(n);
    diag.singular_ratio = ratio;
    diag.residuals.reserve(set.points.size());
    for (const auto& p : set.points) {
        // Residuals from centered coordinates stay exact far from the origin.
        const double r = std::abs(normal.dot((p - origin) - mean_offset));
        diag.residuals.push_back(r);
        diag.res_max = std::max(diag.res_max, r);
    }
    return {plane, diag};
}

/// Up direction taken from the ENU frame at the set's anchor.
inline std::pair<Plane, FitDiagnostics> fit_plane_svd(const FitPointSet& set, double min_singular_ratio = 10.0) {
    return fit_plane_svd(set, geodesy::enu_rotation_at(set.anchor).up(), min_singular_ratio);
}

/// Shifts |d| outward by the antenna height; the normal is untouched.
inline Plane translate_plane(const Plane& plane, double antenna_height) {
    Plane out = plane;
    out.translated_d = plane.d >= 0.0 ? plane.d + antenna_height : plane.d - antenna_height;
    return out;
}

inline PlaneStatus detect_availability(const FitDiagnostics& diag, const PlaneConfig& cfg) {
    if (diag.res_max <= cfg.residual_threshold_tf && diag.n_points >= cfg.min_fit_points) {
        return PlaneStatus::Available;
    }
    return PlaneStatus::Unavailable;
}

// -----------------------------------------------------------------------------
// RANSAC fault exclusion
// -----------------------------------------------------------------------------

struct RansacOutcome {
    FitPointSet inliers;
    /// Inlier count of every candidate plane, in sampling order.
    std::vector<int> candidate_inlier_counts;
    bool early_exit = false;
};

namespace detail {

/// Unit normal of the plane through three points, or nullopt when they are
/// (nearly) collinear.
inline std::optional<Eigen::Vector3d> normal_through(const EcefVector& p1, const EcefVector& p2,
                                                     const EcefVector& p3) {
    const Eigen::Vector3d u = p2 - p1;
    const Eigen::Vector3d v = p3 - p1;
    const double scale = std::max({u.squaredNorm(), v.squaredNorm(), (p3 - p2).squaredNorm()});
    const Eigen::Vector3d n = u.cross(v);
    if (!(scale > 0.0) || n.norm() < 1e-6 * scale) return std::nullopt;
    return n.normalized();
}

}  // namespace detail

/// Repeated minimal-triple fits; keeps the largest inlier set (distance < T_f)
/// and stops early once every point is an inlier. Degenerate triples are
/// redrawn without consuming an iteration.
inline RansacOutcome ransac_exclude(const FitPointSet& set, const PlaneConfig& cfg, std::uint64_t rng_seed) {
    const std::size_t n = set.points.size();
    if (n < 3) throw Error(ErrorCode::TooFewPoints, "RANSAC needs at least 3 points");

    RansacOutcome out;
    out.inliers = FitPointSet{set.anchor, {}, set.target_vehicle, set.epoch};
    std::size_t best = 0;
    Rng rng(rng_seed);
    constexpr int kMaxRedraws = 1000;

    for (int iter = 0; iter < cfg.ransac_max_iterations; ++iter) {
        std::optional<Eigen::Vector3d> normal;
        std::size_t origin = 0;
        for (int draw = 0; draw < kMaxRedraws && !normal; ++draw) {
            const std::size_t i = rng.index(n);
            const std::size_t j = rng.index(n);
            const std::size_t k = rng.index(n);
            if (i == j || j == k || i == k) continue;
            normal = detail::normal_through(set.points[i], set.points[j], set.points[k]);
            origin = i;
        }
        if (!normal) break;

        std::vector<EcefVector> inliers;
        for (const auto& p : set.points) {
            if (std::abs(normal->dot(p - set.points[origin])) < cfg.residual_threshold_tf) inliers.push_back(p);
        }
        out.candidate_inlier_counts.push_back(static_cast<int>(inliers.size()));
        if (inliers.size() > best) {
            best = inliers.size();
            out.inliers.points = std::move(inliers);
        }
        if (best == n) {
            out.early_exit = true;
            break;
        }
    }
    return out;
}

// -----------------------------------------------------------------------------
// Pipeline
// -----------------------------------------------------------------------------

struct PlaneResult {
    Plane plane;
    FitDiagnostics diagnostics;
};

namespace detail {

inline double rms(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

/// Fit + detect; degenerate geometry counts as a failed detection.
inline std::optional<PlaneResult> fit_and_detect(const FitPointSet& set, const Eigen::Vector3d& up,
                                                 const PlaneConfig& cfg, PlaneResult& last) {
    last.diagnostics = FitDiagnostics{};
    last.diagnostics.n_points = static_cast<int>(set.points.size());
    if (set.points.size() < 3) return std::nullopt;
    try {
        auto [plane, diag] = fit_plane_svd(set, up, cfg.min_singular_ratio);
        last = {plane, diag};
        if (detect_availability(diag, cfg) == PlaneStatus::Available) return last;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::DegenerateGeometry) throw;
    }
    return std::nullopt;
}

}  // namespace detail

/// collect -> fit -> detect; on failure RANSAC -> refit -> re-detect. A plane
/// that passes is shifted to antenna height and given its constraint sigma.
inline PlaneResult build_plane(std::span<const PositionRecord> history, const EcefVector& anchor,
                               double antenna_height, const PlaneConfig& cfg, std::uint64_t rng_seed,
                               VehicleId target_vehicle = 0, int epoch = 0) {
    const Eigen::Vector3d up = geodesy::enu_rotation_at(anchor).up();
    const auto set = collect_fit_points(history, anchor, cfg, substream_seed(rng_seed, {kStreamPlaneSelect}),
                                        target_vehicle, epoch);

    PlaneResult result;
    std::optional<PlaneResult> accepted = detail::fit_and_detect(set, up, cfg, result);
    PlaneStatus status = PlaneStatus::Available;
    int excluded = 0;

    if (!accepted && cfg.use_fault_exclusion && set.points.size() >= 3) {
        const auto ransac = ransac_exclude(set, cfg, substream_seed(rng_seed, {kStreamRansac}));
        excluded = static_cast<int>(set.points.size() - ransac.inliers.points.size());
        accepted = detail::fit_and_detect(ransac.inliers, up, cfg, result);
        status = PlaneStatus::AvailableAfterExclusion;
    }

    result.diagnostics.excluded = excluded;
    if (!accepted) {
        result.plane.status = PlaneStatus::Unavailable;
        return result;
    }
    result.plane = translate_plane(result.plane, antenna_height);
    result.plane.status = status;
    result.plane.sigma_pc = std::max(detail::rms(result.diagnostics.residuals), cfg.sigma_pc_floor);
    return result;
}

}  // namespace pcfgo::plane
