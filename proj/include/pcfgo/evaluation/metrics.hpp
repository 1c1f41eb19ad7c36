#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"
#include "pcfgo/geodesy.hpp"
#include "pcfgo/plane_engine.hpp"

namespace pcfgo::eval {

using fgo::StateKey;

/// Truth-referenced position error of one vehicle at one epoch, in the ENU
/// frame at the truth point.
struct ErrorRecord {
    int epoch = 0;
    VehicleId vehicle = 0;
    double east = 0.0, north = 0.0, up = 0.0;
    double hpe = 0.0, vpe = 0.0;
    // Bookkeeping filled in by the pipeline.
    int n_sats = 0;
    int n_ranges = 0;
    std::optional<plane::PlaneStatus> plane_status;  ///< empty when the mode builds no planes
    int solver_iterations = 0;
};

inline ErrorRecord enu_error(const EcefVector& estimate, const EcefVector& truth) {
    const auto enu = geodesy::enu_rotation_at(truth).to_enu(estimate - truth);
    ErrorRecord r;
    r.east = enu.x();
    r.north = enu.y();
    r.up = enu.z();
    r.hpe = std::hypot(r.east, r.north);
    r.vpe = std::abs(r.up);
    return r;
}

/// One record per key, in key order. Both maps must hold the same keys.
inline std::vector<ErrorRecord> compute_errors(const std::map<StateKey, EcefVector>& estimates,
                                               const std::map<StateKey, EcefVector>& truth) {
    if (estimates.size() != truth.size()) throw Error(ErrorCode::KeyMismatch, "estimate/truth key sets differ");
    std::vector<ErrorRecord> out;
    out.reserve(estimates.size());
    for (const auto& [key, est] : estimates) {
        auto it = truth.find(key);
        if (it == truth.end()) throw Error(ErrorCode::KeyMismatch, "no truth for an estimated state");
        auto r = enu_error(est, it->second);
        r.epoch = key.epoch;
        r.vehicle = key.vehicle;
        out.push_back(r);
    }
    return out;
}

struct Summary {
    double h_rmse = 0.0;
    double v_rmse = 0.0;
    double cep95 = 0.0;
    double max_hpe = 0.0;
    double max_vpe = 0.0;
    int n = 0;
};

/// 1-based nearest-rank percentile of an unsorted sample.
inline double nearest_rank_percentile(std::vector<double> v, double pct) {
    if (v.empty()) throw Error(ErrorCode::Empty, "percentile of empty sample");
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    auto rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * n));
    rank = std::clamp<std::size_t>(rank, 1, v.size());
    return v[rank - 1];
}

/// RMSE, nearest-rank CEP95 and maxima. Squares are summed in sorted order so
/// the result does not depend on record order.
inline Summary summarize(const std::vector<ErrorRecord>& records) {
    if (records.empty()) throw Error(ErrorCode::Empty, "no records to summarize");
    Summary s;
    s.n = static_cast<int>(records.size());
    std::vector<double> hpe, vpe;
    hpe.reserve(records.size());
    vpe.reserve(records.size());
    for (const auto& r : records) {
        hpe.push_back(r.hpe);
        vpe.push_back(r.vpe);
    }
    std::sort(hpe.begin(), hpe.end());
    std::sort(vpe.begin(), vpe.end());
    double h2 = 0.0, v2 = 0.0;
    for (double x : hpe) h2 += x * x;
    for (double x : vpe) v2 += x * x;
    s.h_rmse = std::sqrt(h2 / s.n);
    s.v_rmse = std::sqrt(v2 / s.n);
    s.max_hpe = hpe.back();
    s.max_vpe = vpe.back();
    s.cep95 = nearest_rank_percentile(std::move(hpe), 95.0);
    return s;
}

/// Median with the mean of the two middle values for even sizes.
inline double median(std::vector<double> v) {
    if (v.empty()) throw Error(ErrorCode::Empty, "median of empty sample");
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace pcfgo::eval
