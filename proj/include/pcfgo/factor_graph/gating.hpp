// Residual gate for pseudoranges and inter-vehicle ranges ahead of graph building.
#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"
#include "pcfgo/simulator/spp.hpp"

namespace pcfgo::fgo {

struct GatedPseudoranges {
    std::optional<NodeState> spp;
    std::vector<PseudorangeObs> kept;
    int excluded = 0;
};

/// SPP with iterative exclusion: while the largest post-fit residual exceeds
/// `threshold` and more than five observations remain, drop it and re-solve.
/// When SPP fails outright every observation is kept and `spp` is empty.
inline GatedPseudoranges gate_pseudoranges(std::span<const PseudorangeObs> obs, std::span<const SatelliteState> sats,
                                           const EcefVector& init, double threshold = 10.0) {
    GatedPseudoranges out;
    out.kept.assign(obs.begin(), obs.end());
    // Keep only observations with a known satellite so residual indices line up.
    std::map<SatelliteId, bool> known;
    for (const auto& s : sats) known[s.id] = true;
    std::erase_if(out.kept, [&](const PseudorangeObs& o) { return !known.contains(o.sat_id); });

    while (true) {
        sim::SppSolution sol;
        try {
            sol = sim::spp_solve_detailed(out.kept, sats, init);
        } catch (const Error&) {
            out.spp.reset();
            return out;
        }
        out.spp = sol.state;
        std::size_t worst = 0;
        for (std::size_t i = 1; i < sol.residuals.size(); ++i) {
            if (std::abs(sol.residuals[i]) > std::abs(sol.residuals[worst])) worst = i;
        }
        if (sol.residuals.empty() || std::abs(sol.residuals[worst]) <= threshold || out.kept.size() <= 5) return out;
        out.kept.erase(out.kept.begin() + static_cast<std::ptrdiff_t>(worst));
        ++out.excluded;
    }
}

/// Drops ranges that disagree with the SPP baseline by more than `threshold`.
/// Pairs without SPP on both ends pass unchecked.
inline std::vector<RangeObs> gate_ranges(std::span<const RangeObs> ranges,
                                         const std::map<VehicleId, NodeState>& spp, double threshold = 5.0) {
    std::vector<RangeObs> out;
    for (const auto& r : ranges) {
        auto a = spp.find(r.vehicle_a);
        auto b = spp.find(r.vehicle_b);
        if (a != spp.end() && b != spp.end()) {
            const double baseline = (a->second.position - b->second.position).norm();
            if (std::abs(r.value - baseline) > threshold) continue;
        }
        out.push_back(r);
    }
    return out;
}

}  // namespace pcfgo::fgo
