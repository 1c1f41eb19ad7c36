// Sliding-window factor graph over all vehicles' (position, clock) states.
#pragma once

#include <algorithm>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "pcfgo/error.hpp"
#include "pcfgo/factor_graph/factors.hpp"

namespace pcfgo::fgo {

/// Which optional factor classes enter the graph.
struct GraphModes {
    bool use_planes = true;
    bool use_ranges = true;
};

/// Everything one vehicle contributes to the graph at one epoch. Pseudoranges
/// are assumed to have passed the residual gate already.
struct VehicleEpochData {
    VehicleId vehicle = 0;
    std::optional<NodeState> spp;
    std::vector<SatelliteState> sats;
    std::vector<PseudorangeObs> pseudoranges;
    std::optional<VelocityEstimate> velocity;
    std::optional<Plane> plane;
};

struct EpochData {
    int epoch = 0;
    double time = 0.0;  ///< s
    std::vector<VehicleEpochData> vehicles;
    std::vector<RangeObs> ranges;
};

struct GraphState {
    std::deque<int> window;  ///< ascending epochs
    std::map<int, double> epoch_time;
    std::map<StateKey, NodeState> states;
    std::vector<Factor> factors;
    int max_window = 5;

    std::size_t count(FactorKind k) const {
        return static_cast<std::size_t>(
            std::count_if(factors.begin(), factors.end(), [k](const Factor& f) { return kind(f) == k; }));
    }
};

namespace detail {

inline bool references_only(const Factor& f, const std::map<StateKey, NodeState>& states) {
    const auto k = keys_of(f);
    for (int i = 0; i < k.count; ++i) {
        if (!states.contains(k.keys[static_cast<std::size_t>(i)])) return false;
    }
    return true;
}

/// Removes states that no factor touches.
inline void drop_untouched_states(GraphState& g) {
    std::set<StateKey> touched;
    for (const auto& f : g.factors) {
        const auto k = keys_of(f);
        for (int i = 0; i < k.count; ++i) touched.insert(k.keys[static_cast<std::size_t>(i)]);
    }
    std::erase_if(g.states, [&](const auto& kv) { return !touched.contains(kv.first); });
}

}  // namespace detail

/// Appends one epoch and prunes everything older than the window length.
///
/// New states start from SPP, or from the vehicle's previous state propagated
/// by its velocity estimate when SPP is missing.
inline GraphState advance_window(GraphState graph, const EpochData& data, const GraphModes& modes) {
    const bool has_prev = !graph.window.empty();
    const int prev_epoch = has_prev ? graph.window.back() : 0;
    if (has_prev && data.epoch <= prev_epoch) {
        throw Error(ErrorCode::InvalidArgument, "epochs must be appended in increasing order");
    }
    const double dt = has_prev ? data.time - graph.epoch_time.at(prev_epoch) : 0.0;

    graph.window.push_back(data.epoch);
    graph.epoch_time[data.epoch] = data.time;

    for (const auto& v : data.vehicles) {
        const StateKey key{v.vehicle, data.epoch};
        const std::optional<NodeState> prev =
            has_prev && graph.states.contains({v.vehicle, prev_epoch})
                ? std::optional<NodeState>(graph.states.at({v.vehicle, prev_epoch}))
                : std::nullopt;

        std::optional<NodeState> init = v.spp;
        if (!init && prev) {
            init = *prev;
            if (v.velocity) {
                init->position += v.velocity->velocity * dt;
                init->clock_bias += v.velocity->clock_drift * dt;
            }
        }
        if (!init) continue;

        std::vector<Factor> added;
        std::map<SatelliteId, const SatelliteState*> sat_by_id;
        for (const auto& s : v.sats) sat_by_id[s.id] = &s;
        for (const auto& pr : v.pseudoranges) {
            if (auto it = sat_by_id.find(pr.sat_id); it != sat_by_id.end()) {
                added.emplace_back(PseudorangeFactor{key, *it->second, pr});
            }
        }
        if (modes.use_planes && v.plane && plane::usable(v.plane->status)) {
            added.emplace_back(PlaneFactor{key, *v.plane});
        }
        if (v.velocity && prev && dt > 0.0) {
            added.emplace_back(VelocityFactor{{v.vehicle, prev_epoch}, key, *v.velocity, dt});
        }
        if (added.empty()) continue;
        graph.states[key] = *init;
        graph.factors.insert(graph.factors.end(), added.begin(), added.end());
    }

    if (modes.use_ranges) {
        for (const auto& r : data.ranges) {
            const StateKey a{r.vehicle_a, data.epoch}, b{r.vehicle_b, data.epoch};
            if (r.vehicle_a != r.vehicle_b && graph.states.contains(a) && graph.states.contains(b)) {
                graph.factors.emplace_back(RangeFactor{a, b, r});
            }
        }
    }

    while (static_cast<int>(graph.window.size()) > graph.max_window) {
        const int oldest = graph.window.front();
        graph.window.pop_front();
        graph.epoch_time.erase(oldest);
        std::erase_if(graph.states, [oldest](const auto& kv) { return kv.first.epoch == oldest; });
    }
    std::erase_if(graph.factors, [&](const Factor& f) { return !detail::references_only(f, graph.states); });
    detail::drop_untouched_states(graph);
    return graph;
}

/// Builds a graph from consecutive epochs; only the last `max_window` survive.
inline GraphState build_graph(std::span<const EpochData> window_data, const GraphModes& modes, int max_window = 5) {
    if (window_data.empty()) throw Error(ErrorCode::InvalidArgument, "window needs at least one epoch");
    GraphState g;
    g.max_window = max_window;
    for (const auto& e : window_data) g = advance_window(std::move(g), e, modes);
    if (g.factors.empty()) throw Error(ErrorCode::EmptyGraph, "no factors in window");
    return g;
}

}  // namespace pcfgo::fgo
