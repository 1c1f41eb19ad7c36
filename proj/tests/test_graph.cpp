#include <random>
#include <set>

#include <gtest/gtest.h>

#include "graph_fixtures.hpp"
#include "pcfgo/factor_graph/graph.hpp"

using namespace pcfgo;
using namespace pcfgo::fgo;
using namespace pcfgo::testing;

namespace {

// Two vehicles 20 m apart with planes and one range, `n` consecutive epochs.
std::vector<EpochData> two_vehicle_epochs(int n, bool planes = true, bool velocity = false) {
    std::vector<EpochData> out;
    const Eigen::Vector3d east = geodesy::enu_rotation_at(base_position()).east();
    for (int e = 0; e < n; ++e) {
        EpochData d;
        d.epoch = e;
        d.time = e;
        for (int v = 0; v < 2; ++v) {
            const Eigen::Vector3d p = base_position() + east * (20.0 * v + 10.0 * e);
            auto ve = vehicle_epoch(v, p, 3.0, p);
            if (planes) ve.plane = horizontal_plane(p);
            if (velocity) ve.velocity = VelocityEstimate{east * 10.0, 0.0, 0.6};
            d.vehicles.push_back(ve);
        }
        d.ranges.push_back({0, 1, 20.0, 0.3});
        out.push_back(d);
    }
    return out;
}

void expect_no_dangling(const GraphState& g) {
    for (const auto& f : g.factors) {
        const auto k = keys_of(f);
        for (int i = 0; i < k.count; ++i) {
            EXPECT_TRUE(g.states.contains(k.keys[static_cast<std::size_t>(i)]));
            EXPECT_NE(std::find(g.window.begin(), g.window.end(), k.keys[static_cast<std::size_t>(i)].epoch),
                      g.window.end());
        }
    }
}

}  // namespace

TEST(BuildGraph, CountsForTwoVehiclesOneEpoch) {
    const auto data = two_vehicle_epochs(1);
    const auto g = build_graph(data, {true, true});
    EXPECT_EQ(g.count(FactorKind::Pseudorange), 16u);
    EXPECT_EQ(g.count(FactorKind::Plane), 2u);
    EXPECT_EQ(g.count(FactorKind::Range), 1u);
    EXPECT_EQ(g.count(FactorKind::Velocity), 0u);
    EXPECT_EQ(g.states.size(), 2u);
}

TEST(BuildGraph, RangesOffMeansNoRangeFactors) {
    const auto g = build_graph(two_vehicle_epochs(3), {true, false});
    EXPECT_EQ(g.count(FactorKind::Range), 0u);
    EXPECT_EQ(g.count(FactorKind::Plane), 6u);
}

TEST(BuildGraph, PlanesOffMeansNoPlaneFactors) {
    const auto g = build_graph(two_vehicle_epochs(2), {false, true});
    EXPECT_EQ(g.count(FactorKind::Plane), 0u);
    EXPECT_EQ(g.count(FactorKind::Range), 2u);
}

TEST(BuildGraph, UnavailablePlaneGivesNoFactor) {
    auto data = two_vehicle_epochs(1);
    data[0].vehicles[1].plane->status = plane::PlaneStatus::Unavailable;
    const auto g = build_graph(data, {true, true});
    EXPECT_EQ(g.count(FactorKind::Plane), 1u);
    const auto& pf = std::get<PlaneFactor>(*std::find_if(g.factors.begin(), g.factors.end(), [](const Factor& f) {
        return kind(f) == FactorKind::Plane;
    }));
    EXPECT_EQ(pf.key.vehicle, 0);
}

TEST(BuildGraph, AfterExclusionPlaneIsUsed) {
    auto data = two_vehicle_epochs(1);
    data[0].vehicles[0].plane->status = plane::PlaneStatus::AvailableAfterExclusion;
    data[0].vehicles[1].plane->status = plane::PlaneStatus::Unavailable;
    const auto g = build_graph(data, {true, true});
    EXPECT_EQ(g.count(FactorKind::Plane), 1u);
}

TEST(BuildGraph, VelocityFactorsPerConsecutivePair) {
    const auto g = build_graph(two_vehicle_epochs(3, true, true), {true, true});
    EXPECT_EQ(g.count(FactorKind::Velocity), 4u);  // 2 vehicles x 2 epoch pairs
}

TEST(BuildGraph, SppFailureFallsBackToPropagation) {
    auto data = two_vehicle_epochs(2, false, true);
    data[1].vehicles[0].spp.reset();
    const auto g = build_graph(data, {false, false});
    const auto& prev = g.states.at({0, 0});
    const auto& curr = g.states.at({0, 1});
    const Eigen::Vector3d east = geodesy::enu_rotation_at(base_position()).east();
    EXPECT_LT((curr.position - (prev.position + 10.0 * east)).norm(), 1e-9);
}

TEST(BuildGraph, NoFactorsIsEmptyGraph) {
    EpochData d;
    d.epoch = 0;
    try {
        build_graph(std::vector<EpochData>{d}, {true, true});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyGraph);
    }
}

TEST(BuildGraph, RangeToMissingVehicleSkipped) {
    auto data = two_vehicle_epochs(1);
    data[0].ranges.push_back({0, 7, 30.0, 0.3});
    const auto g = build_graph(data, {true, true});
    EXPECT_EQ(g.count(FactorKind::Range), 1u);
}

TEST(AdvanceWindow, FullWindowDropsOldest) {
    const auto data = two_vehicle_epochs(6, true, true);
    GraphState g;
    for (int i = 0; i < 5; ++i) g = advance_window(std::move(g), data[static_cast<std::size_t>(i)], {true, true});
    ASSERT_EQ(g.window.size(), 5u);
    g = advance_window(std::move(g), data[5], {true, true});
    EXPECT_EQ(g.window.size(), 5u);
    EXPECT_EQ(g.window.front(), 1);
    for (const auto& [k, s] : g.states) EXPECT_NE(k.epoch, 0);
    // The velocity factor linking epochs 0 and 1 goes with epoch 0.
    EXPECT_EQ(g.count(FactorKind::Velocity), 2u * 4u);
    expect_no_dangling(g);
}

TEST(AdvanceWindow, ShortWindowKeepsEverything) {
    const auto data = two_vehicle_epochs(3, true, true);
    GraphState g;
    g = advance_window(std::move(g), data[0], {true, true});
    g = advance_window(std::move(g), data[1], {true, true});
    const auto before = g.factors.size();
    g = advance_window(std::move(g), data[2], {true, true});
    EXPECT_EQ(g.window.size(), 3u);
    EXPECT_EQ(g.factors.size(), before + 16 + 2 + 1 + 2);
}

TEST(AdvanceWindow, RejectsNonIncreasingEpoch) {
    const auto data = two_vehicle_epochs(2);
    GraphState g = advance_window({}, data[1], {true, true});
    EXPECT_THROW(advance_window(g, data[0], {true, true}), Error);
}

TEST(AdvanceWindow, NoDanglingReferencesUnderRandomDropouts) {
    std::mt19937_64 rng(5);
    std::bernoulli_distribution drop(0.3);
    for (int trial = 0; trial < 50; ++trial) {
        auto data = two_vehicle_epochs(12, true, true);
        for (auto& d : data) {
            for (auto& v : d.vehicles) {
                if (drop(rng)) v.spp.reset();
                if (drop(rng)) v.pseudoranges.clear();
                if (drop(rng)) v.velocity.reset();
                if (drop(rng)) v.plane.reset();
            }
            if (drop(rng)) d.ranges.clear();
        }
        GraphState g;
        for (const auto& d : data) {
            g = advance_window(std::move(g), d, {true, true});
            EXPECT_LE(g.window.size(), 5u);
            expect_no_dangling(g);
            // Every surviving state is touched by some factor.
            std::set<StateKey> touched;
            for (const auto& f : g.factors) {
                const auto k = keys_of(f);
                for (int i = 0; i < k.count; ++i) touched.insert(k.keys[static_cast<std::size_t>(i)]);
            }
            for (const auto& [k, s] : g.states) EXPECT_TRUE(touched.contains(k));
        }
    }
}
