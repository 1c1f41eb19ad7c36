#include <algorithm>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "pcfgo/factor_graph/velocity.hpp"
#include "pcfgo/simulator/constellation.hpp"
#include "pcfgo/simulator/measurements.hpp"
#include "pcfgo/simulator/spp.hpp"
#include "pcfgo/simulator/trajectory.hpp"
#include "plane_fixtures.hpp"

using namespace pcfgo;
using namespace pcfgo::sim;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ScenarioConfig small_config(int n_vehicles = 4, int duration = 30) {
    ScenarioConfig c;
    c.n_vehicles = n_vehicles;
    c.duration = duration;
    c.lane_offsets.assign(c.lane_offsets.begin(), c.lane_offsets.begin() + std::min(n_vehicles, 4));
    c.start_offsets.assign(c.start_offsets.begin(), c.start_offsets.begin() + std::min(n_vehicles, 4));
    c.speeds.assign(c.speeds.begin(), c.speeds.begin() + std::min(n_vehicles, 4));
    c.antenna_heights.assign(c.antenna_heights.begin(), c.antenna_heights.begin() + std::min(n_vehicles, 4));
    return c;
}

/// Max distance of the points to their best-fit plane, computed relative to `origin`.
double max_plane_residual(const std::vector<EcefVector>& pts, const EcefVector& origin) {
    std::vector<Eigen::Vector3d> local;
    for (const auto& p : pts) local.push_back(p - origin);
    const Eigen::Vector3d n = pcfgo::testing::scatter_normal(local);
    Eigen::Vector3d c = Eigen::Vector3d::Zero();
    for (const auto& p : local) c += p;
    c /= static_cast<double>(local.size());
    double worst = 0.0;
    for (const auto& p : local) worst = std::max(worst, std::abs(n.dot(p - c)));
    return worst;
}

bool same_pseudoranges(const EpochMeasurements& a, const EpochMeasurements& b) {
    if (a.vehicles.size() != b.vehicles.size()) return false;
    for (std::size_t v = 0; v < a.vehicles.size(); ++v) {
        const auto& x = a.vehicles[v];
        const auto& y = b.vehicles[v];
        if (x.pseudoranges.size() != y.pseudoranges.size() || x.dopplers.size() != y.dopplers.size()) return false;
        for (std::size_t i = 0; i < x.pseudoranges.size(); ++i) {
            if (x.pseudoranges[i].value != y.pseudoranges[i].value ||
                x.pseudoranges[i].dgnss_correction != y.pseudoranges[i].dgnss_correction ||
                x.pseudoranges[i].sat_id != y.pseudoranges[i].sat_id) {
                return false;
            }
        }
        for (std::size_t i = 0; i < x.dopplers.size(); ++i) {
            if (x.dopplers[i].value != y.dopplers[i].value) return false;
        }
        if (x.sats.size() != y.sats.size()) return false;
        for (std::size_t i = 0; i < x.sats.size(); ++i) {
            if (x.sats[i].position != y.sats[i].position) return false;
        }
    }
    for (std::size_t v = 0; v < a.truth.size(); ++v) {
        if (a.truth[v].state.position != b.truth[v].state.position ||
            a.truth[v].state.clock_bias != b.truth[v].state.clock_bias || a.truth[v].velocity != b.truth[v].velocity) {
            return false;
        }
    }
    return true;
}

}  // namespace

// ---------------------------------------------------------------------------
// Constellation
// ---------------------------------------------------------------------------

TEST(Constellation, AtLeastTenSatellites) {
    EXPECT_GE(generate_constellation(0, ScenarioConfig{}).size(), 10u);
}

TEST(Constellation, VelocityMatchesFiniteDifference) {
    for (double t : {0.0, 1234.5, 43200.0}) {
        const auto now = constellation_at(t, 7);
        const auto before = constellation_at(t - 0.1, 7);
        const auto after = constellation_at(t + 0.1, 7);
        for (std::size_t i = 0; i < now.size(); ++i) {
            const Eigen::Vector3d fd = (after[i].position - before[i].position) / 0.2;
            EXPECT_LT((fd - now[i].velocity).norm(), 1e-3) << "sat " << now[i].id;
        }
    }
}

TEST(Constellation, RadiusConstant) {
    for (double t = 0.0; t < 86400.0; t += 3600.0) {
        for (const auto& s : constellation_at(t, 3)) {
            EXPECT_NEAR(s.position.norm() / orbit::kRadius, 1.0, 1e-6);
            EXPECT_GE(s.position.norm(), 2.0e7);
            EXPECT_LE(s.position.norm(), 4.5e7);
        }
    }
}

TEST(Constellation, InclinationFiftyFive) {
    // Orbit normal r x v makes 55 degrees with the Earth's spin axis, up to the
    // frame rotation term in the ECEF velocity.
    for (const auto& s : constellation_at(500.0, 1)) {
        const Eigen::Vector3d omega(0, 0, orbit::kEarthRotationRate);
        const Eigen::Vector3d inertial_v = s.velocity + omega.cross(s.position);
        const Eigen::Vector3d h = s.position.cross(inertial_v).normalized();
        EXPECT_NEAR(std::acos(h.z()), orbit::kInclination, 1e-9);
    }
}

TEST(Visibility, MaskAlwaysRespected) {
    const auto cfg = small_config(4, 200);
    const Simulator sim(cfg);
    for (int e = 0; e < cfg.duration; e += 7) {
        const auto m = sim.epoch(e);
        const auto all = generate_constellation(e, cfg);
        for (std::size_t v = 0; v < m.vehicles.size(); ++v) {
            const auto& rx = m.truth[v].state.position;
            const auto enu = geodesy::enu_rotation_at(rx);
            std::size_t above = 0;
            for (const auto& s : all) above += look_angles(rx, s.position, enu).elevation >= 10.0 * kDeg;
            EXPECT_EQ(m.vehicles[v].sats.size(), above);
            for (const auto& s : m.vehicles[v].sats) {
                EXPECT_GE(look_angles(rx, s.position, enu).elevation, 10.0 * kDeg);
                EXPECT_NEAR(s.elevation, look_angles(rx, s.position, enu).elevation, 1e-12);
            }
        }
    }
}

TEST(Visibility, CanyonBlocksLowOffAxisSatellites) {
    auto cfg = small_config(1, 40);
    cfg.urban.mask_deg = 45.0;
    cfg.urban.street_halfwidth_deg = 15.0;
    cfg.urban.canyon_epochs = {{10, 19}};
    const Simulator sim(cfg);
    auto open_cfg = cfg;
    open_cfg.urban.canyon_epochs.clear();
    const Simulator open_sim(open_cfg);
    int fewer = 0;
    for (int e = 0; e < cfg.duration; ++e) {
        const auto m = sim.epoch(e);
        const auto o = open_sim.epoch(e);
        const bool canyon = e >= 10 && e <= 19;
        if (!canyon) {
            EXPECT_EQ(m.vehicles[0].sats.size(), o.vehicles[0].sats.size());
            continue;
        }
        fewer += m.vehicles[0].sats.size() < o.vehicles[0].sats.size();
        const auto enu = geodesy::enu_rotation_at(m.truth[0].state.position);
        for (const auto& s : m.vehicles[0].sats) {
            const auto look = look_angles(m.truth[0].state.position, s.position, enu);
            if (look.elevation < 45.0 * kDeg) {
                const double diff = std::remainder(look.azimuth - cfg.road.heading_deg * kDeg, std::numbers::pi);
                EXPECT_LE(std::abs(diff), 15.0 * kDeg + 1e-12);
            }
        }
    }
    EXPECT_GT(fewer, 0);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

TEST(Trajectories, PlaneRoadPointsCoplanar) {
    const auto cfg = small_config(4, 60);
    std::vector<EcefVector> pts;
    for (const auto& track : generate_trajectories(cfg)) {
        for (const auto& t : track) pts.push_back(t.road_point);
    }
    EXPECT_LT(max_plane_residual(pts, geodesy::geodetic_to_ecef(cfg.origin)), 1e-9);
}

TEST(Trajectories, SlopeRoadPointsCoplanar) {
    auto cfg = small_config(4, 60);
    cfg.road.shape = RoadShape::Slope;
    cfg.road.grade = 0.05;
    std::vector<EcefVector> pts;
    for (const auto& track : generate_trajectories(cfg)) {
        for (const auto& t : track) pts.push_back(t.road_point);
    }
    EXPECT_LT(max_plane_residual(pts, geodesy::geodetic_to_ecef(cfg.origin)), 1e-9);
}

TEST(Trajectories, CurvedRoadSagittaOverHundredMeters) {
    auto cfg = small_config(2, 11);
    cfg.road.shape = RoadShape::Curved;
    cfg.road.radius = 500.0;
    cfg.start_offsets = {0.0, 0.0};
    cfg.lane_offsets = {0.0, 3.5};
    std::vector<EcefVector> pts;
    for (const auto& track : generate_trajectories(cfg)) {
        for (const auto& t : track) pts.push_back(t.road_point);
    }
    // Sagitta L^2 / (8 R) = 2.5 m; the best plane splits it, leaving about half.
    const double worst = max_plane_residual(pts, geodesy::geodetic_to_ecef(cfg.origin));
    EXPECT_GT(worst, 1.0);
    EXPECT_LT(worst, 2.5);
}

TEST(Trajectories, LaneSeparationConstant) {
    auto cfg = small_config(2, 50);
    cfg.start_offsets = {0.0, 0.0};
    cfg.lane_offsets = {0.0, 3.5};
    const auto tracks = generate_trajectories(cfg);
    for (std::size_t e = 0; e < tracks[0].size(); ++e) {
        EXPECT_NEAR((tracks[0][e].road_point - tracks[1][e].road_point).norm(), 3.5, 1e-8);
    }
}

TEST(Trajectories, AntennaAboveRoadAlongNormal) {
    auto cfg = small_config(4, 20);
    cfg.road.shape = RoadShape::Curved;
    const auto tracks = generate_trajectories(cfg);
    for (std::size_t v = 0; v < tracks.size(); ++v) {
        for (const auto& t : tracks[v]) {
            EXPECT_NEAR((t.antenna - t.road_point).norm(), cfg.antenna_heights[v], 1e-8);
            EXPECT_NEAR((t.antenna - t.road_point).normalized().dot(t.road_normal), 1.0, 1e-12);
        }
    }
}

TEST(Trajectories, VelocityMatchesAntennaMotion) {
    auto cfg = small_config(2, 30);
    for (auto shape : {RoadShape::Plane, RoadShape::Curved}) {
        cfg.road.shape = shape;
        const auto tracks = generate_trajectories(cfg);
        for (const auto& track : tracks) {
            for (std::size_t e = 1; e + 1 < track.size(); ++e) {
                const Eigen::Vector3d fd = (track[e + 1].antenna - track[e - 1].antenna) / 2.0;
                EXPECT_LT((fd - track[e].velocity).norm(), 1e-3);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

TEST(Measurements, NoiseFreeErrorsVanishAtTruth) {
    auto cfg = small_config(4, 10).noise_free();
    const Simulator sim(cfg);
    for (int e = 0; e < cfg.duration; ++e) {
        const auto m = sim.epoch(e);
        for (std::size_t v = 0; v < m.vehicles.size(); ++v) {
            const auto& vm = m.vehicles[v];
            const auto& truth = m.truth[v];
            ASSERT_EQ(vm.pseudoranges.size(), vm.sats.size());
            for (std::size_t i = 0; i < vm.sats.size(); ++i) {
                EXPECT_NEAR(fgo::pseudorange_error(truth.state, vm.sats[i], vm.pseudoranges[i]), 0.0, 1e-6);
            }
            // Dopplers invert to the true velocity and clock drift.
            const auto vel = fgo::estimate_velocity(vm.dopplers, vm.sats, truth.state.position);
            EXPECT_LT((vel.velocity - truth.velocity).norm(), 1e-6);
            EXPECT_NEAR(vel.clock_drift, truth.clock_drift, 1e-6);
        }
        for (const auto& r : m.ranges) {
            EXPECT_NEAR(fgo::range_error(m.truth[static_cast<std::size_t>(r.vehicle_a)].state,
                                         m.truth[static_cast<std::size_t>(r.vehicle_b)].state, r),
                        0.0, 1e-9);
        }
        if (e > 0) {
            // Constant speed on a flat road: velocity factor at truth is zero.
            const auto prev = sim.epoch(e - 1);
            for (std::size_t v = 0; v < m.truth.size(); ++v) {
                const fgo::VelocityEstimate est{m.truth[v].velocity, 0.0, 0.6};
                EXPECT_LT(fgo::velocity_error(m.truth[v].state, prev.truth[v].state, est, cfg.epoch_interval).norm(),
                          1e-6);
            }
        }
    }
}

TEST(Measurements, CorrectionCarriesCommonModeTerms) {
    const auto cfg = small_config(1, 3);
    const Simulator sim(cfg);
    const auto m = sim.epoch(1);
    for (const auto& pr : m.vehicles[0].pseudoranges) EXPECT_GT(std::abs(pr.dgnss_correction), 1.0);
}

TEST(Measurements, FullInterruptionRemovesAllRanges) {
    auto cfg = small_config(4, 50);
    cfg.interruption_rate = 1.0;
    const Simulator sim(cfg);
    for (int e = 0; e < cfg.duration; ++e) EXPECT_TRUE(sim.epoch(e).ranges.empty());
}

TEST(Measurements, NoInterruptionKeepsEveryPair) {
    const auto cfg = small_config(4, 5);
    const Simulator sim(cfg);
    for (int e = 0; e < cfg.duration; ++e) EXPECT_EQ(sim.epoch(e).ranges.size(), 6u);
}

TEST(Measurements, DropRateMatchesBinomialInterval) {
    auto cfg = small_config(3, 1000);
    cfg.interruption_rate = 0.4;
    const Simulator sim(cfg);
    int kept = 0;
    for (int e = 0; e < cfg.duration; ++e) kept += static_cast<int>(sim.epoch(e).ranges.size());
    const double drop = 1.0 - kept / 3000.0;
    EXPECT_GE(drop, 0.37);
    EXPECT_LE(drop, 0.43);
}

TEST(Measurements, RateChangesOnlyRanges) {
    auto a_cfg = small_config(4, 40);
    a_cfg.noise.multipath_rate = 0.01;
    a_cfg.noise.clock_bias_psd = 0.5;
    auto b_cfg = a_cfg;
    b_cfg.interruption_rate = 0.7;
    const Simulator a(a_cfg), b(b_cfg);
    int fewer = 0;
    for (int e = 0; e < a_cfg.duration; ++e) {
        const auto ma = a.epoch(e), mb = b.epoch(e);
        EXPECT_TRUE(same_pseudoranges(ma, mb)) << "epoch " << e;
        fewer += mb.ranges.size() < ma.ranges.size();
        // Surviving ranges carry the same values.
        for (const auto& r : mb.ranges) {
            const auto it = std::find_if(ma.ranges.begin(), ma.ranges.end(), [&](const fgo::RangeObs& x) {
                return x.vehicle_a == r.vehicle_a && x.vehicle_b == r.vehicle_b;
            });
            ASSERT_NE(it, ma.ranges.end());
            EXPECT_EQ(it->value, r.value);
        }
    }
    EXPECT_GT(fewer, 0);
}

TEST(Measurements, SameSeedSameStream) {
    auto cfg = small_config(4, 20);
    cfg.noise.multipath_rate = 0.02;
    const Simulator a(cfg), b(cfg);
    for (int e = 0; e < cfg.duration; ++e) {
        const auto ma = a.epoch(e), mb = b.epoch(e);
        EXPECT_TRUE(same_pseudoranges(ma, mb));
        ASSERT_EQ(ma.ranges.size(), mb.ranges.size());
        for (std::size_t i = 0; i < ma.ranges.size(); ++i) EXPECT_EQ(ma.ranges[i].value, mb.ranges[i].value);
    }
}

TEST(Measurements, DifferentSeedDifferentNoise) {
    auto cfg = small_config(2, 3);
    auto other = cfg;
    other.seed = 2;
    EXPECT_FALSE(same_pseudoranges(Simulator(cfg).epoch(1), Simulator(other).epoch(1)));
}

TEST(Measurements, MultipathBurstsAppear) {
    auto cfg = small_config(2, 300);
    cfg.noise.multipath_rate = 0.01;
    const ScenarioProcesses p(cfg);
    int nonzero = 0, total = 0;
    for (const auto& per_sat : p.multipath) {
        for (const auto& track : per_sat) {
            for (double b : track) {
                ++total;
                if (b != 0.0) {
                    ++nonzero;
                    EXPECT_GE(std::abs(b), cfg.noise.multipath_min);
                    EXPECT_LE(std::abs(b), cfg.noise.multipath_max);
                }
            }
        }
    }
    // Start rate 1% with mean duration 10 puts roughly 9% of samples inside a burst.
    const double frac = static_cast<double>(nonzero) / total;
    EXPECT_GT(frac, 0.04);
    EXPECT_LT(frac, 0.15);
}

TEST(Simulator, RejectsInvalidConfigAndEpoch) {
    auto cfg = small_config(2, 5);
    cfg.interruption_rate = 1.5;
    EXPECT_THROW(Simulator{cfg}, Error);
    const Simulator sim(small_config(2, 5));
    EXPECT_THROW(sim.epoch(5), Error);
}

// ---------------------------------------------------------------------------
// SPP
// ---------------------------------------------------------------------------

namespace {

std::vector<fgo::SatelliteState> random_sky(std::mt19937_64& rng, const EcefVector& rx, int n) {
    std::uniform_real_distribution<double> el(15.0 * kDeg, 85.0 * kDeg), az(0.0, 2 * std::numbers::pi);
    const auto enu = geodesy::enu_rotation_at(rx);
    std::vector<fgo::SatelliteState> out;
    for (int i = 0; i < n; ++i) {
        const double e = el(rng), a = az(rng);
        const Eigen::Vector3d los(std::cos(e) * std::sin(a), std::cos(e) * std::cos(a), std::sin(e));
        out.push_back({i + 1, rx + 2.2e7 * enu.to_ecef(los), {}, 0.0, e});
    }
    return out;
}

}  // namespace

TEST(Spp, RecoversTruthFromThousandKilometers) {
    std::mt19937_64 rng(1);
    const EcefVector truth = geodesy::geodetic_to_ecef({0.7, 2.0, 30.0});
    const auto sats = random_sky(rng, truth, 9);
    std::vector<fgo::PseudorangeObs> obs;
    for (const auto& s : sats) obs.push_back({s.id, (truth - s.position).norm() + 123.0, 0.0, 1.0});
    const auto sol = spp_solve_detailed(obs, sats, truth + Eigen::Vector3d(6e5, -6e5, 5e5));
    EXPECT_LT((sol.state.position - truth).norm(), 1e-3);
    EXPECT_NEAR(sol.state.clock_bias, 123.0, 1e-3);
    EXPECT_LE(sol.iterations, 10);
}

TEST(Spp, ThreeObservationsInsufficient) {
    std::mt19937_64 rng(2);
    const EcefVector truth = geodesy::geodetic_to_ecef({0.7, 2.0, 30.0});
    const auto sats = random_sky(rng, truth, 3);
    std::vector<fgo::PseudorangeObs> obs;
    for (const auto& s : sats) obs.push_back({s.id, (truth - s.position).norm(), 0.0, 1.0});
    try {
        spp_solve(obs, sats, truth);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::InsufficientSatellites);
    }
}

TEST(Spp, ErrorScalesWithDop) {
    // Median 3D error over 500 seeds against sigma times the mean PDOP from the
    // geometry matrix.
    const EcefVector truth = geodesy::geodetic_to_ecef({0.7, 2.0, 30.0});
    std::vector<double> errors;
    double dop_sum = 0.0;
    for (int seed = 0; seed < 500; ++seed) {
        std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
        std::normal_distribution<double> noise(0.0, 1.0);
        const auto sats = random_sky(rng, truth, 10);
        Eigen::MatrixX4d g(10, 4);
        std::vector<fgo::PseudorangeObs> obs;
        for (int i = 0; i < 10; ++i) {
            const auto& s = sats[static_cast<std::size_t>(i)];
            g.row(i) << -(s.position - truth).normalized().transpose(), 1.0;
            obs.push_back({s.id, (truth - s.position).norm() + noise(rng), 0.0, 1.0});
        }
        const Eigen::Matrix4d cov = (g.transpose() * g).inverse();
        dop_sum += std::sqrt(cov.topLeftCorner<3, 3>().trace());
        errors.push_back((spp_solve(obs, sats, truth + Eigen::Vector3d(100, 100, 100)).position - truth).norm());
    }
    std::nth_element(errors.begin(), errors.begin() + 250, errors.end());
    const double median = errors[250];
    const double mean_dop = dop_sum / 500.0;
    EXPECT_GE(median, 0.5 * mean_dop);
    EXPECT_LE(median, 3.0 * mean_dop);
}

TEST(Spp, ResidualsReportedPerObservation) {
    std::mt19937_64 rng(3);
    const EcefVector truth = geodesy::geodetic_to_ecef({0.7, 2.0, 30.0});
    const auto sats = random_sky(rng, truth, 8);
    std::vector<fgo::PseudorangeObs> obs;
    for (const auto& s : sats) obs.push_back({s.id, (truth - s.position).norm(), 0.0, 1.0});
    obs[3].value += 40.0;
    const auto sol = spp_solve_detailed(obs, sats, truth);
    ASSERT_EQ(sol.residuals.size(), 8u);
    const auto worst = std::max_element(sol.residuals.begin(), sol.residuals.end(),
                                        [](double a, double b) { return std::abs(a) < std::abs(b); });
    EXPECT_EQ(worst - sol.residuals.begin(), 3);
}
