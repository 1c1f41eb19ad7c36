// JSON experiment configuration: scenario, estimator and sweep settings.
// Parsing is strict; an unknown key anywhere is an error.
#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pcfgo/error.hpp"
#include "pcfgo/evaluation/pipeline.hpp"
#include "pcfgo/simulator/config.hpp"

namespace pcfgo::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct SweepSpec {
    std::vector<double> rates;
    std::vector<eval::MethodMode> modes;
    int n_seeds = 1;
};

struct ExperimentConfig {
    sim::ScenarioConfig scenario;
    eval::MethodMode mode = eval::MethodMode::PCAided;
    std::optional<SweepSpec> sweep;
};

namespace detail {

/// Reads the keys of one JSON object, rejecting any key not consumed.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail(path_, "expected an object");
    }

    template <class T>
    void get(const char* key, T& out) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return;
        try {
            out = it->template get<T>();
        } catch (const json::exception&) {
            fail(child(key), "wrong type");
        }
    }

    std::optional<std::reference_wrapper<const json>> sub(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) return std::nullopt;
        return std::cref(*it);
    }

    std::string child(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.contains(key)) fail(child(key), "unknown key");
        }
    }

    [[noreturn]] static void fail(const std::string& path, const std::string& what) {
        throw Error(ErrorCode::Config, (path.empty() ? std::string("<root>") : path) + ": " + what);
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string, std::less<>> seen_;
};

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

inline sim::RoadShape parse_road_shape(const std::string& s, const std::string& path) {
    if (s == "plane") return sim::RoadShape::Plane;
    if (s == "slope") return sim::RoadShape::Slope;
    if (s == "curved") return sim::RoadShape::Curved;
    ObjectReader::fail(path, "unknown road shape '" + s + "'");
}

inline std::string road_shape_name(sim::RoadShape s) {
    switch (s) {
    case sim::RoadShape::Plane: return "plane";
    case sim::RoadShape::Slope: return "slope";
    case sim::RoadShape::Curved: return "curved";
    }
    return "plane";
}

inline void read_noise(const json& j, const std::string& path, sim::NoiseConfig& n) {
    ObjectReader r(j, path);
    r.get("pseudorange_sigma", n.pseudorange_sigma);
    r.get("doppler_sigma", n.doppler_sigma);
    r.get("uwb_sigma", n.uwb_sigma);
    r.get("differential_sigma", n.differential_sigma);
    r.get("multipath_rate", n.multipath_rate);
    r.get("multipath_min", n.multipath_min);
    r.get("multipath_max", n.multipath_max);
    r.get("multipath_mean_duration", n.multipath_mean_duration);
    r.get("clock_bias_psd", n.clock_bias_psd);
    r.get("clock_drift_psd", n.clock_drift_psd);
    r.finish();
}

inline void read_urban(const json& j, const std::string& path, sim::UrbanConfig& u) {
    ObjectReader r(j, path);
    r.get("mask_deg", u.mask_deg);
    r.get("street_halfwidth_deg", u.street_halfwidth_deg);
    r.get("canyon_epochs", u.canyon_epochs);
    r.finish();
}

inline void read_road(const json& j, const std::string& path, sim::RoadConfig& road) {
    ObjectReader r(j, path);
    std::string shape = road_shape_name(road.shape);
    r.get("shape", shape);
    road.shape = parse_road_shape(shape, r.child("shape"));
    r.get("grade", road.grade);
    r.get("radius", road.radius);
    r.get("heading_deg", road.heading_deg);
    r.finish();
}

inline void read_plane(const json& j, const std::string& path, plane::PlaneConfig& p) {
    ObjectReader r(j, path);
    r.get("range_fitting", p.range_fitting);
    r.get("max_fit_points", p.max_fit_points);
    r.get("min_fit_points", p.min_fit_points);
    r.get("residual_threshold_tf", p.residual_threshold_tf);
    r.get("ransac_max_iterations", p.ransac_max_iterations);
    r.get("history_capacity", p.history_capacity);
    r.get("min_singular_ratio", p.min_singular_ratio);
    r.get("sigma_pc_floor", p.sigma_pc_floor);
    r.get("include_own_history", p.include_own_history);
    r.finish();
}

inline void read_estimator(const json& j, const std::string& path, sim::EstimatorConfig& e) {
    ObjectReader r(j, path);
    r.get("pseudorange_a", e.pseudorange.a);
    r.get("pseudorange_b", e.pseudorange.b);
    r.get("range_sigma", e.range_sigma);
    r.get("velocity_sigma", e.velocity_sigma);
    r.get("pseudorange_gate", e.pseudorange_gate);
    r.get("range_gate", e.range_gate);
    r.get("window_length", e.window_length);
    if (auto s = r.sub("solver")) {
        ObjectReader sr(s->get(), r.child("solver"));
        sr.get("initial_lambda", e.solver.initial_lambda);
        sr.get("relative_tolerance", e.solver.relative_tolerance);
        sr.get("max_iterations", e.solver.max_iterations);
        sr.finish();
    }
    r.finish();
}

inline void read_scenario(const json& j, const std::string& path, sim::ScenarioConfig& c) {
    ObjectReader r(j, path);
    r.get("n_vehicles", c.n_vehicles);
    r.get("duration", c.duration);
    r.get("epoch_interval", c.epoch_interval);
    if (auto o = r.sub("origin")) {
        ObjectReader orr(o->get(), r.child("origin"));
        double lat = rad2deg(c.origin.latitude), lon = rad2deg(c.origin.longitude);
        orr.get("latitude_deg", lat);
        orr.get("longitude_deg", lon);
        orr.get("height", c.origin.height);
        orr.finish();
        c.origin.latitude = deg2rad(lat);
        c.origin.longitude = deg2rad(lon);
    }
    if (auto o = r.sub("road")) read_road(o->get(), r.child("road"), c.road);
    r.get("lane_offsets", c.lane_offsets);
    r.get("start_offsets", c.start_offsets);
    r.get("speeds", c.speeds);
    r.get("antenna_heights", c.antenna_heights);
    if (auto o = r.sub("noise")) read_noise(o->get(), r.child("noise"), c.noise);
    if (auto o = r.sub("urban")) read_urban(o->get(), r.child("urban"), c.urban);
    r.get("elevation_mask_deg", c.elevation_mask_deg);
    r.get("interruption_rate", c.interruption_rate);
    r.get("seed", c.seed);
    r.get("target_vehicle", c.target_vehicle);
    r.finish();
}

inline eval::MethodMode parse_mode_at(const std::string& name, const std::string& path) {
    try {
        return eval::parse_mode(name);
    } catch (const Error&) {
        ObjectReader::fail(path, "unknown mode '" + name + "'");
    }
}

}  // namespace detail

/// Parses and validates a configuration document.
inline ExperimentConfig parse_config(const json& doc) {
    using detail::ObjectReader;
    ExperimentConfig cfg;
    ObjectReader r(doc, "");

    int version = 0;
    if (!doc.is_object() || !doc.contains("schema_version")) ObjectReader::fail("schema_version", "missing");
    r.get("schema_version", version);
    if (version != kSchemaVersion) {
        ObjectReader::fail("schema_version", "unsupported version " + std::to_string(version));
    }

    if (auto s = r.sub("scenario")) detail::read_scenario(s->get(), "scenario", cfg.scenario);
    if (auto s = r.sub("plane")) detail::read_plane(s->get(), "plane", cfg.scenario.plane);
    if (auto s = r.sub("estimator")) detail::read_estimator(s->get(), "estimator", cfg.scenario.estimator);

    std::string mode = std::string(eval::to_string(cfg.mode));
    r.get("mode", mode);
    cfg.mode = detail::parse_mode_at(mode, "mode");

    if (auto s = r.sub("sweep")) {
        ObjectReader sr(s->get(), "sweep");
        SweepSpec sw;
        std::vector<std::string> modes;
        sr.get("rates", sw.rates);
        sr.get("modes", modes);
        sr.get("n_seeds", sw.n_seeds);
        sr.finish();
        if (sw.rates.empty()) ObjectReader::fail("sweep.rates", "must not be empty");
        for (double x : sw.rates) {
            if (!(x >= 0.0 && x <= 1.0)) ObjectReader::fail("sweep.rates", "every rate must lie in [0, 1]");
        }
        if (modes.empty()) ObjectReader::fail("sweep.modes", "must not be empty");
        for (std::size_t i = 0; i < modes.size(); ++i) {
            sw.modes.push_back(detail::parse_mode_at(modes[i], "sweep.modes[" + std::to_string(i) + "]"));
        }
        if (sw.n_seeds < 1) ObjectReader::fail("sweep.n_seeds", "must be >= 1");
        cfg.sweep = std::move(sw);
    }
    r.finish();

    cfg.scenario.validate();
    return cfg;
}

inline ExperimentConfig parse_config_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::Config, std::string("malformed JSON: ") + e.what());
    }
    return parse_config(doc);
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Config, "cannot open config file '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config_text(ss.str());
    } catch (const Error& e) {
        throw Error(ErrorCode::Config, path.string() + ": " + e.detail());
    }
}

}  // namespace pcfgo::io
