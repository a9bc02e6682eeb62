#include "windlq/scenario.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "windlq/design.hpp"
#include "windlq/errors.hpp"

namespace windlq {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void fail(const std::string& pointer, const std::string& what) {
    throw ValidationError("scenario", (pointer.empty() ? "/" : pointer) + ": " + what);
}

// Object reader that records consumed keys so leftovers can be rejected.
class Obj {
public:
    Obj(const json& j, std::string pointer) : j_(j), ptr_(std::move(pointer)) {
        if (!j_.is_object()) fail(ptr_, "expected an object");
    }

    std::string at(const std::string& key) const { return key.empty() ? ptr_ : ptr_ + "/" + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    double number(const std::string& key, double fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number()) fail(at(key), "expected a number");
        const double d = v->get<double>();
        if (!std::isfinite(d)) fail(at(key), "must be finite");
        return d;
    }

    double positive(const std::string& key, double fallback) {
        const double d = number(key, fallback);
        if (!(d > 0.0)) fail(at(key), "must be positive");
        return d;
    }

    double nonnegative(const std::string& key, double fallback) {
        const double d = number(key, fallback);
        if (!(d >= 0.0)) fail(at(key), "must be nonnegative");
        return d;
    }

    long integer(const std::string& key, long fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_number_integer()) fail(at(key), "expected an integer");
        return v->get<long>();
    }

    std::string string(const std::string& key, const std::string& fallback) {
        const json* v = get(key);
        if (!v) return fallback;
        if (!v->is_string()) fail(at(key), "expected a string");
        return v->get<std::string>();
    }

    template <class F>
    void section(const std::string& key, F&& f) {
        if (const json* v = get(key)) {
            Obj sub(*v, at(key));
            f(sub);
            sub.finish();
        }
    }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) fail(at(key), "unknown field");
        }
    }

private:
    const json& j_;
    std::string ptr_;
    std::set<std::string> seen_;
};

fs::path resolve(const fs::path& base, const std::string& p) {
    const fs::path path(p);
    return path.is_absolute() ? path : base / path;
}

fs::path existing_file(const fs::path& base, const std::string& p, const std::string& pointer) {
    const fs::path path = resolve(base, p);
    if (!fs::is_regular_file(path)) fail(pointer, "file not found: " + path.string());
    return path;
}

Eigen::MatrixXd read_matrix(const json& j, int n, const std::string& pointer) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) fail(pointer, "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_array() || static_cast<int>(j[i].size()) != n) {
            fail(pointer + "/" + std::to_string(i), "expected " + std::to_string(n) + " numbers");
        }
        for (int k = 0; k < n; ++k) {
            if (!j[i][k].is_number()) fail(pointer + "/" + std::to_string(i) + "/" + std::to_string(k), "expected a number");
            m(i, k) = j[i][k].get<double>();
        }
    }
    return m;
}

Eigen::MatrixXd read_diag(const json& j, int n, const std::string& pointer) {
    if (!j.is_array() || static_cast<int>(j.size()) != n) fail(pointer, "expected " + std::to_string(n) + " numbers");
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) {
        if (!j[i].is_number()) fail(pointer + "/" + std::to_string(i), "expected a number");
        d(i) = j[i].get<double>();
    }
    return d.asDiagonal();
}

SynthesisWeights read_weights(Obj& o, SynthesisWeights w) {
    const json* q = o.get("q");
    const json* qd = o.get("q_diag");
    const json* r = o.get("r");
    const json* rd = o.get("r_diag");
    if (q && qd) fail(o.at("q_diag"), "give either q or q_diag");
    if (r && rd) fail(o.at("r_diag"), "give either r or r_diag");
    if (q) w.q = read_matrix(*q, 7, o.at("q"));
    if (qd) w.q = read_diag(*qd, 7, o.at("q_diag"));
    if (r) w.r = read_matrix(*r, 2, o.at("r"));
    if (rd) w.r = read_diag(*rd, 2, o.at("r_diag"));
    try {
        w.validate();
    } catch (const ValidationError& e) {
        fail(o.at(""), e.what());
    }
    return w;
}

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

const char* wind_mode_name(WindSpec::Mode m) {
    switch (m) {
        case WindSpec::Mode::Constant: return "constant";
        case WindSpec::Mode::Ramp: return "ramp";
        case WindSpec::Mode::Turbulent: return "turbulent";
        case WindSpec::Mode::File: return "file";
    }
    return "constant";
}

}  // namespace

Scenario default_scenario() {
    Scenario s;
    s.synthesis.region2 = default_weights(Region::Two);
    s.synthesis.region3 = default_weights(Region::Three);
    s.p_ref = s.params.p_rated;
    for (const char* ch : {"tower_moment", "shaft_torque", "thrust"}) {
        DelSpec d;
        d.woehler_exponent = default_woehler_exponent(ch);
        s.metrics.channels[ch] = d;
    }
    return s;
}

Scenario scenario_from_json(const json& j, const fs::path& base_dir) {
    Scenario s = default_scenario();
    Obj root(j, "");
    const json* version = root.get("schema_version");
    if (!version) fail("/schema_version", "missing field");
    if (!version->is_number_integer() || version->get<long>() != kScenarioSchemaVersion) {
        fail("/schema_version", "unsupported version (expected " + std::to_string(kScenarioSchemaVersion) + ")");
    }
    s.name = root.string("name", s.name);

    if (const json* t = root.get("turbine")) {
        try {
            if (t->is_string() && t->get<std::string>() == "default") {
                s.params = default_parameters();
            } else if (t->is_string()) {
                s.params = load_parameters(existing_file(base_dir, t->get<std::string>(), "/turbine"));
            } else {
                s.params = parameters_from_json(*t);
            }
        } catch (const ValidationError& e) {
            if (e.module() == "scenario") throw;
            fail("/turbine", e.what());
        }
    }
    s.p_ref = s.params.p_rated;

    if (const json* surf = root.get("surface")) {
        if (!(surf->is_string() && surf->get<std::string>() == "default")) {
            Obj o(*surf, "/surface");
            s.cp_csv = existing_file(base_dir, o.string("cp_csv", ""), "/surface/cp_csv");
            s.ct_csv = existing_file(base_dir, o.string("ct_csv", ""), "/surface/ct_csv");
            o.finish();
        }
    }

    s.p_ref = root.positive("p_ref", s.p_ref);
    if (s.p_ref > s.params.p_rated) fail("/p_ref", "must not exceed p_rated");

    root.section("synthesis", [&](Obj& o) {
        s.synthesis.epsilon = o.positive("epsilon", s.synthesis.epsilon);
        const long count = o.integer("vertex_count", s.synthesis.vertex_count);
        if (count < 1 || count > 64) fail(o.at("vertex_count"), "must lie in [1, 64]");
        s.synthesis.vertex_count = static_cast<int>(count);
        s.synthesis.table_spacing = o.positive("table_spacing", s.synthesis.table_spacing);
        o.section("region2", [&](Obj& w) { s.synthesis.region2 = read_weights(w, s.synthesis.region2); });
        o.section("region3", [&](Obj& w) { s.synthesis.region3 = read_weights(w, s.synthesis.region3); });
    });

    root.section("controller", [&](Obj& o) {
        const std::string type = o.string("type", "robust-lq");
        if (type == "robust-lq") {
            s.controller.kind = ControllerKind::RobustLq;
        } else if (type == "baseline") {
            s.controller.kind = ControllerKind::Baseline;
        } else {
            fail(o.at("type"), "expected \"robust-lq\" or \"baseline\"");
        }
        if (const json* g = o.get("gains_file")) {
            if (!g->is_null()) {
                if (!g->is_string()) fail(o.at("gains_file"), "expected a string or null");
                s.controller.gains_file = existing_file(base_dir, g->get<std::string>(), o.at("gains_file"));
            }
        }
        s.controller.delta_v = o.positive("delta_v", s.controller.delta_v);
        o.section("estimator", [&](Obj& e) {
            const std::string mode = e.string("mode", "observer");
            if (mode == "observer") {
                s.controller.estimator.mode = EstimatorConfig::Mode::Observer;
            } else if (mode == "oracle") {
                s.controller.estimator.mode = EstimatorConfig::Mode::Oracle;
            } else {
                fail(e.at("mode"), "expected \"observer\" or \"oracle\"");
            }
            s.controller.estimator.time_constant = e.positive("time_constant", s.controller.estimator.time_constant);
            s.controller.estimator.tolerance = e.positive("tolerance", s.controller.estimator.tolerance);
            s.controller.estimator.noise_std = e.nonnegative("noise_std", s.controller.estimator.noise_std);
        });
        o.section("refresh", [&](Obj& r) {
            s.controller.refresh.wind = r.nonnegative("wind", s.controller.refresh.wind);
            s.controller.refresh.power_fraction = r.nonnegative("power_fraction", s.controller.refresh.power_fraction);
        });
    });

    SimulationConfig& sim = s.simulation;
    sim.p_ref = s.p_ref;
    root.section("simulation", [&](Obj& o) {
        sim.ts = o.positive("ts", sim.ts);
        const long sub = o.integer("substeps", sim.integrator_substeps);
        if (sub < 1) fail(o.at("substeps"), "must be at least 1");
        sim.integrator_substeps = static_cast<int>(sub);
        sim.duration = o.positive("duration", sim.duration);
        if (sim.duration < sim.ts) fail(o.at("duration"), "must be at least ts");
        if (const json* seed = o.get("seed")) {
            if (!seed->is_number_unsigned()) fail(o.at("seed"), "expected a nonnegative integer");
            sim.seed = seed->get<std::uint64_t>();
        }
        if (const json* off = o.get("initial_offset")) {
            if (!off->is_array() || off->size() != 7) fail(o.at("initial_offset"), "expected 7 numbers");
            for (int i = 0; i < 7; ++i) {
                if (!(*off)[i].is_number()) fail(o.at("initial_offset") + "/" + std::to_string(i), "expected a number");
                sim.initial_offset(i) = (*off)[i].get<double>();
            }
        }
        o.section("wind", [&](Obj& w) {
            const std::string mode = w.string("mode", wind_mode_name(sim.wind.mode));
            if (mode == "constant") {
                sim.wind.mode = WindSpec::Mode::Constant;
            } else if (mode == "ramp") {
                sim.wind.mode = WindSpec::Mode::Ramp;
            } else if (mode == "turbulent") {
                sim.wind.mode = WindSpec::Mode::Turbulent;
            } else if (mode == "file") {
                sim.wind.mode = WindSpec::Mode::File;
            } else {
                fail(w.at("mode"), "expected constant, ramp, turbulent or file");
            }
            sim.wind.mean = w.positive("mean", sim.wind.mean);
            sim.wind.intensity = w.nonnegative("intensity", sim.wind.intensity);
            sim.wind.ramp_rate = w.number("ramp_rate", sim.wind.ramp_rate);
            sim.wind.length_scale = w.positive("length_scale", sim.wind.length_scale);
            const std::string file = w.string("file", "");
            if (sim.wind.mode == WindSpec::Mode::File) {
                if (file.empty()) fail(w.at("file"), "required in file mode");
                sim.wind.file = existing_file(base_dir, file, w.at("file"));
            }
        });
    });

    root.section("metrics", [&](Obj& o) {
        s.metrics.settle_time = o.nonnegative("settle_time", s.metrics.settle_time);
        s.metrics.h_ref = o.positive("h_ref", s.metrics.h_ref);
        o.section("channels", [&](Obj& ch) {
            for (const char* name : {"tower_moment", "shaft_torque", "thrust"}) {
                ch.section(name, [&](Obj& c) {
                    DelSpec& d = s.metrics.channels[name];
                    d.woehler_exponent = c.number("woehler_exponent", d.woehler_exponent);
                    if (d.woehler_exponent < 1.0) fail(c.at("woehler_exponent"), "must be at least 1");
                    d.n_ref = c.positive("n_ref", d.n_ref);
                    d.t_life = c.positive("t_life_years", d.t_life / (365.25 * 86400.0)) * 365.25 * 86400.0;
                });
            }
        });
    });

    // Outputs are relative to the working directory, inputs to the scenario file.
    s.output_dir = root.string("output_dir", s.output_dir.string());
    root.finish();
    return s;
}

Scenario load_scenario(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("scenario", "cannot open " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError("scenario", path.string() + ": " + e.what());
    }
    return scenario_from_json(j, path.parent_path());
}

json to_json(const Scenario& s) {
    json channels = json::object();
    for (const auto& [name, d] : s.metrics.channels) {
        channels[name] = {{"woehler_exponent", d.woehler_exponent},
                          {"n_ref", d.n_ref},
                          {"t_life_years", d.t_life / (365.25 * 86400.0)}};
    }
    const SimulationConfig& sim = s.simulation;
    json offset = json::array();
    for (int i = 0; i < 7; ++i) offset.push_back(sim.initial_offset(i));
    json surface = "default";
    if (s.cp_csv && s.ct_csv) surface = {{"cp_csv", s.cp_csv->string()}, {"ct_csv", s.ct_csv->string()}};
    json wind = {{"mode", wind_mode_name(sim.wind.mode)},
                 {"mean", sim.wind.mean},
                 {"intensity", sim.wind.intensity},
                 {"ramp_rate", sim.wind.ramp_rate},
                 {"length_scale", sim.wind.length_scale}};
    if (sim.wind.mode == WindSpec::Mode::File) wind["file"] = sim.wind.file.string();
    return {
        {"schema_version", kScenarioSchemaVersion},
        {"name", s.name},
        {"turbine", to_json(s.params)},
        {"surface", surface},
        {"p_ref", s.p_ref},
        {"synthesis",
         {{"epsilon", s.synthesis.epsilon},
          {"vertex_count", s.synthesis.vertex_count},
          {"table_spacing", s.synthesis.table_spacing},
          {"region2", {{"q", matrix_json(s.synthesis.region2.q)}, {"r", matrix_json(s.synthesis.region2.r)}}},
          {"region3", {{"q", matrix_json(s.synthesis.region3.q)}, {"r", matrix_json(s.synthesis.region3.r)}}}}},
        {"controller",
         {{"type", s.controller.kind == ControllerKind::RobustLq ? "robust-lq" : "baseline"},
          {"gains_file", s.controller.gains_file ? json(s.controller.gains_file->string()) : json(nullptr)},
          {"delta_v", s.controller.delta_v},
          {"estimator",
           {{"mode", s.controller.estimator.mode == EstimatorConfig::Mode::Oracle ? "oracle" : "observer"},
            {"time_constant", s.controller.estimator.time_constant},
            {"tolerance", s.controller.estimator.tolerance},
            {"noise_std", s.controller.estimator.noise_std}}},
          {"refresh", {{"wind", s.controller.refresh.wind}, {"power_fraction", s.controller.refresh.power_fraction}}}}},
        {"simulation",
         {{"ts", sim.ts},
          {"substeps", sim.integrator_substeps},
          {"duration", sim.duration},
          {"seed", sim.seed},
          {"initial_offset", offset},
          {"wind", wind}}},
        {"metrics", {{"settle_time", s.metrics.settle_time}, {"h_ref", s.metrics.h_ref}, {"channels", channels}}},
        {"output_dir", s.output_dir.string()},
    };
}

CoefficientSurface scenario_surface(const Scenario& s) {
    if (s.cp_csv && s.ct_csv) return load_surface(*s.cp_csv, *s.ct_csv);
    return default_surface();
}

}  // namespace windlq
