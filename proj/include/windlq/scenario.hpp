#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "windlq/coefficients.hpp"
#include "windlq/control.hpp"
#include "windlq/metrics.hpp"
#include "windlq/sim.hpp"
#include "windlq/synthesis.hpp"
#include "windlq/turbine.hpp"

namespace windlq {

inline constexpr int kScenarioSchemaVersion = 1;

enum class ControllerKind { RobustLq, Baseline };

// A complete, reproducible run description. Every section except
// `schema_version` is optional; missing fields take the documented defaults
// (see README). Relative input paths resolve against the scenario file's
// directory; output_dir is relative to the working directory.
struct Scenario {
    std::string name = "scenario";
    TurbineParameters params;
    std::optional<std::filesystem::path> cp_csv;  // both set, or both empty for the default surface
    std::optional<std::filesystem::path> ct_csv;
    double p_ref = 3.37e6;

    struct Synthesis {
        double epsilon = kDefaultEpsilon;
        int vertex_count = 4;
        double table_spacing = 0.1;  // m/s, power-speed table
        SynthesisWeights region2;
        SynthesisWeights region3;
    } synthesis;

    struct ControllerSection {
        ControllerKind kind = ControllerKind::RobustLq;
        std::optional<std::filesystem::path> gains_file;  // synthesized on the fly when absent
        double delta_v = 0.5;
        EstimatorConfig estimator;
        RefreshPolicy refresh;
    } controller;

    SimulationConfig simulation;

    struct Metrics {
        double settle_time = 0.0;  // s excluded at the start
        double h_ref = kTowerLever;
        std::map<std::string, DelSpec> channels;
    } metrics;

    std::filesystem::path output_dir = "out";
};

Scenario default_scenario();

// Throws ValidationError with the JSON pointer of the offending field.
Scenario scenario_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
Scenario load_scenario(const std::filesystem::path& path);
// Fully expanded form (all defaults spelled out, paths as given).
nlohmann::json to_json(const Scenario& s);

CoefficientSurface scenario_surface(const Scenario& s);

}  // namespace windlq
