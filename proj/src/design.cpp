#include "windlq/design.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "windlq/errors.hpp"

namespace windlq {
namespace {

std::vector<double> spread(double lo, double hi, int count) {
    std::vector<double> out;
    for (int i = 0; i < count; ++i) out.push_back(count == 1 ? lo : lo + (hi - lo) * i / (count - 1));
    return out;
}

nlohmann::json gain_to_json(const Mat27& k) {
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 2; ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < 7; ++j) row.push_back(k(i, j));
        rows.push_back(row);
    }
    return rows;
}

Mat27 gain_from_json(const nlohmann::json& j, const char* name) {
    auto bad = [&] { return ValidationError("design", std::string("/") + name + " must be a 2 x 7 number array"); };
    if (!j.is_array() || j.size() != 2) throw bad();
    Mat27 k;
    for (int i = 0; i < 2; ++i) {
        if (!j[i].is_array() || j[i].size() != 7) throw bad();
        for (int c = 0; c < 7; ++c) {
            if (!j[i][c].is_number()) throw bad();
            k(i, c) = j[i][c].get<double>();
            if (!std::isfinite(k(i, c))) throw bad();
        }
    }
    return k;
}

}  // namespace

std::vector<ExternalInput> region_vertex_inputs(const TurbineParameters& p, const CoefficientSurface& s,
                                                const PowerSpeedTable& table, double p_ref, Region region,
                                                int count) {
    if (count < 1) throw ValidationError("design", "vertex count must be positive");
    const double v_d = region_boundary_speed(p, s, p_ref);
    std::vector<ExternalInput> out;
    if (region == Region::Three) {
        const double omega_d = desired_speed(table, p_ref);
        for (double v : spread(v_d + 1.0, p.v_cutout - 1.0, count)) out.push_back({v, omega_d, p_ref});
        return out;
    }
    for (double v : spread(p.v_cutin + 1.0, v_d - 1.0, count)) {
        const auto nearest = std::min_element(table.v_grid.begin(), table.v_grid.end(), [&](double a, double b) {
            return std::abs(a - v) < std::abs(b - v);
        });
        const double v_node = *nearest;
        const double p_d = desired_power(p, s, p_ref, v_node);
        out.push_back({v_node, desired_speed(table, p_d), p_d});
    }
    return out;
}

SynthesisWeights default_weights(Region region) {
    // Tuned on 600 s turbulent runs at 14.8 m/s mean: heavy weight on the power
    // integral for tracking, on speed and pitch to keep the pitch loop active
    // enough that thrust excursions stay close to the baseline's. Region 2
    // reuses the set; there the pitch sits at its lower bound.
    (void)region;
    SynthesisWeights w;
    Vec7 q;
    q << 100.0, 10.0, 10.0, 1.0, 300.0, 10.0, 0.1;
    w.q = q.asDiagonal();
    w.r = Eigen::Vector2d(0.3, 1.0).asDiagonal();
    return w;
}

RegionDesign design_region(const TurbineParameters& p, const CoefficientSurface& s,
                           const std::vector<ExternalInput>& vertices, const SynthesisWeights& weights,
                           double epsilon) {
    if (vertices.empty()) throw ValidationError("design", "empty vertex set");
    const CharacteristicScales scales = characteristic_scales(p);
    RegionDesign d;
    d.weights = weights;
    for (const ExternalInput& w : vertices) {
        d.models.push_back(linearize(p, s, compute_equilibrium(p, s, w)));
        const ScaledModel sm = scale_model(d.models.back(), scales);
        d.scaled.vertices.push_back(sm.a);
        d.scaled.b = sm.b;
        if (d.models.back().on_kink) {
            spdlog::debug("design: vertex V={:.3f} lies on a coefficient-grid edge", w.v);
        }
    }
    d.result = synthesize(d.scaled, weights, epsilon);
    d.certificate = evaluate_certificate(d.result, d.scaled, weights);
    d.k = unscale_gain(Mat27(d.result.k), scales);
    return d;
}

ControllerDesign design_controller(const TurbineParameters& p, const CoefficientSurface& s,
                                   const PowerSpeedTable& table, double p_ref, const SynthesisWeights& weights2,
                                   const SynthesisWeights& weights3, double epsilon, double delta_v, int vertex_count) {
    if (!(delta_v > 0.0)) throw ValidationError("design", "delta_v must be positive");
    ControllerDesign d;
    d.region2 = design_region(p, s, region_vertex_inputs(p, s, table, p_ref, Region::Two, vertex_count), weights2,
                              epsilon);
    d.region3 = design_region(p, s, region_vertex_inputs(p, s, table, p_ref, Region::Three, vertex_count), weights3,
                              epsilon);
    d.schedule.k2 = d.region2.k;
    d.schedule.k3 = d.region3.k;
    d.schedule.delta_v = delta_v;
    return d;
}

nlohmann::json to_json(const GainSchedule& schedule) {
    return {{"k2", gain_to_json(schedule.k2)}, {"k3", gain_to_json(schedule.k3)}, {"delta_v", schedule.delta_v}};
}

GainSchedule gain_schedule_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ValidationError("design", "gain schedule must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key != "k2" && key != "k3" && key != "delta_v") {
            throw ValidationError("design", "/" + key + ": unknown field");
        }
    }
    for (const char* key : {"k2", "k3", "delta_v"}) {
        if (!j.contains(key)) throw ValidationError("design", std::string("/") + key + ": missing field");
    }
    GainSchedule g;
    g.k2 = gain_from_json(j.at("k2"), "k2");
    g.k3 = gain_from_json(j.at("k3"), "k3");
    if (!j.at("delta_v").is_number() || !(j.at("delta_v").get<double>() > 0.0)) {
        throw ValidationError("design", "/delta_v must be a positive number");
    }
    g.delta_v = j.at("delta_v").get<double>();
    return g;
}

}  // namespace windlq
