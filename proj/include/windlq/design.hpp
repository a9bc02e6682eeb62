#pragma once

#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "windlq/control.hpp"
#include "windlq/linearize.hpp"
#include "windlq/synthesis.hpp"

namespace windlq {

enum class Region { Two, Three };

// Vertex operating points of a region.
//
// Region 3: winds spread uniformly over [V_d + 1, v_cutout - 1], P_d = p_ref,
// omega_d = LUT(p_ref). Region 2: winds spread over [v_cutin + 1, V_d - 1] and
// snapped to the table's wind nodes, with P_d and omega_d from desired_power
// and the table. At a node the table lookup reproduces the optimal tip-speed
// ratio to rounding, which the region-2 equilibrium (Cp = cp_opt) requires.
std::vector<ExternalInput> region_vertex_inputs(const TurbineParameters& p, const CoefficientSurface& s,
                                                const PowerSpeedTable& table, double p_ref, Region region,
                                                int count = 4);

// Diagonal weights in scaled coordinates (see characteristic_scales).
SynthesisWeights default_weights(Region region);

struct RegionDesign {
    std::vector<LinearModel> models;  // physical units
    ModelSet scaled;
    SynthesisWeights weights;
    SynthesisResult result;  // scaled coordinates
    CertificateReport certificate;
    Mat27 k = Mat27::Zero();  // physical units
};

// Equilibria, linearization, scaling, joint synthesis and certification for one
// vertex set. Throws NoEquilibrium, Infeasible, NumericalFailure or CertificationFailure.
RegionDesign design_region(const TurbineParameters& p, const CoefficientSurface& s,
                           const std::vector<ExternalInput>& vertices, const SynthesisWeights& weights,
                           double epsilon = kDefaultEpsilon);

struct ControllerDesign {
    RegionDesign region2;
    RegionDesign region3;
    GainSchedule schedule;
};

ControllerDesign design_controller(const TurbineParameters& p, const CoefficientSurface& s,
                                   const PowerSpeedTable& table, double p_ref, const SynthesisWeights& weights2,
                                   const SynthesisWeights& weights3, double epsilon = kDefaultEpsilon,
                                   double delta_v = 0.5, int vertex_count = 4);

nlohmann::json to_json(const GainSchedule& schedule);
GainSchedule gain_schedule_from_json(const nlohmann::json& j);

}  // namespace windlq
