#include "windlq/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "windlq/errors.hpp"
#include "windlq/sdp.hpp"

namespace windlq {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json matrix_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(row);
    }
    return rows;
}

json state_json(const AugmentedState& x) {
    return {{"omega", x.omega}, {"x_t", x.x_t},     {"v_t", x.v_t}, {"z_omega", x.z_omega},
            {"z_p", x.z_p},     {"theta", x.theta}, {"m_g", x.m_g}};
}

json input_json(const ExternalInput& w) { return {{"v", w.v}, {"omega_d", w.omega_d}, {"p_d", w.p_d}}; }

double relative_delta(double a, double b) {
    if (a == b) return 0.0;
    return a != 0.0 ? (b - a) / std::abs(a) : std::numeric_limits<double>::quiet_NaN();
}

// Minimal structural checker for the emitted documents.
class Checker {
public:
    explicit Checker(std::string file) : file_(std::move(file)) {}

    [[noreturn]] void fail(const std::string& pointer, const std::string& what) const {
        throw ValidationError("validate", file_ + ": " + (pointer.empty() ? "/" : pointer) + ": " + what);
    }

    const json& object(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) const {
        if (!j.is_object()) fail(ptr, "expected an object");
        for (const char* k : keys) {
            if (!j.contains(k)) fail(ptr + "/" + k, "missing field");
        }
        if (j.size() != keys.size()) {
            for (const auto& [k, v] : j.items()) {
                bool known = false;
                for (const char* e : keys) known = known || k == e;
                if (!known) fail(ptr + "/" + k, "unknown field");
            }
        }
        return j;
    }

    double number(const json& j, const std::string& ptr) const {
        if (!j.is_number()) fail(ptr, "expected a number");
        return j.get<double>();
    }

    // Finite number, or null (NaN and infinity serialize as null).
    void number_or_null(const json& j, const std::string& ptr) const {
        if (!j.is_null()) number(j, ptr);
    }

    void boolean(const json& j, const std::string& ptr) const {
        if (!j.is_boolean()) fail(ptr, "expected a boolean");
    }

    void string(const json& j, const std::string& ptr) const {
        if (!j.is_string()) fail(ptr, "expected a string");
    }

    void matrix(const json& j, const std::string& ptr, std::size_t rows, std::size_t cols) const {
        if (!j.is_array() || j.size() != rows) fail(ptr, "expected " + std::to_string(rows) + " rows");
        for (std::size_t i = 0; i < rows; ++i) {
            const std::string p = ptr + "/" + std::to_string(i);
            if (!j[i].is_array() || j[i].size() != cols) fail(p, "expected " + std::to_string(cols) + " columns");
            for (std::size_t k = 0; k < cols; ++k) number(j[i][k], p + "/" + std::to_string(k));
        }
    }

    void numbers(const json& j, const std::string& ptr, std::initializer_list<const char*> keys) const {
        object(j, ptr, keys);
        for (const char* k : keys) number(j[k], ptr + "/" + k);
    }

private:
    std::string file_;
};

void check_state(const Checker& c, const json& j, const std::string& ptr) {
    c.numbers(j, ptr, {"omega", "x_t", "v_t", "z_omega", "z_p", "theta", "m_g"});
}

void check_equilibrium_body(const Checker& c, const json& j, const std::string& ptr, bool with_schema) {
    if (with_schema) {
        c.object(j, ptr, {"schema", "w_s", "x_s", "u_s", "lambda_s", "theta_s", "scaled_residual"});
        c.number(j["scaled_residual"], ptr + "/scaled_residual");
    } else {
        c.object(j, ptr, {"w_s", "x_s", "u_s", "lambda_s", "theta_s"});
    }
    c.numbers(j["w_s"], ptr + "/w_s", {"v", "omega_d", "p_d"});
    check_state(c, j["x_s"], ptr + "/x_s");
    c.numbers(j["u_s"], ptr + "/u_s", {"u1", "u2"});
    c.number(j["lambda_s"], ptr + "/lambda_s");
    c.number(j["theta_s"], ptr + "/theta_s");
}

void check_metrics_body(const Checker& c, const json& m, const std::string& ptr) {
    c.object(m, ptr, {"rms_tracking_error_w", "max_pitch_rate_rad_s", "max_torque_rate_nm_s", "evaluated_duration_s",
                      "settle_rows", "del"});
    for (const char* k : {"rms_tracking_error_w", "max_pitch_rate_rad_s", "max_torque_rate_nm_s",
                          "evaluated_duration_s", "settle_rows"}) {
        c.number(m[k], ptr + "/" + k);
    }
    if (!m["del"].is_object()) c.fail(ptr + "/del", "expected an object");
    for (const auto& [name, ch] : m["del"].items()) {
        c.numbers(ch, ptr + "/del/" + name, {"del", "woehler_exponent"});
    }
}

void check_run(const Checker& c, const json& j, const std::string& ptr) {
    c.object(j, ptr, {"schema", "scenario", "controller", "seed", "metrics", "checks", "failed_refreshes"});
    if (j["schema"] != kMetricsSchema) c.fail(ptr + "/schema", "expected " + std::string(kMetricsSchema));
    c.string(j["scenario"], ptr + "/scenario");
    if (j["controller"] != "robust-lq" && j["controller"] != "baseline") c.fail(ptr + "/controller", "unknown controller");
    if (!j["seed"].is_number_unsigned()) c.fail(ptr + "/seed", "expected a nonnegative integer");
    if (!j["failed_refreshes"].is_number_integer()) c.fail(ptr + "/failed_refreshes", "expected an integer");
    check_metrics_body(c, j["metrics"], ptr + "/metrics");
    const json& ch = c.object(j["checks"], ptr + "/checks",
                              {"finite", "pitch_within_bounds", "torque_within_bounds", "pitch_rate_within_bounds",
                               "torque_rate_within_bounds", "all_passed"});
    for (const auto& [k, v] : ch.items()) c.boolean(v, ptr + "/checks/" + k);
}

void validate_json(const fs::path& path) {
    const Checker c(path.string());
    std::ifstream in(path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        c.fail("", std::string("not valid JSON: ") + e.what());
    }
    if (!j.is_object()) c.fail("", "expected an object");
    if (!j.contains("schema")) {
        if (!j.contains("k2")) c.fail("", "no schema tag and not a gains document");
        try {
            gain_schedule_from_json(j);
        } catch (const ValidationError& e) {
            c.fail("", e.what());
        }
        return;
    }
    const std::string schema = j["schema"].is_string() ? j["schema"].get<std::string>() : "";
    if (schema == kCertificateSchema) {
        c.object(j, "", {"schema", "region", "passed", "epsilon", "cost_j", "solver_iterations",
                         "schur_block_min_eigenvalue", "p_min_eigenvalue", "k_consistency", "cost_bound", "k_scaled",
                         "k", "vertices", "failures"});
        if (j["region"] != 2 && j["region"] != 3) c.fail("/region", "expected 2 or 3");
        c.boolean(j["passed"], "/passed");
        for (const char* k : {"epsilon", "cost_j", "solver_iterations", "schur_block_min_eigenvalue",
                              "p_min_eigenvalue", "k_consistency", "cost_bound"}) {
            c.number(j[k], std::string("/") + k);
        }
        c.matrix(j["k_scaled"], "/k_scaled", 2, 7);
        c.matrix(j["k"], "/k", 2, 7);
        if (!j["vertices"].is_array() || j["vertices"].empty()) c.fail("/vertices", "expected a nonempty array");
        for (std::size_t i = 0; i < j["vertices"].size(); ++i) {
            const std::string p = "/vertices/" + std::to_string(i);
            const json& v = c.object(j["vertices"][i], p,
                                     {"w_s", "lmi_max_eigenvalue", "spectral_abscissa", "cost",
                                      "p_minus_pi_min_eigenvalue"});
            c.numbers(v["w_s"], p + "/w_s", {"v", "omega_d", "p_d"});
            for (const char* k : {"lmi_max_eigenvalue", "spectral_abscissa", "cost", "p_minus_pi_min_eigenvalue"}) {
                c.number_or_null(v[k], p + "/" + k);
            }
        }
        if (!j["failures"].is_array()) c.fail("/failures", "expected an array");
        for (std::size_t i = 0; i < j["failures"].size(); ++i) c.string(j["failures"][i], "/failures/" + std::to_string(i));
        if (j["passed"].get<bool>() != j["failures"].empty()) c.fail("/passed", "inconsistent with /failures");
    } else if (schema == kMetricsSchema) {
        check_run(c, j, "");
    } else if (schema == kCompareSchema) {
        c.object(j, "", {"schema", "a", "b", "deltas"});
        check_run(c, j["a"], "/a");
        check_run(c, j["b"], "/b");
        if (!j["deltas"].is_object()) c.fail("/deltas", "expected an object");
        for (const auto& [k, v] : j["deltas"].items()) {
            const std::string p = "/deltas/" + k;
            c.object(v, p, {"a", "b", "delta", "relative"});
            c.number(v["a"], p + "/a");
            c.number(v["b"], p + "/b");
            c.number(v["delta"], p + "/delta");
            c.number_or_null(v["relative"], p + "/relative");
        }
    } else if (schema == kEquilibriumSchema) {
        check_equilibrium_body(c, j, "", true);
    } else if (schema == kLinearizationSchema) {
        c.object(j, "", {"schema", "equilibrium", "a", "b", "a_scaled", "b_scaled", "on_kink", "controllable",
                         "controllability_rank"});
        check_equilibrium_body(c, j["equilibrium"], "/equilibrium", false);
        c.matrix(j["a"], "/a", 7, 7);
        c.matrix(j["b"], "/b", 7, 2);
        c.matrix(j["a_scaled"], "/a_scaled", 7, 7);
        c.matrix(j["b_scaled"], "/b_scaled", 7, 2);
        c.boolean(j["on_kink"], "/on_kink");
        c.boolean(j["controllable"], "/controllable");
        if (!j["controllability_rank"].is_number_integer()) c.fail("/controllability_rank", "expected an integer");
    } else if (schema == kDelSchema) {
        c.object(j, "", {"schema", "source", "rms_tracking_error_w", "max_pitch_rate_rad_s", "max_torque_rate_nm_s",
                         "channels"});
        c.string(j["source"], "/source");
        for (const char* k : {"rms_tracking_error_w", "max_pitch_rate_rad_s", "max_torque_rate_nm_s"}) {
            c.number(j[k], std::string("/") + k);
        }
        if (!j["channels"].is_object()) c.fail("/channels", "expected an object");
        for (const auto& [k, v] : j["channels"].items()) {
            c.numbers(v, "/channels/" + k, {"del", "woehler_exponent", "n_ref", "t_life_s", "t_sim_s", "cycles"});
        }
    } else {
        c.fail("/schema", "unknown schema tag");
    }
}

void validate_csv(const fs::path& path) {
    const std::vector<csv::Row> rows = csv::read_file(path);
    if (rows.empty()) throw ValidationError("validate", path.string() + ": empty file");
    const csv::Row& h = rows.front();
    const std::string header = h.size() >= 2 ? h[0] + "," + h[1] : h[0];
    if (header == "time_s,omega") {
        read_trajectory_csv(path);
    } else if (header == "time_s,wind_mps") {
        read_wind_csv(path);
    } else if (header == "range,mean") {
        read_cycles_csv(path);
    } else {
        // Headerless numeric matrix (linearize output).
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != rows.front().size()) {
                throw ValidationError("validate", path.string() + ":" + std::to_string(i + 1) + ": ragged row");
            }
            for (std::size_t k = 0; k < rows[i].size(); ++k) csv::parse_double(rows[i][k], path, i + 1, k + 1);
        }
    }
}

void validate_svg(const fs::path& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string s = ss.str();
    if (s.rfind("<svg ", 0) != 0 || s.find("</svg>") == std::string::npos) {
        throw ValidationError("validate", path.string() + ": not a standalone SVG document");
    }
    if (s.find("nan") != std::string::npos || s.find("inf") != std::string::npos) {
        throw ValidationError("validate", path.string() + ": non-finite coordinates");
    }
}

}  // namespace

json certificate_json(const RegionDesign& d, Region region) {
    const CertificateReport& c = d.certificate;
    json vertices = json::array();
    for (std::size_t i = 0; i < c.vertices.size(); ++i) {
        const VertexCertificate& v = c.vertices[i];
        vertices.push_back({{"w_s", input_json(d.models.at(i).equilibrium.w_s)},
                            {"lmi_max_eigenvalue", v.lmi_max_eigenvalue},
                            {"spectral_abscissa", v.spectral_abscissa},
                            {"cost", v.cost},
                            {"p_minus_pi_min_eigenvalue", v.p_minus_pi_min_eigenvalue}});
    }
    return {{"schema", kCertificateSchema},
            {"region", region == Region::Two ? 2 : 3},
            {"passed", c.passed()},
            {"epsilon", c.epsilon},
            {"cost_j", d.result.cost_j},
            {"solver_iterations", d.result.solver_iterations},
            {"schur_block_min_eigenvalue", c.schur_block_min_eigenvalue},
            {"p_min_eigenvalue", c.p_min_eigenvalue},
            {"k_consistency", c.k_consistency},
            {"cost_bound", c.cost_bound},
            {"k_scaled", matrix_json(d.result.k)},
            {"k", matrix_json(d.k)},
            {"vertices", vertices},
            {"failures", c.failures}};
}

json equilibrium_json(const Equilibrium& eq, double scaled_residual) {
    return {{"schema", kEquilibriumSchema},
            {"w_s", input_json(eq.w_s)},
            {"x_s", state_json(eq.x_s)},
            {"u_s", {{"u1", eq.u_s.u1}, {"u2", eq.u_s.u2}}},
            {"lambda_s", eq.lambda_s},
            {"theta_s", eq.theta_s},
            {"scaled_residual", scaled_residual}};
}

json linearization_json(const LinearModel& m, const CharacteristicScales& scales) {
    json eq = equilibrium_json(m.equilibrium, 0.0);
    eq.erase("schema");
    eq.erase("scaled_residual");
    const ScaledModel sm = scale_model(m, scales);
    const ControllabilityReport ctrb = controllability_check(m);
    return {{"schema", kLinearizationSchema},
            {"equilibrium", eq},
            {"a", matrix_json(m.a)},
            {"b", matrix_json(m.b)},
            {"a_scaled", matrix_json(sm.a)},
            {"b_scaled", matrix_json(sm.b)},
            {"on_kink", m.on_kink},
            {"controllable", ctrb.controllable},
            {"controllability_rank", ctrb.rank}};
}

json run_json(const Scenario& scenario, const RunResult& run) {
    const TrajectoryChecks& c = run.checks;
    return {{"schema", kMetricsSchema},
            {"scenario", scenario.name},
            {"controller", scenario.controller.kind == ControllerKind::Baseline ? "baseline" : "robust-lq"},
            {"seed", scenario.simulation.seed},
            {"metrics", to_json(run.metrics)},
            {"checks",
             {{"finite", c.finite},
              {"pitch_within_bounds", c.pitch_within_bounds},
              {"torque_within_bounds", c.torque_within_bounds},
              {"pitch_rate_within_bounds", c.pitch_rate_within_bounds},
              {"torque_rate_within_bounds", c.torque_rate_within_bounds},
              {"all_passed", c.all()}}},
            {"failed_refreshes", run.failed_refreshes}};
}

json compare_json(const json& a, const json& b) {
    json deltas = json::object();
    auto add = [&](const std::string& name, double va, double vb) {
        const double rel = relative_delta(va, vb);
        deltas[name] = {{"a", va}, {"b", vb}, {"delta", vb - va}, {"relative", std::isfinite(rel) ? json(rel) : json()}};
    };
    const json& ma = a.at("metrics");
    const json& mb = b.at("metrics");
    for (const char* k : {"rms_tracking_error_w", "max_pitch_rate_rad_s", "max_torque_rate_nm_s"}) {
        add(k, ma.at(k).get<double>(), mb.at(k).get<double>());
    }
    for (const auto& [name, ch] : ma.at("del").items()) {
        if (mb.at("del").contains(name)) {
            add("del_" + name, ch.at("del").get<double>(), mb.at("del").at(name).at("del").get<double>());
        }
    }
    return {{"schema", kCompareSchema}, {"a", a}, {"b", b}, {"deltas", deltas}};
}

json del_json(const std::vector<DelChannel>& channels, const std::string& source, double rms_error,
              const RateStatistics& rates) {
    json out = json::object();
    for (const DelChannel& c : channels) {
        out[c.name] = {{"del", c.del},
                       {"woehler_exponent", c.spec.woehler_exponent},
                       {"n_ref", c.spec.n_ref},
                       {"t_life_s", c.spec.t_life},
                       {"t_sim_s", c.spec.t_sim},
                       {"cycles", c.cycles.size()}};
    }
    return {{"schema", kDelSchema},
            {"source", source},
            {"rms_tracking_error_w", rms_error},
            {"max_pitch_rate_rad_s", rates.max_pitch_rate},
            {"max_torque_rate_nm_s", rates.max_torque_rate},
            {"channels", out}};
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cli", "cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw ValidationError("cli", "write failed: " + path.string());
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
    std::ofstream out(path);
    if (!out) throw ValidationError("cli", "cannot write " + path.string());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index k = 0; k < m.cols(); ++k) out << (k ? "," : "") << csv::format_double(m(i, k));
        out << '\n';
    }
}

void write_cycles_csv(const fs::path& path, const CycleSet& cycles) {
    std::ofstream out(path);
    if (!out) throw ValidationError("metrics", "cannot write " + path.string());
    out << "range,mean,count\n";
    for (const Cycle& c : cycles) {
        out << csv::format_double(c.range) << ',' << csv::format_double(c.mean) << ',' << csv::format_double(c.count)
            << '\n';
    }
}

CycleSet read_cycles_csv(const fs::path& path) {
    const std::vector<csv::Row> rows = csv::read_file(path);
    const std::string name = path.string();
    if (rows.empty() || rows.front() != csv::Row{"range", "mean", "count"}) {
        throw ValidationError("metrics", name + ": expected header range,mean,count");
    }
    CycleSet cycles;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const csv::Row& f = rows[i];
        if (f.size() != 3) throw ValidationError("metrics", name + ":" + std::to_string(i + 1) + ": expected 3 fields");
        Cycle c;
        c.range = csv::parse_double(f[0], name, i + 1, 1);
        c.mean = csv::parse_double(f[1], name, i + 1, 2);
        c.count = csv::parse_double(f[2], name, i + 1, 3);
        if (c.range < 0.0) throw ValidationError("metrics", name + ":" + std::to_string(i + 1) + ": negative range");
        if (c.count != 0.5 && c.count != 1.0) {
            throw ValidationError("metrics", name + ":" + std::to_string(i + 1) + ": count must be 0.5 or 1");
        }
        cycles.push_back(c);
    }
    return cycles;
}

void validate_emitted_file(const fs::path& path) {
    if (!fs::is_regular_file(path)) throw ValidationError("validate", "no such file: " + path.string());
    const std::string ext = path.extension().string();
    if (ext == ".json") {
        validate_json(path);
    } else if (ext == ".csv") {
        validate_csv(path);
    } else if (ext == ".svg") {
        validate_svg(path);
    } else if (ext == ".dat-s") {
        std::ifstream in(path);
        sdp::read_sdpa(in).validate();
    } else if (ext == ".txt") {
        // Human-readable certificate; its JSON twin carries the checked content.
        std::ifstream in(path);
        if (in.peek() == std::ifstream::traits_type::eof()) {
            throw ValidationError("validate", path.string() + ": empty file");
        }
    } else {
        throw ValidationError("validate", path.string() + ": no schema for this file type");
    }
}

}  // namespace windlq
