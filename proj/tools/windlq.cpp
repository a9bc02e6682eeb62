// windlq command-line entry point. See README for the subcommands and file formats.

#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "windlq/errors.hpp"
#include "windlq/plot.hpp"
#include "windlq/report.hpp"
#include "windlq/runner.hpp"
#include "windlq/sdp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace windlq;

namespace {

struct Globals {
    std::optional<fs::path> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    bool validate = false;
};

Scenario load(const Globals& g, const std::optional<fs::path>& path) {
    Scenario s = path ? load_scenario(*path) : default_scenario();
    if (g.seed) s.simulation.seed = *g.seed;
    if (g.out) s.output_dir = *g.out;
    return s;
}

fs::path output_dir(const Scenario& s) {
    fs::create_directories(s.output_dir);
    return s.output_dir;
}

// Files written by the current command, re-checked under --validate.
class Emitted {
public:
    void add(const fs::path& p) {
        spdlog::info("wrote {}", p.string());
        files_.push_back(p);
    }

    void validate() const {
        for (const fs::path& p : files_) {
            validate_emitted_file(p);
            spdlog::info("validated {}", p.string());
        }
    }

private:
    std::vector<fs::path> files_;
};

const char* controller_name(ControllerKind k) { return k == ControllerKind::Baseline ? "baseline" : "robust-lq"; }

std::vector<double> column(const Trajectory& t, double (*f)(const Trajectory&, std::size_t)) {
    std::vector<double> out(t.size());
    for (std::size_t k = 0; k < t.size(); ++k) out[k] = f(t, k);
    return out;
}

void write_run_plots(const Trajectory& t, const fs::path& dir, Emitted& emitted) {
    const auto& time = t.time;
    auto series = [&](std::string label, double (*f)(const Trajectory&, std::size_t)) {
        return plot::Series{std::move(label), time, column(t, f)};
    };
    plot::LineChart power{"Electrical power", "time (s)", "power (MW)",
                          {series("P", [](const Trajectory& t, std::size_t k) { return t.power[k] * 1e-6; }),
                           series("P_d", [](const Trajectory& t, std::size_t k) { return t.power_desired[k] * 1e-6; })}};
    const fs::path power_path = dir / "power.svg";
    plot::write_svg(power_path, plot::render_svg(power));
    emitted.add(power_path);

    std::vector<plot::LineChart> panels{
        {"Generator speed", "", "omega (rad/s)",
         {series("omega", [](const Trajectory& t, std::size_t k) { return t.state[k].omega; }),
          series("omega_d", [](const Trajectory& t, std::size_t k) { return t.omega_desired[k]; })}},
        {"Wind", "", "V (m/s)",
         {series("V", [](const Trajectory& t, std::size_t k) { return t.wind[k]; }),
          series("V_hat", [](const Trajectory& t, std::size_t k) { return t.wind_estimate[k]; })}},
        {"Pitch", "", "theta (deg)",
         {series("theta", [](const Trajectory& t, std::size_t k) { return t.state[k].theta * 180.0 / M_PI; })}},
        {"Generator torque", "", "M_g (kN m)",
         {series("M_g", [](const Trajectory& t, std::size_t k) { return t.state[k].m_g * 1e-3; })}},
        {"Tower top", "time (s)", "x_t (m)",
         {series("x_t", [](const Trajectory& t, std::size_t k) { return t.state[k].x_t; })}},
    };
    const fs::path states_path = dir / "states.svg";
    plot::write_svg(states_path, plot::render_svg(panels));
    emitted.add(states_path);

    std::vector<plot::LineChart> rates{
        {"Pitch rate", "", "deg/s",
         {series("u1", [](const Trajectory& t, std::size_t k) { return t.u_effective[k].u1 * 180.0 / M_PI; })}},
        {"Torque rate", "time (s)", "kN m/s",
         {series("u2", [](const Trajectory& t, std::size_t k) { return t.u_effective[k].u2 * 1e-3; })}},
    };
    const fs::path rates_path = dir / "rates.svg";
    plot::write_svg(rates_path, plot::render_svg(rates));
    emitted.add(rates_path);
}

int cmd_synthesize(const Globals& g, bool dump_sdpa) {
    const Scenario s = load(g, g.scenario);
    const auto plant = make_plant(s);
    const fs::path dir = output_dir(s);
    Emitted emitted;

    const ControllerDesign design = synthesize_scenario(s, *plant);
    bool passed = true;
    for (auto [region, d] : {std::pair{Region::Two, &design.region2}, std::pair{Region::Three, &design.region3}}) {
        const std::string tag = region == Region::Two ? "region2" : "region3";
        const fs::path txt = dir / ("certificate_" + tag + ".txt");
        std::ofstream(txt) << d->certificate.to_text();
        emitted.add(txt);
        const fs::path js = dir / ("certificate_" + tag + ".json");
        write_json(js, certificate_json(*d, region));
        emitted.add(js);
        if (dump_sdpa) {
            const fs::path sdpa = dir / ("sdp_" + tag + ".dat-s");
            std::ofstream out(sdpa);
            sdp::write_sdpa(assemble_sdp(d->scaled, d->weights, s.synthesis.epsilon), out);
            out.close();
            emitted.add(sdpa);
        }
        spdlog::info("{}: J = {:.6g}, certificate {}", tag, d->result.cost_j, d->certificate.passed() ? "passed" : "FAILED");
        passed = passed && d->certificate.passed();
    }
    if (!passed) throw CertificationFailure("certificate check failed; see certificate_region*.txt");

    const fs::path gains = dir / "gains.json";
    write_json(gains, to_json(design.schedule));
    emitted.add(gains);
    if (g.validate) emitted.validate();
    return 0;
}

int cmd_simulate(const Globals& g) {
    const Scenario s = load(g, g.scenario);
    const auto plant = make_plant(s);
    const fs::path dir = output_dir(s);
    Emitted emitted;

    spdlog::info("simulating '{}' ({}, {} s, seed {})", s.name, controller_name(s.controller.kind),
                 s.simulation.duration, s.simulation.seed);
    const RunResult run = run_scenario(s, *plant);

    const fs::path traj = dir / "trajectory.csv";
    write_trajectory_csv(run.trajectory, traj);
    emitted.add(traj);
    const fs::path metrics = dir / "metrics.json";
    write_json(metrics, run_json(s, run));
    emitted.add(metrics);
    write_run_plots(run.trajectory, dir, emitted);

    spdlog::info("RMS tracking error {:.6g} W", run.metrics.rms_tracking_error);
    if (!run.checks.all()) spdlog::warn("trajectory checks failed; see metrics.json");
    if (g.validate) emitted.validate();
    return 0;
}

int cmd_compare(const Globals& g, const fs::path& scenario_b) {
    const Scenario a = load(g, g.scenario);
    Scenario b = load(g, scenario_b);
    b.output_dir = a.output_dir;
    const fs::path dir = output_dir(a);
    Emitted emitted;

    // The two runs share nothing mutable, so they can proceed in parallel.
    auto run = [](const Scenario& s) {
        const auto plant = make_plant(s);
        RunResult r = run_scenario(s, *plant);
        return std::pair{run_json(s, r), std::move(r.trajectory)};
    };
    auto fa = std::async(std::launch::async, run, std::cref(a));
    auto rb = run(b);
    auto ra = fa.get();

    const json report = compare_json(ra.first, rb.first);
    const fs::path path = dir / "compare.json";
    write_json(path, report);
    emitted.add(path);

    const std::string la = a.name + " (" + controller_name(a.controller.kind) + ")";
    const std::string lb = b.name + " (" + controller_name(b.controller.kind) + ")";
    plot::BarChart bars{"Relative to " + la, "ratio", {la, lb}, {}};
    for (const auto& [name, d] : report["deltas"].items()) {
        const double va = d["a"].get<double>();
        const double vb = d["b"].get<double>();
        bars.groups.push_back({name, {va != 0.0 ? 1.0 : 0.0, va != 0.0 ? vb / va : 0.0}});
    }
    const fs::path bar_path = dir / "compare.svg";
    plot::write_svg(bar_path, plot::render_svg(bars));
    emitted.add(bar_path);

    const Trajectory& ta = ra.second;
    const Trajectory& tb = rb.second;
    std::vector<double> pa(ta.size()), pb(tb.size()), pd(ta.size());
    for (std::size_t k = 0; k < ta.size(); ++k) {
        pa[k] = ta.power[k] * 1e-6;
        pd[k] = ta.power_desired[k] * 1e-6;
    }
    for (std::size_t k = 0; k < tb.size(); ++k) pb[k] = tb.power[k] * 1e-6;
    plot::LineChart power{"Electrical power", "time (s)", "power (MW)",
                          {{"P_d (" + a.name + ")", ta.time, pd}, {"P " + la, ta.time, pa}, {"P " + lb, tb.time, pb}}};
    const fs::path power_path = dir / "compare_power.svg";
    plot::write_svg(power_path, plot::render_svg(power));
    emitted.add(power_path);

    for (const auto& [name, d] : report["deltas"].items()) {
        std::cout << fmt::format("{:<24} {:>14.6g} {:>14.6g} {:>+10.2f} %\n", name, d["a"].get<double>(),
                                 d["b"].get<double>(),
                                 d["relative"].is_null() ? 0.0 : 100.0 * d["relative"].get<double>());
    }
    if (g.validate) emitted.validate();
    return 0;
}

ExternalInput operating_point(const Scenario& s, const Plant& plant, double wind, std::optional<double> p_d,
                              std::optional<double> omega_d) {
    ExternalInput w;
    w.v = wind;
    w.p_d = p_d ? *p_d : desired_power(plant.params, plant.surface, s.p_ref, wind);
    w.omega_d = omega_d ? *omega_d : desired_speed(plant.table, w.p_d);
    return w;
}

int cmd_equilibrium(const Globals& g, double wind, std::optional<double> p_d, std::optional<double> omega_d,
                    bool linearize_too) {
    const Scenario s = load(g, g.scenario);
    const auto plant = make_plant(s);
    const ExternalInput w = operating_point(s, *plant, wind, p_d, omega_d);
    const Equilibrium eq = compute_equilibrium(plant->params, plant->surface, w);
    const json j = linearize_too
                       ? linearization_json(linearize(plant->params, plant->surface, eq),
                                            characteristic_scales(plant->params))
                       : equilibrium_json(eq, scaled_residual(plant->params, plant->surface, eq));
    std::cout << j.dump(2) << '\n';
    if (g.out) {
        Emitted emitted;
        const fs::path dir = output_dir(s);
        const fs::path path = dir / (linearize_too ? "linearization.json" : "equilibrium.json");
        write_json(path, j);
        emitted.add(path);
        if (linearize_too) {
            const LinearModel m = linearize(plant->params, plant->surface, eq);
            write_matrix_csv(dir / "A.csv", m.a);
            emitted.add(dir / "A.csv");
            write_matrix_csv(dir / "B.csv", m.b);
            emitted.add(dir / "B.csv");
        }
        if (g.validate) emitted.validate();
    }
    return 0;
}

int cmd_del(const Globals& g, const fs::path& trajectory, double settle, bool write_cycles) {
    const Scenario s = load(g, g.scenario);
    const auto plant = make_plant(s);
    const Trajectory t = read_trajectory_csv(trajectory);
    const std::size_t first =
        std::min(t.size(), static_cast<std::size_t>(std::llround(settle / std::max(t.ts, 1e-300))));
    const double t_sim = static_cast<double>(t.size() - first) * t.ts;
    if (!(t_sim > 0.0)) throw ValidationError("cli", "trajectory is empty after the settle window");

    const fs::path dir = output_dir(s);
    Emitted emitted;
    std::vector<DelChannel> channels;
    for (const auto& [name, series] : load_proxies(t, plant->params, plant->surface, s.metrics.h_ref)) {
        DelChannel c;
        c.name = name;
        c.spec.woehler_exponent = default_woehler_exponent(name);
        if (auto it = s.metrics.channels.find(name); it != s.metrics.channels.end()) c.spec = it->second;
        c.spec.t_sim = t_sim;
        c.cycles = rainflow(std::vector<double>(series.begin() + static_cast<std::ptrdiff_t>(first), series.end()));
        c.del = damage_equivalent_load(c.cycles, c.spec);
        if (write_cycles) {
            const fs::path cp = dir / ("cycles_" + name + ".csv");
            write_cycles_csv(cp, c.cycles);
            emitted.add(cp);
        }
        std::cout << fmt::format("{:<14} DEL {:.6g} (m = {}, {} cycles)\n", name, c.del, c.spec.woehler_exponent,
                                 c.cycles.size());
        channels.push_back(std::move(c));
    }
    const fs::path path = dir / "del.json";
    const double rms = rms_tracking_error(t, first);
    const RateStatistics rates = rate_statistics(t, first);
    std::cout << fmt::format("RMS tracking error {:.6g} W, max pitch rate {:.6g} rad/s, max torque rate {:.6g} N m/s\n",
                             rms, rates.max_pitch_rate, rates.max_torque_rate);
    write_json(path, del_json(channels, trajectory.string(), rms, rates));
    emitted.add(path);
    if (g.validate) emitted.validate();
    return 0;
}

int exit_code_for(const std::exception& e, bool synthesis_context) {
    if (dynamic_cast<const SimulationAbort*>(&e)) return 4;
    if (dynamic_cast<const Infeasible*>(&e) || dynamic_cast<const NumericalFailure*>(&e) ||
        dynamic_cast<const CertificationFailure*>(&e)) {
        return 3;
    }
    if (dynamic_cast<const NoEquilibrium*>(&e)) return synthesis_context ? 3 : 2;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DomainError*>(&e)) return 2;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_default_logger(spdlog::stderr_color_st("windlq"));
    spdlog::set_pattern("[%l] %v");
    spdlog::cfg::load_env_levels();

    CLI::App app{"Robust LQ wind turbine controller: synthesis, simulation and fatigue metrics"};
    Globals g;
    std::vector<fs::path> check_files;
    app.add_option("--scenario", g.scenario, "Scenario JSON (defaults when omitted)")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Override the simulation seed");
    app.add_option("--out", g.out, "Override the output directory");
    app.add_flag("--validate", g.validate, "Re-check every emitted file against its schema");
    app.add_option("files", check_files, "With --validate and no subcommand: files to check");
    app.require_subcommand(0, 1);

    bool dump_sdpa = false;
    auto* synth = app.add_subcommand("synthesize", "Synthesize region-2/3 gains and certificates");
    synth->add_flag("--dump-sdpa", dump_sdpa, "Also write each SDP in SDPA sparse format");

    app.add_subcommand("simulate", "Closed-loop simulation with metrics and plots");

    fs::path scenario_b;
    auto* compare = app.add_subcommand("compare", "Run two scenarios and compare their metrics");
    compare->add_option("--scenario-b", scenario_b, "Second scenario")->required()->check(CLI::ExistingFile);

    double wind = 0.0;
    std::optional<double> p_d, omega_d;
    auto* equilibrium = app.add_subcommand("equilibrium", "Print the equilibrium for an operating point");
    auto* linearize_cmd = app.add_subcommand("linearize", "Print the linearization at an operating point");
    for (auto* sub : {equilibrium, linearize_cmd}) {
        sub->add_option("--wind", wind, "Wind speed (m/s)")->required();
        sub->add_option("--power-d", p_d, "Desired power (W); default from the power reference");
        sub->add_option("--omega-d", omega_d, "Desired generator speed (rad/s); default from the table");
    }

    fs::path trajectory;
    double settle = 0.0;
    bool write_cycles = false;
    auto* del = app.add_subcommand("del", "Rainflow counting and DELs of a trajectory CSV");
    del->add_option("--trajectory", trajectory, "Trajectory CSV")->required()->check(CLI::ExistingFile);
    del->add_option("--settle", settle, "Seconds excluded at the start")->check(CLI::NonNegativeNumber);
    del->add_flag("--cycles", write_cycles, "Also write the cycles of each channel as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    const bool synthesis_context = synth->parsed() || app.got_subcommand("simulate") || compare->parsed();
    try {
        if (synth->parsed()) return cmd_synthesize(g, dump_sdpa);
        if (app.got_subcommand("simulate")) return cmd_simulate(g);
        if (compare->parsed()) return cmd_compare(g, scenario_b);
        if (equilibrium->parsed()) return cmd_equilibrium(g, wind, p_d, omega_d, false);
        if (linearize_cmd->parsed()) return cmd_equilibrium(g, wind, p_d, omega_d, true);
        if (del->parsed()) return cmd_del(g, trajectory, settle, write_cycles);
        if (g.validate && !check_files.empty()) {
            for (const fs::path& f : check_files) {
                validate_emitted_file(f);
                std::cout << "ok " << f.string() << '\n';
            }
            return 0;
        }
        std::cerr << app.help();
        return 2;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return exit_code_for(e, synthesis_context);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 1;
    }
}
