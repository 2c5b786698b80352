// epct: classify, simulate, sweep, phase portraits and acceptance checks.
//
// Exit codes
//   classify  0 subcritical, 2 supercritical, 3 indeterminate
//   simulate  0 global to horizon, 2 breakdown
//   verify    0 all criteria pass, 4 some criterion fails
//   any       1 invalid input, configuration or diagnostic failure

#include <epct/epct.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>

#ifndef EPCT_SCENARIO_DIR
#define EPCT_SCENARIO_DIR "scenarios"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Globals {
    std::string out;
    std::uint64_t seed = 0;
    bool quiet = false;
};

fs::path output_dir(const Globals& g) {
    fs::path dir = g.out;
    if (dir.empty()) {
        const char* env = std::getenv("EPCT_OUT");
        dir = env && *env ? env : ".";
    }
    fs::create_directories(dir);
    return dir;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw epct::Error("cannot write " + path.string());
    out << text;
}

template <class Fn>
void write_with(const fs::path& path, Fn&& fn) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw epct::Error("cannot write " + path.string());
    fn(out);
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void write_manifest(const fs::path& dir, const std::string& command, const std::string& input,
                    const std::map<std::string, std::string>& overrides) {
    std::string hashed = command + "\n";
    if (!input.empty())
        hashed += epct::detail::read_file(input);
    for (const auto& [k, v] : overrides)
        hashed += k + "=" + v + "\n";
    json m;
    m["command"] = command;
    m["scenario"] = input;
    m["overrides"] = overrides;
    m["output_dir"] = dir.string();
    m["timestamp"] = utc_timestamp();
    m["version"] = epct::toolkit_version;
    m["input_hash"] = "fnv1a64:" + epct::hex64(epct::fnv1a(hashed));
    write_text(dir / "manifest.json", m.dump(2) + "\n");
}

void print_verdict(const epct::ThresholdVerdict& v) {
    std::cout << "verdict: " << epct::to_string(v.verdict) << "  (" << v.rule << ")\n";
    for (const auto& [name, value] : v.constants)
        std::cout << "  " << name << " = " << epct::format_number(value) << "\n";
    std::cout << "  margin = " << epct::format_number(v.margin) << "\n";
    std::cout << "  breakdown_excess = " << epct::format_number(v.breakdown_excess) << "\n";
    if (v.witness)
        std::cout << "  witness x0 = " << epct::format_number(*v.witness) << "\n";
}

int exit_for(epct::Verdict v) {
    switch (v) {
    case epct::Verdict::Subcritical:
        return 0;
    case epct::Verdict::Supercritical:
        return 2;
    case epct::Verdict::Indeterminate:
        return 3;
    }
    return 1;
}

int cmd_classify(const Globals& g, const std::string& file) {
    const auto scn = epct::scenario_from_config(epct::Config::load(file));
    const auto v = epct::classify(scn);
    const auto dir = output_dir(g);
    write_text(dir / "verdict.json", epct::verdict_json(v).dump(2) + "\n");
    write_manifest(dir, "classify", file, {});
    if (!g.quiet)
        print_verdict(v);
    return exit_for(v.verdict);
}

struct SimFlags {
    std::optional<double> horizon;
    std::optional<std::size_t> chars;
    std::optional<double> dt;
    std::optional<double> output_interval;
};

int cmd_simulate(const Globals& g, const std::string& file, const SimFlags& f) {
    const auto cfg_file = epct::Config::load(file);
    const auto scn = epct::scenario_from_config(cfg_file);
    epct::IntegratorConfig icfg;
    icfg.horizon = f.horizon.value_or(cfg_file.number_or("sim.horizon", icfg.horizon));
    icfg.dt_init = f.dt.value_or(cfg_file.number_or("sim.dt", icfg.dt_init));
    icfg.output_interval = f.output_interval.value_or(cfg_file.number_or("sim.output_interval", icfg.output_interval));
    const auto n_chars = f.chars.value_or(static_cast<std::size_t>(cfg_file.number_or("sim.chars", 512)));

    const auto verdict = epct::classify(scn);
    const auto run = epct::run_ensemble(scn, n_chars, icfg);
    const auto bounds = epct::verify_bounds(run, verdict);
    const auto dir = output_dir(g);
    write_text(dir / "run_report.json", epct::run_json(run, verdict, bounds).dump(2) + "\n");
    write_with(dir / "trajectory.csv", [&](std::ostream& out) { epct::write_trajectory_csv(out, run); });
    write_manifest(dir, "simulate", file,
                   {{"horizon", epct::format_number(icfg.horizon)},
                    {"chars", std::to_string(n_chars)},
                    {"dt", epct::format_number(icfg.dt_init)},
                    {"output_interval", epct::format_number(icfg.output_interval)}});
    if (!g.quiet) {
        std::cout << "outcome: " << epct::to_string(run.outcome) << "\n";
        if (run.blowup_bracket)
            std::cout << "  t_c in [" << epct::format_number(run.blowup_bracket->first) << ", "
                      << epct::format_number(run.blowup_bracket->second) << "] at alpha = "
                      << epct::format_number(run.worst_alpha.value_or(0.0)) << "\n";
        if (!run.failure.empty())
            std::cout << "  failure: " << run.failure << "\n";
        std::cout << "  verdict: " << epct::to_string(verdict.verdict) << "\n";
        for (const auto& c : bounds.checks)
            std::cout << "  bound " << c.name << ": "
                      << (!c.applicable ? "n/a" : (c.passed ? "pass" : "FAIL")) << "  worst margin "
                      << epct::format_number(c.worst_margin) << "\n";
    }
    if (run.outcome == epct::RunOutcome::DiagnosticFailure) {
        std::cerr << "epct: diagnostic failure: " << run.failure << "\n";
        return 1;
    }
    return run.outcome == epct::RunOutcome::Breakdown ? 2 : 0;
}

struct SweepFlags {
    std::string param;
    std::optional<double> lo, hi, tol;
    std::optional<std::size_t> chars;
    std::optional<double> horizon;
};

int cmd_sweep(const Globals& g, const std::string& file, const SweepFlags& f) {
    const auto base = epct::Config::load(file);
    const std::string param = !f.param.empty() ? f.param : (base.has("sweep.param") ? base.text("sweep.param") : "");
    if (param.empty())
        throw epct::ConfigError("sweep needs --param or sweep.param");
    const double lo = f.lo.value_or(base.number_or("sweep.lo", std::nan("")));
    const double hi = f.hi.value_or(base.number_or("sweep.hi", std::nan("")));
    const double tol = f.tol.value_or(base.number_or("sweep.tol", 1e-3));
    if (std::isnan(lo) || std::isnan(hi))
        throw epct::ConfigError("sweep needs --lo/--hi or sweep.lo/sweep.hi");
    epct::IntegratorConfig icfg;
    icfg.horizon = f.horizon.value_or(base.number_or("sim.horizon", icfg.horizon));
    icfg.dt_init = base.number_or("sim.dt", icfg.dt_init);

    epct::SweepResult result;
    const std::string mode = base.has("probe") ? base.text("probe") : "ensemble";
    if (mode == "characteristic") {
        const double k = base.number("k");
        const double nu = base.number("nu");
        const double c = base.number("char.c");
        auto outcome = [&](double th) {
            epct::Config cfg = base;
            cfg.set_number(param, th);
            return epct::characteristic_outcome(c, nu, k, cfg.number("char.rho"), cfg.number("char.d"), icfg);
        };
        result = epct::sweep_threshold(outcome, lo, hi, tol, param);
        if (param == "char.d") {
            const double line = epct::omega(c, nu, k) / c * (base.number("char.rho") - c);
            result.theta_gs = line;
            result.theta_ftb = line;
        }
    } else if (mode == "ensemble") {
        epct::ScenarioFamily family = [&](double th) {
            epct::Config cfg = base;
            cfg.set_number(param, th);
            return epct::scenario_from_config(cfg);
        };
        const std::size_t n_chars =
            f.chars.value_or(static_cast<std::size_t>(base.number_or("sim.chars", base.number("N"))));
        result = epct::sweep_threshold(epct::ensemble_probe(family, n_chars, icfg), lo, hi, tol, param);
        const auto [gs, ftb] = epct::analytic_bounds(family, lo, hi);
        result.theta_gs = gs;
        result.theta_ftb = ftb;
    } else {
        throw epct::ConfigError("probe must be 'characteristic' or 'ensemble', got '" + mode + "'");
    }

    const auto dir = output_dir(g);
    write_with(dir / "sweep.csv", [&](std::ostream& out) { epct::write_sweep_csv(out, result); });
    write_text(dir / "sweep.json", epct::sweep_json(result).dump(2) + "\n");
    write_manifest(dir, "sweep", file,
                   {{"param", param},
                    {"lo", epct::format_number(lo)},
                    {"hi", epct::format_number(hi)},
                    {"tol", epct::format_number(tol)},
                    {"horizon", epct::format_number(icfg.horizon)}});
    if (!g.quiet) {
        std::cout << "bracket for " << param << ": [" << epct::format_number(result.lo) << ", "
                  << epct::format_number(result.hi) << "]  midpoint " << epct::format_number(result.midpoint())
                  << "\n";
        if (result.theta_ftb)
            std::cout << "  theta_FTB = " << epct::format_number(*result.theta_ftb) << "\n";
        if (result.theta_gs)
            std::cout << "  theta_GS  = " << epct::format_number(*result.theta_gs) << "\n";
        if (const auto w = result.within_bounds()) {
            if (*result.theta_gs == *result.theta_ftb)
                std::cout << "  |midpoint - analytic| = "
                          << epct::format_number(std::abs(result.midpoint() - *result.theta_gs)) << "\n";
            else
                std::cout << "  bracket within [theta_FTB, theta_GS]: " << (*w ? "yes" : "no") << "\n";
        }
    }
    return 0;
}

epct::GridSpec parse_grid(const std::string& spec) {
    const auto items = epct::detail::split(spec, ',');
    if (items.size() != 6)
        throw epct::ConfigError("--grid expects x0,x1,nx,y0,y1,ny");
    std::array<double, 6> v{};
    for (std::size_t i = 0; i < 6; ++i) {
        const auto d = epct::detail::parse_double(items[i]);
        if (!d)
            throw epct::ConfigError("--grid entry '" + items[i] + "' is not a number");
        v[i] = *d;
    }
    if (v[2] < 2 || v[5] < 2 || v[2] != std::floor(v[2]) || v[5] != std::floor(v[5]))
        throw epct::ConfigError("--grid node counts must be integers >= 2");
    return {v[0], v[1], static_cast<std::size_t>(v[2]), v[3], v[4], static_cast<std::size_t>(v[5])};
}

struct PhaseFlags {
    std::string system = "rs";
    double gamma = 1.0;
    double beta = 0.0;
    double k = -1.0;
    std::string grid;
};

int cmd_phase(const Globals& g, const PhaseFlags& f) {
    epct::Plane plane;
    if (f.system == "rs")
        plane = epct::Plane::RS;
    else if (f.system == "pq")
        plane = epct::Plane::PQ;
    else
        throw epct::ConfigError("--system must be rs or pq");
    const auto params = epct::AuxParams::make(f.gamma, f.beta, f.k);
    epct::GridSpec grid;
    if (!f.grid.empty()) {
        grid = parse_grid(f.grid);
    } else {
        const double cx = plane == epct::Plane::RS ? 0.0 : f.beta / f.gamma;
        grid = {cx - 2.0, cx + 2.0, 21, 0.0, 3.0 / f.gamma, 21};
    }
    const auto field = epct::direction_field(plane, params, grid);
    const auto dir = output_dir(g);
    write_with(dir / "direction_field.csv", [&](std::ostream& out) { epct::write_direction_field_csv(out, field); });
    write_with(dir / "separatrix.csv", [&](std::ostream& out) { epct::write_separatrix_csv(out, field); });
    json summary{{"system", f.system},
                 {"gamma", f.gamma},
                 {"beta", f.beta},
                 {"k", f.k},
                 {"lambda", params.lambda()},
                 {"mu", params.mu()},
                 {"critical_point", field.critical_point},
                 {"separatrix_direction", field.separatrix_direction}};
    write_text(dir / "phase.json", summary.dump(2) + "\n");
    write_manifest(dir, "phase", "",
                   {{"system", f.system},
                    {"gamma", epct::format_number(f.gamma)},
                    {"beta", epct::format_number(f.beta)},
                    {"k", epct::format_number(f.k)},
                    {"grid", f.grid}});
    if (!g.quiet)
        std::cout << "critical point (" << epct::format_number(field.critical_point[0]) << ", "
                  << epct::format_number(field.critical_point[1]) << "), lambda = "
                  << epct::format_number(params.lambda()) << ", mu = " << epct::format_number(params.mu()) << "\n";
    return 0;
}

int cmd_verify(const Globals& g, const std::string& suite, const std::string& scenarios) {
    epct::suite_criteria(suite);
    epct::VerifyOptions opts;
    opts.scenario_dir = scenarios.empty() ? fs::path(EPCT_SCENARIO_DIR) : fs::path(scenarios);
    bool all = true;
    epct::run_suite(suite, opts, [&](const epct::CriterionResult& r) {
        all = all && r.passed();
        if (!g.quiet || !r.passed())
            std::cout << epct::format_criterion(r) << std::endl;
    });
    return all ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Critical-threshold toolkit for damped Euler-Poisson systems with variable background"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--out", g.out, "Output directory (default: $EPCT_OUT or .)");
    app.add_option("--seed", g.seed, "Reserved; every pipeline is deterministic");
    app.add_flag("--quiet", g.quiet, "Suppress standard output");

    std::string scenario_file;
    auto* classify = app.add_subcommand("classify", "Classify initial data against the thresholds");
    classify->add_option("scenario", scenario_file, "Scenario file")->required();

    SimFlags sim;
    auto* simulate = app.add_subcommand("simulate", "Simulate along characteristics");
    simulate->add_option("scenario", scenario_file, "Scenario file")->required();
    simulate->add_option("--horizon", sim.horizon, "Final time");
    simulate->add_option("--chars", sim.chars, "Number of characteristics");
    simulate->add_option("--dt", sim.dt, "Initial (and largest) step");
    simulate->add_option("--output-interval", sim.output_interval, "Spacing of output times");

    SweepFlags sw;
    auto* sweep = app.add_subcommand("sweep", "Bracket the empirical threshold by bisection");
    sweep->add_option("family", scenario_file, "Family file")->required();
    sweep->add_option("--param", sw.param, "Parameter path, e.g. u0x.params.0 or char.d");
    sweep->add_option("--lo", sw.lo, "Lower end of the range");
    sweep->add_option("--hi", sw.hi, "Upper end of the range");
    sweep->add_option("--tol", sw.tol, "Bracket width");
    sweep->add_option("--chars", sw.chars, "Characteristics per ensemble probe");
    sweep->add_option("--horizon", sw.horizon, "Horizon standing in for global existence");

    PhaseFlags ph;
    auto* phase = app.add_subcommand("phase", "Export direction fields of the linear auxiliary systems");
    phase->add_option("--system", ph.system, "rs or pq")->check(CLI::IsMember({"rs", "pq"}));
    phase->add_option("--gamma", ph.gamma, "gamma > 0");
    phase->add_option("--beta", ph.beta, "beta >= 0 (nu for the RS plane)");
    phase->add_option("--k", ph.k, "k < 0");
    phase->add_option("--grid", ph.grid, "x0,x1,nx,y0,y1,ny");

    std::string suite = "all";
    std::string scenarios;
    auto* verify = app.add_subcommand("verify", "Run the acceptance suites");
    verify->add_option("--suite", suite, "roots | regions | comparison | sharpness | bounds | all");
    verify->add_option("--scenarios", scenarios, "Directory of shipped scenarios");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (*classify)
            return cmd_classify(g, scenario_file);
        if (*simulate)
            return cmd_simulate(g, scenario_file, sim);
        if (*sweep)
            return cmd_sweep(g, scenario_file, sw);
        if (*phase)
            return cmd_phase(g, ph);
        if (*verify)
            return cmd_verify(g, suite, scenarios);
    } catch (const std::exception& e) {
        std::cerr << "epct: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
