#ifndef EPCT_VERIFY_HPP
#define EPCT_VERIFY_HPP

// Acceptance suites: each criterion runs its checks and its runtime budget.

#include "charode.hpp"
#include "config.hpp"
#include "phase.hpp"
#include "roots.hpp"
#include "simulate.hpp"
#include "thresholds.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace epct {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool checks_passed = false;
    std::string detail;
    double seconds = 0.0;
    /// Runtime budget in seconds; <= 0 means none.
    double budget = 0.0;

    bool passed() const { return checks_passed && (budget <= 0.0 || seconds <= budget); }
};

struct VerifyOptions {
    std::filesystem::path scenario_dir;
    std::uint64_t seed = 20240521;
};

namespace verify_detail {

inline std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

inline Scenario variable_scenario(double nu, double u0x_offset, double k = -1.0, std::size_t n = 64,
                                  std::optional<Kernel> kernel = std::nullopt) {
    auto bg = PeriodicProfile::from_closed_form(ClosedForm::affine_sine(1.0, 0.3), n);
    auto rho = PeriodicProfile::from_closed_form(ClosedForm::raised_cosine(1.0, 0.2), n);
    auto u0 = PeriodicProfile::from_closed_form(ClosedForm::affine_sine(0.0, 0.05), n);
    auto u0x = PeriodicProfile::from_closed_form(ClosedForm::raised_cosine(u0x_offset, 0.2), n);
    return Scenario(k, nu, bg, rho, u0, u0x, std::move(kernel));
}

// 1 ------------------------------------------------------------------------
inline CriterionResult root_identities(std::mt19937_64& rng) {
    CriterionResult r{1, "root identities"};
    std::uniform_real_distribution<double> g(0.0, 10.0), b(0.0, 10.0), kk(-10.0, -0.1);
    double worst_prod = 0.0, worst_diff = 0.0, worst_res = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const auto rp = RootPair::make(g(rng), b(rng), kk(rng));
        worst_prod = std::max(worst_prod, std::abs(rp.lambda * rp.mu + rp.k * rp.gamma));
        worst_diff = std::max(worst_diff, std::abs(rp.lambda - rp.mu - rp.beta));
        worst_res = std::max(worst_res, rp.residual());
    }
    r.checks_passed = worst_prod <= 1e-12 && worst_diff <= 1e-12 && worst_res < 1e-12;
    r.detail = "10000 samples: |lambda*mu + k*gamma| <= " + fmt(worst_prod) + ", |lambda - mu - beta| <= " +
               fmt(worst_diff) + ", residual <= " + fmt(worst_res);
    r.budget = 1.0;
    return r;
}

// 2 ------------------------------------------------------------------------
inline CriterionResult riccati_time() {
    CriterionResult r{2, "Riccati blow-up time"};
    const double expected = 0.5 * std::log(3.0);
    AuxSystem sys(1.0, 0.0, -1.0);
    IntegratorConfig cfg;
    cfg.horizon = 5.0;
    cfg.output_interval = 0.0;
    const auto res = integrate(sys, {0.0, -2.0}, cfg);
    const auto analytic = riccati_blowup(-2.0, AuxParams::make(1.0, 0.0, -1.0));
    if (res.reason != Termination::BlowupDetected) {
        r.detail = std::string("integration ended with ") + to_string(res.reason);
        return r;
    }
    const double tc = 0.5 * (res.blowup_bracket->first + res.blowup_bracket->second);
    r.checks_passed = std::abs(tc - expected) <= 1e-4 && std::abs(analytic.blowup_time - expected) <= 1e-12;
    r.detail = "numerical t_c = " + fmt(tc) + " (error " + fmt(std::abs(tc - expected)) + "), closed form " +
               fmt(analytic.blowup_time);
    r.budget = 1.0;
    return r;
}

// 3 ------------------------------------------------------------------------
inline CriterionResult constant_sharpness() {
    CriterionResult r{3, "constant-background sharpness"};
    struct Case {
        double c, nu, k;
    };
    const Case cases[] = {{1.0, 0.0, -1.0}, {1.0, 1.0, -1.0}, {2.0, 0.5, -2.0}};
    double worst = 0.0;
    int ok = 0, total = 0;
    for (const auto& cs : cases) {
        for (double rho0 : {0.5, 1.0, 2.0}) {
            ++total;
            const double line = omega(cs.c, cs.nu, cs.k) / cs.c * (rho0 - cs.c);
            const auto sweep = sweep_threshold(characteristic_probe(cs.c, cs.nu, cs.k, rho0), line - 1.0,
                                               line + 1.0, 1e-3, "d0");
            const double dist = line < sweep.lo ? sweep.lo - line : (line > sweep.hi ? line - sweep.hi : 0.0);
            worst = std::max(worst, std::abs(sweep.midpoint() - line));
            if (dist <= 5e-3 && sweep.width() <= 1e-3 && sweep.lo_breaks)
                ++ok;
        }
    }
    r.checks_passed = ok == total;
    r.detail = std::to_string(ok) + "/" + std::to_string(total) + " brackets within 5e-3 of the analytic line; max |midpoint - line| = " + fmt(worst);
    r.budget = 120.0;
    return r;
}

// 4 ------------------------------------------------------------------------
inline CriterionResult variable_bracketing() {
    CriterionResult r{4, "variable-background bracketing"};
    std::ostringstream det;
    bool ok = true;
    for (double nu : {0.0, 1.0}) {
        ScenarioFamily family = [nu](double th) { return variable_scenario(nu, th); };
        const auto [gs, ftb] = analytic_bounds(family, -10.0, 10.0);
        if (!gs || !ftb) {
            ok = false;
            det << "nu=" << nu << ": classifier bounds not found; ";
            continue;
        }
        auto sweep = sweep_threshold(ensemble_probe(family, 64), *ftb - 1.0, *gs + 1.0, 1e-3, "u0x.params.0");
        sweep.theta_gs = gs;
        sweep.theta_ftb = ftb;
        const bool inside = sweep.within_bounds().value_or(false);
        ok = ok && inside && sweep.lo_breaks;
        det << "nu=" << nu << ": [" << fmt(sweep.lo) << ", " << fmt(sweep.hi) << "] in [" << fmt(*ftb) << ", "
            << fmt(*gs) << "] " << (inside ? "yes" : "NO") << "; ";
    }
    r.checks_passed = ok;
    r.detail = det.str();
    r.budget = 300.0;
    return r;
}

// 5 ------------------------------------------------------------------------
inline CriterionResult comparison_orderings(std::mt19937_64& rng) {
    CriterionResult r{5, "comparison orderings"};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto U = [&](double a, double b) { return a + (b - a) * unit(rng); };
    int violations = 0, trials = 0;

    const Scenario scn = variable_scenario(0.5, 0.0);
    for (auto branch : {ComparisonBranch::Lower, ComparisonBranch::Upper}) {
        for (int i = 0; i < 100; ++i) {
            auto path = seed_characteristic(scn, U(-0.5, 0.5));
            path.rho = U(0.2, 3.0);
            path.slope = U(-3.0, 3.0);
            AuxState aux;
            if (branch == ComparisonBranch::Lower) {
                aux = {path.rho + U(0.01, 1.0), path.slope - U(0.01, 1.0)};
            } else {
                aux = {path.rho * U(0.1, 0.99), path.slope + U(0.01, 1.0)};
            }
            const auto rep = compare_nonlin_vs_aux(scn, path, aux, branch, 5.0);
            ++trials;
            violations += rep.held ? 0 : 1;
        }
    }

    auto kern = Kernel(PeriodicProfile::from_closed_form(ClosedForm::raised_cosine(0.5, 0.3), 64));
    const Scenario ascn = variable_scenario(0.5, 0.0, -1.0, 64, kern);
    for (auto branch : {ComparisonBranch::Lower, ComparisonBranch::Upper}) {
        std::vector<LinearPairInitial> pairs;
        for (int i = 0; i < 100; ++i) {
            LinearPairInitial p;
            p.path = static_cast<std::size_t>(U(0.0, 63.999));
            p.s0 = U(0.1, 3.0);
            p.w0 = U(-3.0, 3.0);
            const double ds = U(0.01, 1.0);
            const double dw = U(0.01, 1.0);
            if (branch == ComparisonBranch::Lower) {
                p.q0 = p.s0 - ds;
                p.p0 = p.w0 - dw;
            } else {
                p.q0 = p.s0 + ds;
                p.p0 = p.w0 + dw;
            }
            pairs.push_back(p);
        }
        const auto reps = compare_lin2_vs_auxlin2(ascn, pairs, branch, 5.0, 64);
        for (const auto& rep : reps) {
            ++trials;
            violations += rep.held ? 0 : 1;
        }
    }
    r.checks_passed = violations == 0 && trials == 400;
    r.detail = std::to_string(violations) + " ordering violations in " + std::to_string(trials) + " trials";
    r.budget = 120.0;
    return r;
}

// 6 ------------------------------------------------------------------------
inline CriterionResult invariant_regions(std::mt19937_64& rng) {
    CriterionResult r{6, "invariant regions"};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto U = [&](double a, double b) { return a + (b - a) * unit(rng); };
    int inside_fail = 0, outside_fail = 0;
    for (Plane plane : {Plane::RS, Plane::PQ}) {
        int inside = 0, outside = 0;
        while (inside < 1000 || outside < 1000) {
            const auto p = AuxParams::make(U(0.5, 2.0), U(0.0, 3.0), U(-2.0, -0.5));
            const double a = U(-3.0, 3.0);
            const double b = U(0.01, 3.0);
            const bool rs = plane == Plane::RS;
            const double offset = rs ? rs_separatrix_offset(a, b, p) : pq_separatrix_offset(a, b, p);
            const bool member = rs ? region_membership_rs(a, b, p) : region_membership_pq(a, b, p);
            if (member && offset > 1e-6 && inside < 1000) {
                ++inside;
                for (double t : {0.1, 1.0, 10.0}) {
                    const auto st = rs ? solve_linear_rs(a, b, p, t) : solve_linear_pq(a, b, p, t);
                    const bool still =
                        rs ? region_membership_rs(st.first(), st.second(), p) : region_membership_pq(st.first(), st.second(), p);
                    if (!still) {
                        ++inside_fail;
                        break;
                    }
                }
            } else if (!member && offset < -1e-3 && outside < 1000) {
                ++outside;
                const double cross = rs ? crossing_time_rs(a, b, p) : crossing_time_pq(a, b, p);
                const double bound = rs ? tc_bound_rs(a, b, p) : tc_bound_pq(a, b, p);
                if (!(cross <= bound))
                    ++outside_fail;
            }
        }
    }
    r.checks_passed = inside_fail == 0 && outside_fail == 0;
    r.detail = "RS and PQ planes, 1000 states each side: " + std::to_string(inside_fail) + " left the region, " +
               std::to_string(outside_fail) + " outside states missed the t_c bound";
    r.budget = 30.0;
    return r;
}

// 7 ------------------------------------------------------------------------
inline CriterionResult a_priori_bounds(const std::filesystem::path& dir) {
    CriterionResult r{7, "a priori bounds"};
    r.budget = 300.0;
    std::vector<std::filesystem::path> files;
    const auto bounds_dir = dir / "bounds";
    if (std::filesystem::is_directory(bounds_dir))
        for (const auto& e : std::filesystem::directory_iterator(bounds_dir))
            if (e.path().extension() == ".cfg")
                files.push_back(e.path());
    std::sort(files.begin(), files.end());
    int with_kernel = 0, without = 0, passed = 0;
    std::string failures;
    for (const auto& f : files) {
        const Scenario scn = scenario_from_config(Config::load(f));
        (scn.has_kernel() ? with_kernel : without) += 1;
        const auto verdict = classify(scn);
        if (verdict.verdict != Verdict::Subcritical) {
            failures += f.filename().string() + " not subcritical; ";
            continue;
        }
        const auto run = run_ensemble(scn, scn.grid_size());
        const auto rep = verify_bounds(run, verdict);
        if (run.outcome == RunOutcome::GlobalToHorizon && rep.all_passed()) {
            ++passed;
        } else {
            failures += f.filename().string() + " " + to_string(run.outcome);
            for (const auto& c : rep.checks)
                if (c.applicable && !c.passed)
                    failures += " " + c.name + "(" + fmt(c.worst_margin) + ")";
            failures += "; ";
        }
    }
    r.checks_passed = with_kernel == 10 && without == 10 && passed == 20;
    r.detail = std::to_string(passed) + "/" + std::to_string(files.size()) + " scenarios (" +
               std::to_string(with_kernel) + " with kernel) global with all bounds holding" +
               (failures.empty() ? "" : ": " + failures);
    return r;
}

// 8 ------------------------------------------------------------------------
inline CriterionResult reductions() {
    CriterionResult r{8, "reductions"};
    std::ostringstream det;
    bool ok = true;

    double worst = 0.0;
    for (double offset : {2.0, -1.5}) {
        const Scenario plain = variable_scenario(0.5, offset);
        auto zero = Kernel(PeriodicProfile::from_closed_form(ClosedForm::constant(0.0), 64));
        const Scenario aligned = variable_scenario(0.5, offset, -1.0, 64, zero);
        IntegratorConfig cfg;
        cfg.horizon = 10.0;
        const auto a = run_ensemble(plain, 64, cfg);
        const auto b = run_ensemble(aligned, 64, cfg);
        if (a.outcome != b.outcome || a.snapshots.size() != b.snapshots.size()) {
            ok = false;
            det << "outcomes differ for offset " << offset << "; ";
            continue;
        }
        for (std::size_t s = 0; s < a.snapshots.size(); ++s) {
            const auto& sa = a.snapshots[s];
            const auto& sb = b.snapshots[s];
            for (std::size_t i = 0; i < 64; ++i) {
                for (auto [va, vb] : {std::pair{sa.x[i], sb.x[i]}, {sa.u[i], sb.u[i]}, {sa.E[i], sb.E[i]},
                                      {sa.rho[i], sb.rho[i]}, {sa.ux[i], sb.ux[i]}})
                    worst = std::max(worst, std::abs(va - vb));
            }
        }
        if (a.breakdown_time() && b.breakdown_time())
            worst = std::max(worst, std::abs(*a.breakdown_time() - *b.breakdown_time()));
    }
    ok = ok && worst <= 1e-8;
    det << "psi=0 vs no alignment max field difference " << fmt(worst) << "; ";

    int mismatches = 0, cases = 0;
    for (double psi : {0.0, 0.3, 1.0}) {
        for (double offset : {-2.0, 0.0, 0.3, 1.0, 3.0}) {
            for (double nu : {0.0, 0.7}) {
                auto kern = Kernel(PeriodicProfile::from_closed_form(ClosedForm::constant(psi), 64));
                const Scenario scn = variable_scenario(nu, offset, -1.0, 64, kern);
                const auto general = classify_alignment(scn);
                const auto special = classify_constant_kernel(scn);
                ++cases;
                const bool same = general.verdict == special.verdict && general.witness == special.witness &&
                                  std::abs(general.margin - special.margin) <= 1e-12 &&
                                  std::abs(general.breakdown_excess - special.breakdown_excess) <= 1e-12;
                mismatches += same ? 0 : 1;
            }
        }
    }
    ok = ok && mismatches == 0;
    det << mismatches << "/" << cases << " constant-kernel classifications differ from the constant-kernel rule";
    r.checks_passed = ok;
    r.detail = det.str();
    return r;
}

// 9 ------------------------------------------------------------------------
inline CriterionResult closed_form_vs_integrator(std::mt19937_64& rng) {
    CriterionResult r{9, "closed form vs integrator"};
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto U = [&](double a, double b) { return a + (b - a) * unit(rng); };
    double worst = 0.0;
    for (Plane plane : {Plane::RS, Plane::PQ}) {
        for (int i = 0; i < 100; ++i) {
            const auto p = AuxParams::make(U(0.5, 2.0), U(0.0, 2.0), U(-2.0, -0.5));
            const double a = U(-2.0, 2.0);
            const double b = U(0.0, 2.0);
            LinearPlaneSystem sys(plane, p);
            IntegratorConfig cfg;
            cfg.horizon = 5.0;
            cfg.output_interval = 0.01;
            auto obs = [&](const StepInfo& info, std::span<const double> y) {
                const auto exact = plane == Plane::RS ? solve_linear_rs(a, b, p, info.t) : solve_linear_pq(a, b, p, info.t);
                worst = std::max({worst, std::abs(y[0] - exact.first()), std::abs(y[1] - exact.second())});
                return true;
            };
            integrate(sys, {a, b}, cfg, obs);
        }
    }
    r.checks_passed = worst < 1e-8;
    r.detail = "200 trajectories on [0, 5] at dt = 1e-3, max error " + fmt(worst);
    return r;
}

// 10 -----------------------------------------------------------------------
inline CriterionResult phase_portrait_data() {
    CriterionResult r{10, "phase portrait data"};
    struct Portrait {
        Plane plane;
        AuxParams params;
        GridSpec grid;
    };
    const Portrait portraits[] = {{Plane::RS, AuxParams::make(1.0, 3.0, -1.0), {-2.0, 2.0, 21, 0.0, 3.0, 21}},
                        {Plane::PQ, AuxParams::make(1.0, 1.5, -1.0), {-1.0, 4.0, 21, 0.0, 3.0, 21}}};
    double worst_cp = 0.0, worst_par = 0.0;
    for (const auto& f : portraits) {
        const auto field = direction_field(f.plane, f.params, f.grid);
        const auto v0 = plane_velocity(f.plane, field.critical_point[0], field.critical_point[1], f.params);
        worst_cp = std::max(worst_cp, std::hypot(v0[0], v0[1]));
        const auto& dir = field.separatrix_direction;
        for (const auto& pt : field.separatrix) {
            const auto v = plane_velocity(f.plane, pt[0], pt[1], f.params);
            worst_par = std::max(worst_par, std::abs(v[0] * dir[1] - v[1] * dir[0]));
        }
    }
    r.checks_passed = worst_cp <= 1e-12 && worst_par <= 1e-12;
    r.detail = "critical-point speed " + fmt(worst_cp) + ", separatrix cross-component " + fmt(worst_par);
    return r;
}

} // namespace verify_detail

inline const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names{"roots", "regions", "comparison", "sharpness", "bounds", "all"};
    return names;
}

inline std::vector<int> suite_criteria(const std::string& suite) {
    if (suite == "roots")
        return {1, 2};
    if (suite == "regions")
        return {6, 9, 10};
    if (suite == "comparison")
        return {5};
    if (suite == "sharpness")
        return {3, 4};
    if (suite == "bounds")
        return {7, 8};
    if (suite == "all")
        return {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    throw PreconditionError("unknown suite '" + suite + "' (expected roots, regions, comparison, sharpness, bounds or all)");
}

inline CriterionResult run_criterion(int id, const VerifyOptions& opts) {
    std::mt19937_64 rng(opts.seed + static_cast<std::uint64_t>(id));
    const auto start = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
        switch (id) {
        case 1: r = verify_detail::root_identities(rng); break;
        case 2: r = verify_detail::riccati_time(); break;
        case 3: r = verify_detail::constant_sharpness(); break;
        case 4: r = verify_detail::variable_bracketing(); break;
        case 5: r = verify_detail::comparison_orderings(rng); break;
        case 6: r = verify_detail::invariant_regions(rng); break;
        case 7: r = verify_detail::a_priori_bounds(opts.scenario_dir); break;
        case 8: r = verify_detail::reductions(); break;
        case 9: r = verify_detail::closed_form_vs_integrator(rng); break;
        case 10: r = verify_detail::phase_portrait_data(); break;
        default: throw PreconditionError("no criterion " + std::to_string(id));
        }
    } catch (const std::exception& e) {
        r.id = id;
        r.checks_passed = false;
        r.detail = std::string("error: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

inline std::string format_criterion(const CriterionResult& r) {
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %2d %-32s %8.2fs", r.passed() ? "PASS" : "FAIL", r.id, r.name.c_str(),
                  r.seconds);
    std::string line = head;
    if (r.budget > 0.0 && r.seconds > r.budget)
        line += " (over budget " + verify_detail::fmt(r.budget) + "s)";
    return line + "  " + r.detail;
}

inline std::vector<CriterionResult> run_suite(const std::string& suite, const VerifyOptions& opts,
                                              const std::function<void(const CriterionResult&)>& on_result = {}) {
    std::vector<CriterionResult> out;
    for (int id : suite_criteria(suite)) {
        out.push_back(run_criterion(id, opts));
        if (on_result)
            on_result(out.back());
    }
    return out;
}

} // namespace epct

#endif
