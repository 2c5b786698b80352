#ifndef EPCT_SIMULATE_HPP
#define EPCT_SIMULATE_HPP

// Ensemble simulation along characteristics, a priori bound monitoring and
// bisection sweeps for the empirical critical threshold.

#include "charode.hpp"
#include "thresholds.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace epct {

enum class RunOutcome { GlobalToHorizon, Breakdown, DiagnosticFailure };

inline const char* to_string(RunOutcome o) {
    switch (o) {
    case RunOutcome::GlobalToHorizon:
        return "GlobalToHorizon";
    case RunOutcome::Breakdown:
        return "Breakdown";
    case RunOutcome::DiagnosticFailure:
        return "DiagnosticFailure";
    }
    return "unknown";
}

/// All paths at one output time, indexed by label.
struct Snapshot {
    double t = 0.0;
    std::vector<double> x, u, E, rho, slope, ux;
};

struct RunDiagnostics {
    /// Growth rate used for the density ratio (lambda_1 or lambda_M).
    double lambda = 0.0;
    /// max rho / (sup rho0 * e^{lambda t}).
    double rho_growth_ratio = 0.0;
    double min_ux = std::numeric_limits<double>::infinity();
    double max_ux = -std::numeric_limits<double>::infinity();
    /// max over paths and times of slope - max{slope(0), root}; <= 0 when the
    /// Riccati upper bound holds.
    double slope_upper_excess = -std::numeric_limits<double>::infinity();
    /// max (x^2 + u^2 + E^2) / energy envelope; no-alignment runs only.
    std::optional<double> energy_ratio;
    /// First output time at which x is not monotone in alpha.
    std::optional<double> crossing_time;
    /// max |E - reconstruction from cumulative mass| before any crossing.
    double e_consistency = 0.0;
    /// max |integral of (rho - c)| reconstructed from positions before any crossing.
    double neutrality_residual = 0.0;
    std::size_t accepted_steps = 0;
    std::size_t rejected_steps = 0;
};

struct EnsembleRun {
    Scenario scenario;
    std::size_t n_chars = 0;
    IntegratorConfig config;
    bool alignment = false;
    RunOutcome outcome = RunOutcome::GlobalToHorizon;
    std::optional<std::pair<double, double>> blowup_bracket;
    /// Bracket midpoint, or the horizon for global runs.
    double t_end = 0.0;
    std::optional<double> worst_alpha;
    std::string failure;
    std::vector<double> alpha;
    std::vector<double> masses;
    double rho0_sup = 0.0;
    std::vector<Snapshot> snapshots;
    RunDiagnostics diagnostics;

    std::optional<double> breakdown_time() const {
        if (outcome != RunOutcome::Breakdown || !blowup_bracket)
            return std::nullopt;
        return 0.5 * (blowup_bracket->first + blowup_bracket->second);
    }
};

namespace detail {

inline Snapshot empty_snapshot(double t, std::size_t n) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    Snapshot s;
    s.t = t;
    for (auto* v : {&s.x, &s.u, &s.E, &s.rho, &s.slope, &s.ux})
        v->assign(n, nan);
    return s;
}

inline void store(Snapshot& snap, std::size_t i, std::span<const double> y, double ux) {
    snap.x[i] = y[kX];
    snap.u[i] = y[kU];
    snap.E[i] = y[kE];
    snap.rho[i] = y[kRho];
    snap.slope[i] = y[kSlope];
    snap.ux[i] = ux;
}

inline bool monotone_positions(const std::vector<double>& x) {
    const std::size_t n = x.size();
    for (std::size_t i = 0; i + 1 < n; ++i)
        if (!(x[i + 1] > x[i]))
            return false;
    return x[0] + 1.0 > x[n - 1];
}

inline void compute_diagnostics(EnsembleRun& run) {
    const Scenario& scn = run.scenario;
    auto& d = run.diagnostics;
    const std::size_t n = run.n_chars;
    const double k = scn.k();
    const double nu = scn.nu();
    const double c2 = scn.c2();
    d.lambda = run.alignment ? omega(scn.c1(), nu + scn.kernel()->psi_max(), k) : omega(scn.c1(), nu, k);
    const double root = run.alignment ? omega(c2, nu + scn.kernel()->psi_max(), k) : theta(c2, nu, k);
    const double energy_rate = 2.0 * (1.0 + std::abs(k) + 2.0 * nu + c2);
    if (!run.alignment)
        d.energy_ratio = 0.0;
    if (run.snapshots.empty())
        return;
    const Snapshot& first = run.snapshots.front();

    // trapezoidal cumulative Lagrangian mass at each label
    std::vector<double> cum(n, 0.0);
    for (std::size_t i = 1; i < n; ++i)
        cum[i] = cum[i - 1] + 0.5 * (run.masses[i - 1] + run.masses[i]);

    for (const auto& snap : run.snapshots) {
        const double envelope_rho = run.rho0_sup * std::exp(d.lambda * snap.t);
        for (std::size_t i = 0; i < n; ++i) {
            d.rho_growth_ratio = std::max(d.rho_growth_ratio, snap.rho[i] / envelope_rho);
            d.min_ux = std::min(d.min_ux, snap.ux[i]);
            d.max_ux = std::max(d.max_ux, snap.ux[i]);
            d.slope_upper_excess = std::max(d.slope_upper_excess, snap.slope[i] - std::max(first.slope[i], root));
            if (d.energy_ratio) {
                const double a = run.alpha[i];
                const double e0 = a * a + first.u[i] * first.u[i] + first.E[i] * first.E[i];
                const double lhs = snap.x[i] * snap.x[i] + snap.u[i] * snap.u[i] + snap.E[i] * snap.E[i];
                const double rhs = e0 * std::exp(energy_rate * snap.t);
                const double ratio = rhs > 0.0 ? lhs / rhs : (lhs > 1e-24 ? std::numeric_limits<double>::infinity() : 0.0);
                d.energy_ratio = std::max(*d.energy_ratio, ratio);
            }
        }
        if (!d.crossing_time && n > 1 && !monotone_positions(snap.x))
            d.crossing_time = snap.t;
        if (d.crossing_time)
            continue;
        double integral = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double right = i + 1 < n ? snap.x[i + 1] : snap.x[0] + 1.0;
            const double left = i > 0 ? snap.x[i - 1] : snap.x[n - 1] - 1.0;
            integral += snap.rho[i] * 0.5 * (right - left);
            const double e_rec = cum[i] - scn.background().integral_to(snap.x[i]);
            d.e_consistency = std::max(d.e_consistency, std::abs(snap.E[i] - e_rec));
        }
        d.neutrality_residual = std::max(d.neutrality_residual, std::abs(integral - 1.0));
    }
}

} // namespace detail

/// Simulates the scenario along n_chars characteristics. Without a kernel the
/// paths are independent and each is integrated on its own step sequence;
/// with a kernel the ensemble is integrated as one coupled system.
/// `record` keeps per-output-time snapshots and diagnostics.
inline EnsembleRun run_ensemble(const Scenario& scn, std::size_t n_chars, const IntegratorConfig& cfg = {},
                                bool record = true) {
    if (n_chars < 16)
        throw PreconditionError("run_ensemble needs at least 16 characteristics");
    cfg.validate();
    auto seed = seed_ensemble(scn, n_chars);
    EnsembleRun run{scn, n_chars, cfg};
    run.alignment = scn.has_kernel();
    run.masses = seed.masses;
    run.alpha.resize(n_chars);
    for (std::size_t i = 0; i < n_chars; ++i)
        run.alpha[i] = seed.states[i].alpha;
    run.rho0_sup = scn.rho0().max();
    for (const auto& s : seed.states)
        run.rho0_sup = std::max(run.rho0_sup, s.rho);
    const auto times = cfg.output_times();
    if (record) {
        run.snapshots.reserve(times.size());
        for (double t : times)
            run.snapshots.push_back(detail::empty_snapshot(t, n_chars));
    }

    double t_stop = std::numeric_limits<double>::infinity();
    if (!run.alignment) {
        NoAlignmentSystem sys(scn, 1);
        for (std::size_t i = 0; i < n_chars; ++i) {
            std::vector<double> y(path_stride);
            pack(seed.states[i], y);
            auto obs = [&](const StepInfo& info, std::span<const double> st) {
                if (record && info.output_index)
                    detail::store(run.snapshots[*info.output_index], i, st, st[kSlope]);
                return info.t < t_stop;
            };
            const auto res = integrate(sys, std::move(y), cfg, obs);
            run.diagnostics.accepted_steps += res.accepted;
            run.diagnostics.rejected_steps += res.rejected;
            if (res.reason == Termination::StepUnderflow) {
                run.outcome = RunOutcome::DiagnosticFailure;
                run.failure = "step underflow without cap breach at alpha = " + detail::sci(run.alpha[i]) +
                              ", t = " + detail::sci(res.t);
                run.t_end = res.t;
                return run;
            }
            if (res.reason == Termination::BlowupDetected) {
                const double tc = 0.5 * (res.blowup_bracket->first + res.blowup_bracket->second);
                if (!run.blowup_bracket || tc < t_stop) {
                    run.blowup_bracket = res.blowup_bracket;
                    run.worst_alpha = run.alpha[i];
                    t_stop = tc;
                }
            }
        }
    } else {
        AlignmentSystem sys(scn, seed.masses);
        std::vector<double> y(sys.dimension());
        for (std::size_t i = 0; i < n_chars; ++i)
            pack(seed.states[i], std::span(y).subspan(i * path_stride, path_stride));
        auto obs = [&](const StepInfo& info, std::span<const double> st) {
            if (record && info.output_index) {
                const auto conv = sys.convolution(st);
                auto& snap = run.snapshots[*info.output_index];
                for (std::size_t i = 0; i < n_chars; ++i) {
                    const auto path = st.subspan(i * path_stride, path_stride);
                    detail::store(snap, i, path, path[kSlope] - scn.nu() - conv[i]);
                }
            }
            return true;
        };
        const auto res = integrate(sys, std::move(y), cfg, obs);
        run.diagnostics.accepted_steps = res.accepted;
        run.diagnostics.rejected_steps = res.rejected;
        if (res.reason == Termination::StepUnderflow) {
            run.outcome = RunOutcome::DiagnosticFailure;
            run.failure = "step underflow without cap breach at t = " + detail::sci(res.t);
            run.t_end = res.t;
            return run;
        }
        if (res.reason == Termination::BlowupDetected) {
            run.blowup_bracket = res.blowup_bracket;
            std::size_t worst = 0;
            double worst_score = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n_chars; ++i) {
                const double slope = res.state[i * path_stride + kSlope];
                const double rho = res.state[i * path_stride + kRho];
                const double score = std::max(-slope / cfg.slope_cap, rho / cfg.density_cap);
                if (score > worst_score) {
                    worst_score = score;
                    worst = i;
                }
            }
            run.worst_alpha = run.alpha[worst];
            t_stop = 0.5 * (res.blowup_bracket->first + res.blowup_bracket->second);
        }
    }

    if (run.blowup_bracket) {
        run.outcome = RunOutcome::Breakdown;
        run.t_end = t_stop;
        if (record) {
            const double cutoff = run.blowup_bracket->first;
            std::erase_if(run.snapshots, [&](const Snapshot& s) { return s.t > cutoff; });
        }
    } else {
        run.outcome = RunOutcome::GlobalToHorizon;
        run.t_end = cfg.horizon;
    }
    if (record)
        detail::compute_diagnostics(run);
    return run;
}

// ---------------------------------------------------------------------------
// A priori bounds

struct BoundCheck {
    std::string name;
    bool applicable = true;
    bool passed = true;
    /// Smallest (bound - value) over every path and output time.
    double worst_margin = std::numeric_limits<double>::infinity();
    std::optional<double> worst_time;
};

struct BoundsReport {
    std::vector<BoundCheck> checks;

    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.applicable || c.passed; });
    }
    const BoundCheck* find(std::string_view name) const {
        for (const auto& c : checks)
            if (c.name == name)
                return &c;
        return nullptr;
    }
};

inline constexpr double bound_tolerance = 1e-6;

/// Checks the density and u_x bounds implied by the verdict: the lower bounds
/// only for subcritical verdicts, the Riccati upper bounds for every run.
inline BoundsReport verify_bounds(const EnsembleRun& run, const ThresholdVerdict& verdict) {
    const Scenario& scn = run.scenario;
    const double k = scn.k();
    const double nu = scn.nu();
    const bool sub = verdict.verdict == Verdict::Subcritical;
    const double psi_M = run.alignment ? scn.kernel()->psi_max() : 0.0;
    const double psi_m = run.alignment ? scn.kernel()->psi_min() : 0.0;
    const double lambda = omega(scn.c1(), nu + psi_M, k);

    double max_u0x = scn.u0x().max();
    if (!run.snapshots.empty())
        for (double v : run.snapshots.front().ux)
            max_u0x = std::max(max_u0x, v);
    const double ux_ceiling = std::max(max_u0x, theta(scn.c2(), nu + psi_M, k)) + psi_M - psi_m;
    const double slope_root = run.alignment ? omega(scn.c2(), nu + psi_M, k) : theta(scn.c2(), nu, k);
    const double energy_rate = 2.0 * (1.0 + std::abs(k) + 2.0 * nu + scn.c2());

    BoundCheck rho_up{"rho_upper", sub};
    BoundCheck ux_low{"ux_lower", sub};
    BoundCheck ux_up{"ux_upper", true};
    BoundCheck slope_up{"slope_upper", true};
    BoundCheck energy{"energy", !run.alignment};

    auto note = [](BoundCheck& c, double margin, double t) {
        if (margin < c.worst_margin) {
            c.worst_margin = margin;
            c.worst_time = t;
        }
    };
    if (!run.snapshots.empty()) {
        const Snapshot& first = run.snapshots.front();
        for (const auto& snap : run.snapshots) {
            const double rho_bound = run.rho0_sup * std::exp(lambda * snap.t) * (1.0 + bound_tolerance);
            for (std::size_t i = 0; i < run.n_chars; ++i) {
                note(rho_up, rho_bound - snap.rho[i], snap.t);
                note(ux_low, snap.ux[i] + lambda + bound_tolerance, snap.t);
                note(ux_up, ux_ceiling + bound_tolerance - snap.ux[i], snap.t);
                note(slope_up, std::max(first.slope[i], slope_root) + bound_tolerance - snap.slope[i], snap.t);
                if (energy.applicable) {
                    const double a = run.alpha[i];
                    const double e0 = a * a + first.u[i] * first.u[i] + first.E[i] * first.E[i];
                    const double lhs = snap.x[i] * snap.x[i] + snap.u[i] * snap.u[i] + snap.E[i] * snap.E[i];
                    const double rhs = e0 * std::exp(energy_rate * snap.t);
                    note(energy, rhs * (1.0 + 1e-9) + 1e-12 - lhs, snap.t);
                }
            }
        }
    }
    BoundsReport rep;
    for (auto* c : {&rho_up, &ux_low, &ux_up, &slope_up, &energy}) {
        c->passed = c->worst_margin >= 0.0;
        rep.checks.push_back(*c);
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Threshold sweeps

struct ProbeOutcome {
    bool breakdown = false;
    /// Breakdown time, or the horizon for global probes.
    double t_end = 0.0;
};

using Probe = std::function<ProbeOutcome(double)>;
using ScenarioFamily = std::function<Scenario(double)>;

struct SweepPoint {
    double theta = 0.0;
    ProbeOutcome outcome;
};

inline constexpr double sharp_line_tolerance = 5e-3;

struct SweepResult {
    std::string param;
    double lo = 0.0;
    double hi = 0.0;
    bool lo_breaks = false;
    std::vector<SweepPoint> probes;
    std::optional<double> theta_gs;
    std::optional<double> theta_ftb;

    double midpoint() const { return 0.5 * (lo + hi); }
    double width() const { return hi - lo; }

    /// Bracket inside [theta_FTB, theta_GS] (in either orientation). When the
    /// two coincide (a sharp line) the midpoint must lie within
    /// sharp_line_tolerance of it.
    std::optional<bool> within_bounds() const {
        if (!theta_gs || !theta_ftb)
            return std::nullopt;
        const double a = std::min(*theta_gs, *theta_ftb);
        const double b = std::max(*theta_gs, *theta_ftb);
        if (a == b)
            return std::abs(midpoint() - a) <= sharp_line_tolerance;
        return lo >= a && hi <= b;
    }
};

/// Bisects on theta until the bracket with opposite outcomes is at most `tol`
/// wide. Rejects endpoints with equal outcomes.
inline SweepResult sweep_threshold(const Probe& probe, double lo, double hi, double tol = 1e-3,
                                   std::string param = "theta") {
    if (!(lo < hi))
        throw PreconditionError("sweep range needs lo < hi");
    if (!(tol > 0.0))
        throw PreconditionError("sweep tolerance must be positive");
    SweepResult res;
    res.param = std::move(param);
    auto eval = [&](double th) {
        const auto o = probe(th);
        res.probes.push_back({th, o});
        return o.breakdown;
    };
    const bool at_lo = eval(lo);
    const bool at_hi = eval(hi);
    if (at_lo == at_hi)
        throw PreconditionError(std::string("sweep endpoints have the same outcome (") +
                                (at_lo ? "breakdown" : "global") + "); widen the range");
    res.lo_breaks = at_lo;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (eval(mid) == at_lo ? lo : hi) = mid;
    }
    res.lo = lo;
    res.hi = hi;
    return res;
}

/// Transition points of the classifier along a family: theta_GS where the
/// verdict enters or leaves Subcritical, theta_FTB where it enters or leaves
/// Supercritical. Each is absent when the verdict does not change on [lo, hi].
inline std::pair<std::optional<double>, std::optional<double>>
analytic_bounds(const ScenarioFamily& family, double lo, double hi,
                const std::function<ThresholdVerdict(const Scenario&)>& classifier = classify) {
    auto transition = [&](auto pred) -> std::optional<double> {
        double a = lo, b = hi;
        const bool pa = pred(classifier(family(a)));
        if (pa == pred(classifier(family(b))))
            return std::nullopt;
        for (int it = 0; it < 200 && b - a > 1e-13 * std::max(1.0, std::abs(a)); ++it) {
            const double mid = 0.5 * (a + b);
            (pred(classifier(family(mid))) == pa ? a : b) = mid;
        }
        return 0.5 * (a + b);
    };
    const auto gs = transition([](const ThresholdVerdict& v) { return v.verdict == Verdict::Subcritical; });
    const auto ftb = transition([](const ThresholdVerdict& v) { return v.verdict == Verdict::Supercritical; });
    return {gs, ftb};
}

/// (rho, d) along one characteristic with constant background c.
class RhoSlopeSystem {
  public:
    RhoSlopeSystem(double c, double nu, double k) : c_(c), nu_(nu), k_(k) {}
    std::size_t dimension() const { return 2; }
    void derivative(double, std::span<const double> y, std::span<double> dy) const {
        dy[0] = -y[0] * y[1];
        dy[1] = -y[1] * y[1] - nu_ * y[1] + k_ * (y[0] - c_);
    }
    Watch watch(std::span<const double> y) const { return {y[1], y[0]}; }

  private:
    double c_, nu_, k_;
};

inline ProbeOutcome characteristic_outcome(double c, double nu, double k, double rho0, double d0,
                                           const IntegratorConfig& cfg) {
    if (!(k < 0.0))
        throw PreconditionError("attractive forcing required (k<0)");
    if (!(c > 0.0) || !(rho0 >= 0.0))
        throw PreconditionError("characteristic probe needs c > 0 and rho0 >= 0");
    RhoSlopeSystem sys(c, nu, k);
    IntegratorConfig local = cfg;
    local.output_interval = 0.0;
    const auto res = integrate(sys, {rho0, d0}, local);
    if (res.reason == Termination::StepUnderflow)
        throw Error("characteristic probe: step underflow without cap breach");
    if (res.reason == Termination::BlowupDetected)
        return {true, 0.5 * (res.blowup_bracket->first + res.blowup_bracket->second)};
    return {false, cfg.horizon};
}

/// Single-characteristic probe over d0 with rho0 fixed.
inline Probe characteristic_probe(double c, double nu, double k, double rho0, IntegratorConfig cfg = {}) {
    return [=](double d0) { return characteristic_outcome(c, nu, k, rho0, d0, cfg); };
}

/// Full-ensemble probe over a scenario family.
inline Probe ensemble_probe(ScenarioFamily family, std::size_t n_chars, IntegratorConfig cfg = {}) {
    return [family = std::move(family), n_chars, cfg](double th) {
        const auto run = run_ensemble(family(th), n_chars, cfg, false);
        if (run.outcome == RunOutcome::DiagnosticFailure)
            throw Error("sweep probe failed: " + run.failure);
        return ProbeOutcome{run.outcome == RunOutcome::Breakdown, run.t_end};
    };
}

} // namespace epct

#endif
