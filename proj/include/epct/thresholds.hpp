#ifndef EPCT_THRESHOLDS_HPP
#define EPCT_THRESHOLDS_HPP

// Grid-pointwise classification of initial data against the global-existence
// and finite-time-breakdown thresholds.

#include "roots.hpp"
#include "scenario.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace epct {

enum class Verdict { Subcritical, Supercritical, Indeterminate };

inline const char* to_string(Verdict v) {
    switch (v) {
    case Verdict::Subcritical:
        return "subcritical";
    case Verdict::Supercritical:
        return "supercritical";
    case Verdict::Indeterminate:
        return "indeterminate";
    }
    return "unknown";
}

struct ThresholdVerdict {
    Verdict verdict = Verdict::Indeterminate;
    /// Which classifier produced the verdict.
    std::string rule;
    std::map<std::string, double> constants;
    /// Grid point where the breakdown inequality holds with the largest excess.
    std::optional<double> witness;
    /// min over the grid of (u0x - global-existence line); > 0 iff the strict
    /// hypothesis holds everywhere.
    double margin = 0.0;
    /// max over the grid of (breakdown line - u0x); > 0 iff a witness exists.
    double breakdown_excess = 0.0;
    /// max over the grid of (global line - breakdown line): the uncovered gap.
    double gap = 0.0;
    std::size_t grid_size = 0;
};

namespace detail {

// Evaluates both inequalities at every grid point. `global_line(i)` is the
// right-hand side of the global-existence condition, `breakdown_line(i)` of
// the breakdown one.
inline ThresholdVerdict scan_grid(const Scenario& scn, const std::function<double(std::size_t)>& global_line,
                                  const std::function<double(std::size_t)>& breakdown_line, bool strict_global) {
    ThresholdVerdict v;
    v.grid_size = scn.grid_size();
    v.margin = std::numeric_limits<double>::infinity();
    v.breakdown_excess = -std::numeric_limits<double>::infinity();
    v.gap = -std::numeric_limits<double>::infinity();
    std::size_t best = 0;
    for (std::size_t i = 0; i < scn.grid_size(); ++i) {
        const double d0 = scn.u0x().sample(i);
        const double g = global_line(i);
        const double b = breakdown_line(i);
        v.margin = std::min(v.margin, d0 - g);
        if (b - d0 > v.breakdown_excess) {
            v.breakdown_excess = b - d0;
            best = i;
        }
        v.gap = std::max(v.gap, g - b);
    }
    const bool global_holds = strict_global ? v.margin > 0.0 : v.margin >= 0.0;
    if (global_holds) {
        v.verdict = Verdict::Subcritical;
    } else if (v.breakdown_excess > 0.0) {
        v.verdict = Verdict::Supercritical;
        v.witness = scn.u0x().grid_point(best);
    } else {
        v.verdict = Verdict::Indeterminate;
    }
    return v;
}

inline std::vector<double> grid_convolution(const Scenario& scn) {
    const auto weights = scn.initial_weights();
    std::vector<double> out(scn.grid_size());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = convolve(*scn.kernel(), weights, scn.rho0().grid_point(i));
    return out;
}

} // namespace detail

/// Variable background without alignment: strict global-existence line with
/// lambda_1 = Omega(c1, nu), breakdown line with Omega(c2, nu).
inline ThresholdVerdict classify_no_alignment(const Scenario& scn) {
    const double k = scn.k();
    const double nu = scn.nu();
    const double c1 = scn.c1();
    const double c2 = scn.c2();
    const double lambda1 = omega(c1, nu, k);
    const double lambda2 = omega(c2, nu, k);
    const auto& rho = scn.rho0();
    auto v = detail::scan_grid(
        scn, [&](std::size_t i) { return lambda1 / c1 * (rho.sample(i) - c1); },
        [&](std::size_t i) { return lambda2 / c2 * (rho.sample(i) - c2); }, true);
    v.rule = "no_alignment";
    v.constants = {{"c1", c1},
                   {"c2", c2},
                   {"lambda_1", lambda1},
                   {"lambda_2", lambda2},
                   {"theta_c2_nu", theta(c2, nu, k)}};
    return v;
}

/// Constant background: the sharp, non-strict condition
/// u0x >= (Omega(c, nu) / c)(rho0 - c). Never indeterminate.
inline ThresholdVerdict classify_constant_background(const Scenario& scn) {
    if (!scn.constant_background())
        throw PreconditionError("classify_constant_background requires a constant background (max c - min c = " +
                                detail::sci(scn.c2() - scn.c1()) + ")");
    const double c = scn.c1();
    const double lambda = omega(c, scn.nu(), scn.k());
    const auto& rho = scn.rho0();
    auto line = [&](std::size_t i) { return lambda / c * (rho.sample(i) - c); };
    auto v = detail::scan_grid(scn, line, line, false);
    if (v.verdict == Verdict::Indeterminate) {
        // Equality is global, anything below it breaks down.
        v.verdict = Verdict::Supercritical;
    }
    v.rule = "constant_background";
    v.constants = {{"c1", c},
                   {"c2", scn.c2()},
                   {"lambda_1", lambda},
                   {"lambda_2", omega(scn.c2(), scn.nu(), scn.k())},
                   {"theta_c2_nu", theta(scn.c2(), scn.nu(), scn.k())}};
    return v;
}

/// With alignment kernel psi:
///   global     u0x > lambda_M rho0 / c1 - mu_M - nu - psi*rho0  everywhere
///   breakdown  u0x < lambda_m rho0 / c2 - mu_m - nu - psi*rho0  somewhere
/// lambda_M, mu_M = Omega, Theta(c1, nu + psi_M); lambda_m, mu_m at (c2, nu + psi_m).
inline ThresholdVerdict classify_alignment(const Scenario& scn) {
    if (!scn.has_kernel())
        throw PreconditionError("classify_alignment requires an alignment kernel");
    const double k = scn.k();
    const double nu = scn.nu();
    const double c1 = scn.c1();
    const double c2 = scn.c2();
    const double psi_M = scn.kernel()->psi_max();
    const double psi_m = scn.kernel()->psi_min();
    const double lambda_M = omega(c1, nu + psi_M, k);
    const double mu_M = theta(c1, nu + psi_M, k);
    const double lambda_m = omega(c2, nu + psi_m, k);
    const double mu_m = theta(c2, nu + psi_m, k);
    const auto conv = detail::grid_convolution(scn);
    const auto& rho = scn.rho0();
    auto v = detail::scan_grid(
        scn, [&](std::size_t i) { return lambda_M * rho.sample(i) / c1 - mu_M - nu - conv[i]; },
        [&](std::size_t i) { return lambda_m * rho.sample(i) / c2 - mu_m - nu - conv[i]; }, true);
    v.rule = "alignment";
    v.constants = {{"c1", c1},
                   {"c2", c2},
                   {"psi_min", psi_m},
                   {"psi_max", psi_M},
                   {"lambda_1", omega(c1, nu, k)},
                   {"lambda_2", omega(c2, nu, k)},
                   {"lambda_M", lambda_M},
                   {"mu_M", mu_M},
                   {"lambda_m", lambda_m},
                   {"mu_m", mu_m},
                   {"theta_c2_nu", theta(c2, nu, k)},
                   {"theta_c2_nu_psiM", theta(c2, nu + psi_M, k)}};
    return v;
}

/// Constant kernel psi: global iff u0x > (lambda_1 / c1)(rho0 - c1) with
/// lambda_1 = Omega(c1, nu + psi); breakdown if u0x < (Omega(c2, nu + psi) / c2)(rho0 - c2)
/// somewhere.
inline ThresholdVerdict classify_constant_kernel(const Scenario& scn) {
    if (!scn.has_kernel())
        throw PreconditionError("classify_constant_kernel requires an alignment kernel");
    const auto& kern = *scn.kernel();
    if (kern.psi_max() - kern.psi_min() > 1e-12)
        throw PreconditionError("classify_constant_kernel requires a constant kernel");
    const double psi = kern.psi_max();
    const double k = scn.k();
    const double c1 = scn.c1();
    const double c2 = scn.c2();
    const double lambda1 = omega(c1, scn.nu() + psi, k);
    const double lambda2 = omega(c2, scn.nu() + psi, k);
    const auto& rho = scn.rho0();
    auto v = detail::scan_grid(
        scn, [&](std::size_t i) { return lambda1 / c1 * (rho.sample(i) - c1); },
        [&](std::size_t i) { return lambda2 / c2 * (rho.sample(i) - c2); }, true);
    v.rule = "constant_kernel";
    v.constants = {{"c1", c1},          {"c2", c2},
                   {"psi_min", psi},    {"psi_max", psi},
                   {"lambda_1", lambda1}, {"lambda_2", lambda2},
                   {"theta_c2_nu_psiM", theta(c2, scn.nu() + psi, k)}};
    return v;
}

/// Picks the sharpest applicable classifier: alignment when a kernel is
/// present, the iff-condition for constant background, else the
/// variable-background pair.
inline ThresholdVerdict classify(const Scenario& scn) {
    if (scn.has_kernel())
        return classify_alignment(scn);
    if (scn.constant_background())
        return classify_constant_background(scn);
    return classify_no_alignment(scn);
}

} // namespace epct

#endif
