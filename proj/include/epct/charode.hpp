#ifndef EPCT_CHARODE_HPP
#define EPCT_CHARODE_HPP

// Ordinary differential equations along particle paths.
//
// Without alignment, each path carries (x, u, E, rho, d) with d = u_x:
//   x' = u,  u' = -nu u + k E,  E' = -c(x) u,
//   rho' = -rho d,  d' = -d^2 - nu d + k (rho - c(x)).
// With alignment the slope variable is G = u_x + nu + psi*rho:
//   rho' = -rho (G - nu - psi*rho),  G' = -G (G - nu - psi*rho) + k (rho - c(x)),
//   u' = -nu u + k E + sum_j psi(x - x_j)(u_j - u) m_j.
// The auxiliary system with parameter gamma:
//   eta' = -eta xi,  xi' = -xi^2 - nu xi + k eta - k gamma.

#include "integrator.hpp"
#include "phase.hpp"
#include "scenario.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epct {

/// Lagrangian state along one particle path. `x` is the unwrapped position;
/// c is evaluated at wrap_torus(x).
struct CharacteristicState {
    double alpha = 0.0;
    double x = 0.0;
    double u = 0.0;
    double E = 0.0;
    double rho = 0.0;
    /// d = u_x without alignment, G = u_x + nu + psi*rho with alignment.
    double slope = 0.0;
    double t = 0.0;

    double wrapped_x() const { return wrap_torus(x); }
};

/// Time derivatives of the five evolving components.
struct CharacteristicRate {
    double x = 0.0;
    double u = 0.0;
    double E = 0.0;
    double rho = 0.0;
    double slope = 0.0;
};

struct AuxState {
    double eta = 0.0;
    double xi = 0.0;
};

/// Flat layout of one path in an ensemble state vector.
inline constexpr std::size_t path_stride = 5;
enum PathSlot : std::size_t { kX = 0, kU = 1, kE = 2, kRho = 3, kSlope = 4 };

inline void pack(const CharacteristicState& s, std::span<double> out) {
    out[kX] = s.x;
    out[kU] = s.u;
    out[kE] = s.E;
    out[kRho] = s.rho;
    out[kSlope] = s.slope;
}

inline CharacteristicState unpack(std::span<const double> in, double alpha, double t) {
    return {alpha, in[kX], in[kU], in[kE], in[kRho], in[kSlope], t};
}

// ---------------------------------------------------------------------------
// Right-hand sides

inline CharacteristicRate rhs_no_alignment(const CharacteristicState& s, const Scenario& scn) {
    const double c = scn.background()(s.x);
    const double nu = scn.nu();
    const double k = scn.k();
    return {s.u, -nu * s.u + k * s.E, -c * s.u, -s.rho * s.slope, -s.slope * s.slope - nu * s.slope + k * (s.rho - c)};
}

inline AuxState rhs_aux(const AuxState& s, double gamma, double nu, double k) {
    return {-s.eta * s.xi, -s.xi * s.xi - nu * s.xi + k * s.eta - k * gamma};
}

/// Kernel sums at every path position:
///   conv[i] = sum_j psi(x_i - x_j) m_j,   mom[i] = sum_j psi(x_i - x_j) m_j u_j.
/// Raised-cosine and constant kernels are summed through the addition
/// formula in O(N); other kernels directly in O(N^2).
inline void kernel_sums(const Kernel& kernel, std::span<const double> x, std::span<const double> mass,
                        std::span<const double> u, std::span<double> conv, std::span<double> mom,
                        bool force_direct = false) {
    const std::size_t n = x.size();
    const auto cosine = kernel.cosine_coefficients();
    if (cosine && !force_direct) {
        const auto [a, b] = *cosine;
        double m_tot = 0.0, mc = 0.0, ms = 0.0, mu_tot = 0.0, muc = 0.0, mus = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double cj = std::cos(two_pi * x[j]);
            const double sj = std::sin(two_pi * x[j]);
            m_tot += mass[j];
            mc += mass[j] * cj;
            ms += mass[j] * sj;
            const double mu_j = mass[j] * u[j];
            mu_tot += mu_j;
            muc += mu_j * cj;
            mus += mu_j * sj;
        }
        for (std::size_t i = 0; i < n; ++i) {
            const double ci = std::cos(two_pi * x[i]);
            const double si = std::sin(two_pi * x[i]);
            conv[i] = a * m_tot + b * (ci * mc + si * ms);
            mom[i] = a * mu_tot + b * (ci * muc + si * mus);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        double cs = 0.0;
        double ms = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double w = kernel(wrap_torus(x[i] - x[j])) * mass[j];
            cs += w;
            ms += w * u[j];
        }
        conv[i] = cs;
        mom[i] = ms;
    }
}

inline void check_masses(std::span<const double> mass) {
    double total = 0.0;
    for (double m : mass) {
        if (m < 0.0)
            throw PreconditionError("Lagrangian masses must be nonnegative");
        total += m;
    }
    if (std::abs(total - 1.0) > normalization_tolerance)
        throw PreconditionError("Lagrangian masses must sum to 1 (sum = " + detail::sci(total) + ")");
}

/// Derivatives of every path in an alignment ensemble; the slope variable is G.
inline std::vector<CharacteristicRate> rhs_alignment(std::span<const CharacteristicState> ensemble,
                                                     std::span<const double> mass, const Scenario& scn) {
    if (!scn.has_kernel())
        throw PreconditionError("rhs_alignment requires an alignment kernel");
    if (mass.size() != ensemble.size())
        throw PreconditionError("one mass per path required");
    check_masses(mass);
    const std::size_t n = ensemble.size();
    std::vector<double> x(n), u(n), conv(n), mom(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = ensemble[i].x;
        u[i] = ensemble[i].u;
    }
    kernel_sums(*scn.kernel(), x, mass, u, conv, mom);
    std::vector<CharacteristicRate> out(n);
    const double nu = scn.nu();
    const double k = scn.k();
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = ensemble[i];
        const double c = scn.background()(s.x);
        const double ux = s.slope - nu - conv[i];
        out[i] = {s.u, -nu * s.u + k * s.E + (mom[i] - s.u * conv[i]), -c * s.u, -s.rho * ux,
                  -s.slope * ux + k * (s.rho - c)};
    }
    return out;
}

// ---------------------------------------------------------------------------
// Systems for the integrator

/// Independent paths without alignment (any number, packed with path_stride).
class NoAlignmentSystem {
  public:
    NoAlignmentSystem(const Scenario& scn, std::size_t paths) : scn_(scn), paths_(paths) {}

    std::size_t dimension() const { return paths_ * path_stride; }

    void derivative(double, std::span<const double> y, std::span<double> dy) const {
        const double nu = scn_.nu();
        const double k = scn_.k();
        const auto& bg = scn_.background();
        for (std::size_t p = 0; p < paths_; ++p) {
            const double* s = y.data() + p * path_stride;
            double* d = dy.data() + p * path_stride;
            const double c = bg(s[kX]);
            d[kX] = s[kU];
            d[kU] = -nu * s[kU] + k * s[kE];
            d[kE] = -c * s[kU];
            d[kRho] = -s[kRho] * s[kSlope];
            d[kSlope] = -s[kSlope] * s[kSlope] - nu * s[kSlope] + k * (s[kRho] - c);
        }
    }

    Watch watch(std::span<const double> y) const {
        Watch w;
        for (std::size_t p = 0; p < paths_; ++p) {
            w.min_slope = std::min(w.min_slope, y[p * path_stride + kSlope]);
            w.max_density = std::max(w.max_density, y[p * path_stride + kRho]);
        }
        return w;
    }

  private:
    const Scenario& scn_;
    std::size_t paths_;
};

/// One linear (w, s) path coupled to an ensemble member together with an
/// auxiliary (p, q) pair evolved with fixed (gamma, beta):
///   w' = k - k c(x_j) s,  s' = w - (nu + psi*rho(x_j)) s,
///   p' = k - k gamma q,   q' = p - beta q.
struct TrackedLinearPair {
    std::size_t path = 0;
    double gamma = 1.0;
    double beta = 0.0;
};
inline constexpr std::size_t tracked_stride = 4;
enum TrackedSlot : std::size_t { kW = 0, kS = 1, kP = 2, kQ = 3 };

/// Coupled alignment ensemble. Every stage evaluates the kernel sums on a
/// consistent snapshot of all positions and velocities.
class AlignmentSystem {
  public:
    AlignmentSystem(const Scenario& scn, std::vector<double> mass, std::vector<TrackedLinearPair> tracked = {},
                    bool force_direct = false)
        : scn_(scn), mass_(std::move(mass)), tracked_(std::move(tracked)), force_direct_(force_direct) {
        if (!scn_.has_kernel())
            throw PreconditionError("alignment system requires an alignment kernel");
        check_masses(mass_);
        for (const auto& tp : tracked_)
            if (tp.path >= mass_.size())
                throw PreconditionError("tracked pair refers to a missing path");
        const std::size_t n = mass_.size();
        x_.resize(n);
        u_.resize(n);
        conv_.resize(n);
        mom_.resize(n);
    }

    std::size_t paths() const { return mass_.size(); }
    std::size_t dimension() const { return paths() * path_stride + tracked_.size() * tracked_stride; }
    const std::vector<double>& masses() const { return mass_; }

    void derivative(double, std::span<const double> y, std::span<double> dy) const {
        const std::size_t n = paths();
        for (std::size_t i = 0; i < n; ++i) {
            x_[i] = y[i * path_stride + kX];
            u_[i] = y[i * path_stride + kU];
        }
        kernel_sums(*scn_.kernel(), x_, mass_, u_, conv_, mom_, force_direct_);
        const double nu = scn_.nu();
        const double k = scn_.k();
        const auto& bg = scn_.background();
        for (std::size_t i = 0; i < n; ++i) {
            const double* s = y.data() + i * path_stride;
            double* d = dy.data() + i * path_stride;
            const double c = bg(s[kX]);
            const double ux = s[kSlope] - nu - conv_[i];
            d[kX] = s[kU];
            d[kU] = -nu * s[kU] + k * s[kE] + (mom_[i] - s[kU] * conv_[i]);
            d[kE] = -c * s[kU];
            d[kRho] = -s[kRho] * ux;
            d[kSlope] = -s[kSlope] * ux + k * (s[kRho] - c);
        }
        const std::size_t base = n * path_stride;
        for (std::size_t m = 0; m < tracked_.size(); ++m) {
            const auto& tp = tracked_[m];
            const double* s = y.data() + base + m * tracked_stride;
            double* d = dy.data() + base + m * tracked_stride;
            const double c = bg(y[tp.path * path_stride + kX]);
            d[kW] = k - k * c * s[kS];
            d[kS] = s[kW] - (nu + conv_[tp.path]) * s[kS];
            d[kP] = k - k * tp.gamma * s[kQ];
            d[kQ] = s[kP] - tp.beta * s[kQ];
        }
    }

    Watch watch(std::span<const double> y) const {
        Watch w;
        for (std::size_t i = 0; i < paths(); ++i) {
            w.min_slope = std::min(w.min_slope, y[i * path_stride + kSlope]);
            w.max_density = std::max(w.max_density, y[i * path_stride + kRho]);
        }
        return w;
    }

    /// psi*rho at every path position for the given state.
    std::vector<double> convolution(std::span<const double> y) const {
        const std::size_t n = paths();
        std::vector<double> x(n), u(n), conv(n), mom(n);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = y[i * path_stride + kX];
            u[i] = y[i * path_stride + kU];
        }
        kernel_sums(*scn_.kernel(), x, mass_, u, conv, mom, force_direct_);
        return conv;
    }

  private:
    const Scenario& scn_;
    std::vector<double> mass_;
    std::vector<TrackedLinearPair> tracked_;
    bool force_direct_;
    mutable std::vector<double> x_, u_, conv_, mom_;
};

/// Auxiliary (eta, xi) system.
class AuxSystem {
  public:
    AuxSystem(double gamma, double nu, double k) : gamma_(gamma), nu_(nu), k_(k) {}
    std::size_t dimension() const { return 2; }
    void derivative(double, std::span<const double> y, std::span<double> dy) const {
        const auto r = rhs_aux({y[0], y[1]}, gamma_, nu_, k_);
        dy[0] = r.eta;
        dy[1] = r.xi;
    }
    Watch watch(std::span<const double> y) const { return {y[1], y[0]}; }

  private:
    double gamma_, nu_, k_;
};

/// One no-alignment path integrated alongside an auxiliary (eta, xi) pair.
class PathWithAuxSystem {
  public:
    PathWithAuxSystem(const Scenario& scn, double gamma) : path_(scn, 1), aux_(gamma, scn.nu(), scn.k()) {}
    std::size_t dimension() const { return path_stride + 2; }
    void derivative(double t, std::span<const double> y, std::span<double> dy) const {
        path_.derivative(t, y.first(path_stride), dy.first(path_stride));
        aux_.derivative(t, y.subspan(path_stride, 2), dy.subspan(path_stride, 2));
    }
    Watch watch(std::span<const double> y) const {
        const Watch a = path_.watch(y.first(path_stride));
        const Watch b = aux_.watch(y.subspan(path_stride, 2));
        return {std::min(a.min_slope, b.min_slope), std::max(a.max_density, b.max_density)};
    }

  private:
    NoAlignmentSystem path_;
    AuxSystem aux_;
};

/// Linear RS or PQ plane as an integrator system.
class LinearPlaneSystem {
  public:
    LinearPlaneSystem(Plane plane, AuxParams params) : plane_(plane), params_(params) {
        if (plane == Plane::WS)
            throw PreconditionError("the WS plane is driven by an ensemble; use AlignmentSystem");
    }
    std::size_t dimension() const { return 2; }
    void derivative(double, std::span<const double> y, std::span<double> dy) const {
        const auto v = plane_velocity(plane_, y[0], y[1], params_);
        dy[0] = v[0];
        dy[1] = v[1];
    }
    Watch watch(std::span<const double>) const { return {}; }

  private:
    Plane plane_;
    AuxParams params_;
};

// ---------------------------------------------------------------------------
// Seeding

struct EnsembleSeed {
    std::vector<CharacteristicState> states;
    std::vector<double> masses;
};

/// Paths at alpha_j = -1/2 + j/n with masses rho0(alpha_j)/n, E from the
/// initial field, and slope d0 = u0x (or G0 = u0x + nu + psi*rho0 with a kernel).
inline EnsembleSeed seed_ensemble(const Scenario& scn, std::size_t n) {
    if (n < 1)
        throw PreconditionError("ensemble needs at least one path");
    EnsembleSeed seed;
    seed.states.resize(n);
    seed.masses.resize(n);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double alpha = PeriodicProfile::grid_point(j, n);
        auto& s = seed.states[j];
        s.alpha = alpha;
        s.x = alpha;
        s.u = scn.u0()(alpha);
        s.E = initial_electric_field(scn, alpha);
        s.rho = scn.rho0()(alpha);
        s.slope = scn.u0x()(alpha);
        seed.masses[j] = s.rho / static_cast<double>(n);
        total += seed.masses[j];
    }
    if (std::abs(total - 1.0) > normalization_tolerance)
        throw InvalidScenario("Lagrangian mass check failed: sum rho0(alpha_j)/N_c = " + detail::sci(total) +
                              " (choose N_c compatible with the profile grid)");
    if (scn.has_kernel()) {
        std::vector<WeightedPoint> w(n);
        for (std::size_t j = 0; j < n; ++j)
            w[j] = {seed.states[j].x, seed.masses[j]};
        for (auto& s : seed.states)
            s.slope += scn.nu() + convolve(*scn.kernel(), w, s.x);
    }
    return seed;
}

inline CharacteristicState seed_characteristic(const Scenario& scn, double alpha) {
    CharacteristicState s;
    s.alpha = alpha;
    s.x = alpha;
    s.u = scn.u0()(alpha);
    s.E = initial_electric_field(scn, alpha);
    s.rho = scn.rho0()(alpha);
    s.slope = scn.u0x()(alpha);
    return s;
}

// ---------------------------------------------------------------------------
// Comparison harnesses

/// Which bound of the background (and of the kernel) the auxiliary system uses.
enum class ComparisonBranch {
    /// gamma = c1 (beta = nu + psi_M): the auxiliary solution stays on the unfavourable side.
    Lower,
    /// gamma = c2 (beta = nu + psi_m): the auxiliary solution stays on the favourable side.
    Upper
};

struct OrderingReport {
    bool held = true;
    std::optional<double> violation_time;
    /// Smallest ordering slack seen (negative means violated).
    double min_margin = std::numeric_limits<double>::infinity();
    /// Time monitoring ended and why.
    double end_time = 0.0;
    std::string end_reason;
};

inline constexpr double ordering_tolerance = 1e-9;

/// Integrates a path (rho, d) and the auxiliary (eta, xi) with a shared step
/// sequence and reports the first time the comparison ordering fails.
/// Lower: requires rho0 < eta0, d0 > xi0; checks rho < eta, d > xi.
/// Upper: requires rho0 > eta0, d0 < xi0; checks rho > eta, d < xi.
inline OrderingReport compare_nonlin_vs_aux(const Scenario& scn, const CharacteristicState& path0,
                                            const AuxState& aux0, ComparisonBranch branch, double horizon,
                                            IntegratorConfig cfg = {}) {
    const bool lower = branch == ComparisonBranch::Lower;
    const bool admissible = lower ? (path0.rho < aux0.eta && path0.slope > aux0.xi)
                                  : (path0.rho > aux0.eta && path0.slope < aux0.xi);
    if (!admissible)
        throw PreconditionError("comparison requires strict initial ordering for the chosen branch");
    const double gamma = lower ? scn.c1() : scn.c2();
    PathWithAuxSystem sys(scn, gamma);
    std::vector<double> y(sys.dimension());
    pack(path0, std::span(y).first(path_stride));
    y[path_stride] = aux0.eta;
    y[path_stride + 1] = aux0.xi;
    cfg.horizon = horizon;

    OrderingReport rep;
    auto obs = [&](const StepInfo& info, std::span<const double> s) {
        const double rho = s[kRho], d = s[kSlope], eta = s[path_stride], xi = s[path_stride + 1];
        const double margin = lower ? std::min(eta - rho, d - xi) : std::min(rho - eta, xi - d);
        rep.min_margin = std::min(rep.min_margin, margin);
        if (margin < -ordering_tolerance && rep.held) {
            rep.held = false;
            rep.violation_time = info.t;
        }
        return true;
    };
    const auto res = integrate(sys, std::move(y), cfg, obs);
    rep.end_time = res.t;
    switch (res.reason) {
    case Termination::HorizonReached:
        rep.end_reason = "held to horizon";
        break;
    case Termination::BlowupDetected: {
        const auto& s = res.state;
        const bool aux_first = s[path_stride + 1] < -cfg.slope_cap || s[path_stride] > cfg.density_cap;
        rep.end_reason = aux_first ? "auxiliary blow-up" : "path breakdown";
        break;
    }
    default:
        rep.end_reason = to_string(res.reason);
    }
    if (!rep.held)
        rep.end_reason = "violated";
    return rep;
}

/// Initial data for one comparison of (w, s) against (p, q).
struct LinearPairInitial {
    std::size_t path = 0;
    double w0 = 0.0;
    double s0 = 1.0;
    double p0 = 0.0;
    double q0 = 1.0;
};

/// Evolves every (w, s) pair driven by the alignment ensemble seeded from
/// `scn` with `n_paths` paths, alongside (p, q) with
///   Lower: gamma = c1, beta = nu + psi_M; requires s0 > q0, w0 > p0.
///   Upper: gamma = c2, beta = nu + psi_m; requires s0 < q0, w0 < p0.
/// Each pair is monitored until its s drops to zero.
inline std::vector<OrderingReport> compare_lin2_vs_auxlin2(const Scenario& scn,
                                                           std::span<const LinearPairInitial> pairs,
                                                           ComparisonBranch branch, double horizon,
                                                           std::size_t n_paths, IntegratorConfig cfg = {}) {
    if (!scn.has_kernel())
        throw PreconditionError("compare_lin2_vs_auxlin2 requires an alignment kernel");
    const bool lower = branch == ComparisonBranch::Lower;
    const double gamma = lower ? scn.c1() : scn.c2();
    const double beta = scn.nu() + (lower ? scn.kernel()->psi_max() : scn.kernel()->psi_min());
    for (const auto& pr : pairs) {
        const bool ok = lower ? (pr.s0 > pr.q0 && pr.w0 > pr.p0) : (pr.s0 < pr.q0 && pr.w0 < pr.p0);
        if (!ok)
            throw PreconditionError("comparison requires strict initial ordering for the chosen branch");
        if (pr.path >= n_paths)
            throw PreconditionError("comparison pair refers to a missing path");
    }
    auto seed = seed_ensemble(scn, n_paths);
    std::vector<TrackedLinearPair> tracked;
    for (const auto& pr : pairs)
        tracked.push_back({pr.path, gamma, beta});
    AlignmentSystem sys(scn, seed.masses, tracked);
    std::vector<double> y(sys.dimension());
    for (std::size_t i = 0; i < n_paths; ++i)
        pack(seed.states[i], std::span(y).subspan(i * path_stride, path_stride));
    const std::size_t base = n_paths * path_stride;
    for (std::size_t m = 0; m < pairs.size(); ++m) {
        double* s = y.data() + base + m * tracked_stride;
        s[kW] = pairs[m].w0;
        s[kS] = pairs[m].s0;
        s[kP] = pairs[m].p0;
        s[kQ] = pairs[m].q0;
    }
    cfg.horizon = horizon;

    std::vector<OrderingReport> reps(pairs.size());
    std::vector<bool> active(pairs.size(), true);
    auto obs = [&](const StepInfo& info, std::span<const double> st) {
        bool any = false;
        for (std::size_t m = 0; m < pairs.size(); ++m) {
            if (!active[m])
                continue;
            const double* s = st.data() + base + m * tracked_stride;
            if (s[kS] < 0.0) {
                active[m] = false;
                reps[m].end_time = info.t;
                reps[m].end_reason = "s reached zero";
                continue;
            }
            any = true;
            const double margin = lower ? std::min(s[kS] - s[kQ], s[kW] - s[kP])
                                        : std::min(s[kQ] - s[kS], s[kP] - s[kW]);
            auto& rep = reps[m];
            rep.min_margin = std::min(rep.min_margin, margin);
            if (margin < -ordering_tolerance && rep.held) {
                rep.held = false;
                rep.violation_time = info.t;
            }
        }
        return any;
    };
    const auto res = integrate(sys, std::move(y), cfg, obs);
    for (std::size_t m = 0; m < pairs.size(); ++m) {
        if (active[m]) {
            reps[m].end_time = res.t;
            reps[m].end_reason =
                res.reason == Termination::HorizonReached ? "held to horizon" : to_string(res.reason);
        }
        if (!reps[m].held)
            reps[m].end_reason = "violated";
    }
    return reps;
}

} // namespace epct

#endif
