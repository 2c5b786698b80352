#ifndef EPCT_PHASE_HPP
#define EPCT_PHASE_HPP

// Phase-plane analytics for the auxiliary systems.
//
// Scalar Riccati case (eta = 0):   xi' = -(xi + lambda)(xi - mu)
// RS plane  (r = xi/eta, s = 1/eta):   r' = -beta r + k - k gamma s,  s' = r
//   saddle (0, 1/gamma), separatrix  gamma r = lambda (1 - gamma s)
// PQ plane:   p' = k - k gamma q,  q' = p - beta q
//   saddle (beta/gamma, 1/gamma), separatrix  p = lambda/gamma - mu q
// In both planes the eigenvalues are -lambda and mu with lambda = Omega(gamma, beta),
// mu = Theta(gamma, beta).

#include "errors.hpp"
#include "roots.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <vector>

namespace epct {

struct AuxParams {
    double gamma = 1.0;
    double beta = 0.0;
    double k = -1.0;
    RootPair roots;

    static AuxParams make(double gamma, double beta, double k) {
        return {gamma, beta, k, RootPair::make(gamma, beta, k)};
    }

    double lambda() const { return roots.lambda; }
    double mu() const { return roots.mu; }
};

enum class Plane { RS, WS, PQ };

struct PhaseState {
    Plane plane = Plane::RS;
    std::array<double, 2> coords{};
    double t = 0.0;

    double first() const { return coords[0]; }
    double second() const { return coords[1]; }
};

/// Coefficients of the decaying (e^{-lambda t}) and growing (e^{mu t}) modes.
struct LinearModeCoefficients {
    double A = 0.0;
    double B = 0.0;
};

/// Inputs closer than this to a separatrix are rejected by the t_c bounds.
inline constexpr double separatrix_guard = 1e-12;

// ---------------------------------------------------------------------------
// Riccati

struct RiccatiResult {
    bool global = true;
    /// Envelope -lambda <= xi(t) <= max(xi0, mu) when global.
    double lower = 0.0;
    double upper = 0.0;
    /// Blow-up time when not global.
    double blowup_time = std::numeric_limits<double>::infinity();
    /// (1/(mu+lambda)) log|(xi0 + lambda)/(xi0 - mu)|, the printed form of
    /// the blow-up time, kept for comparison. It is the negative of blowup_time.
    double printed_formula = std::numeric_limits<double>::quiet_NaN();
};

inline RiccatiResult riccati_blowup(double xi0, const AuxParams& params) {
    const double lam = params.lambda();
    const double mu = params.mu();
    RiccatiResult out;
    if (xi0 >= -lam) {
        out.global = true;
        out.lower = -lam;
        out.upper = std::max(xi0, mu);
        return out;
    }
    out.global = false;
    const double sum = lam + mu;
    if (sum == 0.0) {
        // gamma = beta = 0: xi' = -xi^2
        out.blowup_time = -1.0 / xi0;
        return out;
    }
    // (xi - mu)/(xi + lambda) = R0 e^{-(lambda+mu) t}, and xi -> -inf as the ratio -> 1.
    out.blowup_time = std::log((xi0 - mu) / (xi0 + lam)) / sum;
    out.printed_formula = std::log(std::abs((xi0 + lam) / (xi0 - mu))) / sum;
    return out;
}

/// Closed-form Riccati trajectory xi(t) (valid before any blow-up).
inline double riccati_solution(double xi0, const AuxParams& params, double t) {
    const double lam = params.lambda();
    const double mu = params.mu();
    const double sum = lam + mu;
    if (sum == 0.0)
        return xi0 / (1.0 + xi0 * t);
    if (xi0 == -lam)
        return -lam;
    const double r = (xi0 - mu) / (xi0 + lam) * std::exp(-sum * t);
    return (mu + lam * r) / (1.0 - r);
}

// ---------------------------------------------------------------------------
// RS plane

namespace detail {
inline void require_gamma(const AuxParams& p) {
    if (!(p.gamma > 0.0))
        throw PreconditionError("linear auxiliary systems need gamma > 0 (no critical point at 1/gamma)");
}
} // namespace detail

inline std::array<double, 2> rs_velocity(double r, double s, const AuxParams& p) {
    return {-p.beta * r + p.k - p.k * p.gamma * s, r};
}

inline LinearModeCoefficients rs_modes(double r0, double s0, const AuxParams& p) {
    detail::require_gamma(p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double ds = s0 - 1.0 / p.gamma;
    return {(mu * ds - r0) / (lam + mu), (r0 + lam * ds) / (lam + mu)};
}

inline PhaseState solve_linear_rs(double r0, double s0, const AuxParams& p, double t) {
    if (t < 0.0)
        throw PreconditionError("solve_linear_rs requires t >= 0");
    const auto m = rs_modes(r0, s0, p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double decay = m.A * std::exp(-lam * t);
    const double grow = m.B * std::exp(mu * t);
    return {Plane::RS, {-lam * decay + mu * grow, 1.0 / p.gamma + decay + grow}, t};
}

/// Signed distance-like quantity s0 - 1/gamma + r0/lambda; negative iff the
/// state lies below the separatrix.
inline double rs_separatrix_offset(double r, double s, const AuxParams& p) {
    return s - 1.0 / p.gamma + r / p.lambda();
}

inline bool region_membership_rs(double r, double s, const AuxParams& p) {
    return p.gamma * r >= p.lambda() * (1.0 - p.gamma * s) && s > 0.0;
}

inline double tc_bound_rs(double r0, double s0, const AuxParams& p) {
    detail::require_gamma(p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double offset = rs_separatrix_offset(r0, s0, p);
    if (!(s0 > 0.0) || !(offset < -separatrix_guard))
        throw PreconditionError("tc_bound_rs requires s0 > 0 and a state strictly below the separatrix");
    const double num = s0 + 2.0 / p.gamma + std::abs(r0) / mu;
    return std::log((lam + mu) / lam * num / std::abs(offset)) / mu;
}

// ---------------------------------------------------------------------------
// PQ plane

inline std::array<double, 2> pq_velocity(double pv, double q, const AuxParams& p) {
    return {p.k - p.k * p.gamma * q, pv - p.beta * q};
}

inline LinearModeCoefficients pq_modes(double p0, double q0, const AuxParams& p) {
    detail::require_gamma(p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double dp = p0 - p.beta / p.gamma;
    const double dq = q0 - 1.0 / p.gamma;
    const double B = (dq + dp / mu) / (lam + mu);
    const double A = B + dp / (p.k * p.gamma);
    return {A, B};
}

inline PhaseState solve_linear_pq(double p0, double q0, const AuxParams& p, double t) {
    if (t < 0.0)
        throw PreconditionError("solve_linear_pq requires t >= 0");
    const auto m = pq_modes(p0, q0, p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double kg = p.k * p.gamma;
    const double decay = m.A * std::exp(-lam * t);
    const double grow = m.B * std::exp(mu * t);
    return {Plane::PQ, {p.beta / p.gamma + kg * decay - kg * grow, 1.0 / p.gamma + lam * decay + mu * grow}, t};
}

/// p + mu q - lambda/gamma; negative iff below the separatrix.
inline double pq_separatrix_offset(double pv, double q, const AuxParams& p) {
    return pv + p.mu() * q - p.lambda() / p.gamma;
}

inline bool region_membership_pq(double pv, double q, const AuxParams& p) {
    return pv >= p.lambda() / p.gamma - p.mu() * q && q > 0.0;
}

inline double tc_bound_pq(double p0, double q0, const AuxParams& p) {
    detail::require_gamma(p);
    const double lam = p.lambda();
    const double mu = p.mu();
    const double offset = pq_separatrix_offset(p0, q0, p);
    if (!(q0 > 0.0) || !(offset < -separatrix_guard))
        throw PreconditionError("tc_bound_pq requires q0 > 0 and a state strictly below the separatrix");
    const double num = (lam + mu) * (q0 + 1.0 / p.gamma) + std::abs(p0);
    return std::log(num / std::abs(offset)) / mu;
}

// ---------------------------------------------------------------------------
// Zero crossings of the second coordinate along the closed-form flow.

namespace detail {
// f(t) = c + A e^{-lam t} + B e^{mu t} with B < 0 is unimodal, so the first
// root after a positive start is unique.
inline double first_root(double c, double A, double lam, double B, double mu) {
    auto f = [&](double t) { return c + A * std::exp(-lam * t) + B * std::exp(mu * t); };
    if (!(B < 0.0) || !(f(0.0) > 0.0))
        return std::numeric_limits<double>::infinity();
    double hi = 1.0;
    while (f(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e6)
            return std::numeric_limits<double>::infinity();
    }
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}
} // namespace detail

/// First time s(t) = 0 along the RS flow; infinity if it never happens.
inline double crossing_time_rs(double r0, double s0, const AuxParams& p) {
    const auto m = rs_modes(r0, s0, p);
    return detail::first_root(1.0 / p.gamma, m.A, p.lambda(), m.B, p.mu());
}

/// First time q(t) = 0 along the PQ flow; infinity if it never happens.
inline double crossing_time_pq(double p0, double q0, const AuxParams& p) {
    const auto m = pq_modes(p0, q0, p);
    return detail::first_root(1.0 / p.gamma, p.lambda() * m.A, p.lambda(), p.mu() * m.B, p.mu());
}

// ---------------------------------------------------------------------------
// Direction fields

struct GridSpec {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t nx = 21;
    double y_min = 0.0;
    double y_max = 2.0;
    std::size_t ny = 21;
};

struct FieldSample {
    double x;
    double y;
    double vx;
    double vy;
};

struct DirectionField {
    Plane plane = Plane::RS;
    std::vector<FieldSample> samples;
    /// Separatrix polyline through the saddle, spanning the grid's y range.
    std::vector<std::array<double, 2>> separatrix;
    std::array<double, 2> critical_point{};
    /// Unit tangent of the separatrix (the stable eigenvector).
    std::array<double, 2> separatrix_direction{};
};

inline std::array<double, 2> plane_velocity(Plane plane, double x, double y, const AuxParams& p) {
    return plane == Plane::PQ ? pq_velocity(x, y, p) : rs_velocity(x, y, p);
}

inline DirectionField direction_field(Plane plane, const AuxParams& p, const GridSpec& grid,
                                      std::size_t separatrix_points = 101) {
    if (plane == Plane::WS)
        throw PreconditionError("direction fields are defined for the RS and PQ planes");
    detail::require_gamma(p);
    if (grid.nx < 2 || grid.ny < 2 || separatrix_points < 2)
        throw PreconditionError("direction field grid needs at least 2 nodes per axis");
    DirectionField out;
    out.plane = plane;
    const double lam = p.lambda();
    const double mu = p.mu();
    // separatrix x = x0 - slope * y
    double x_at_zero = 0.0;
    double slope = 0.0;
    if (plane == Plane::RS) {
        out.critical_point = {0.0, 1.0 / p.gamma};
        x_at_zero = lam / p.gamma;
        slope = lam;
    } else {
        out.critical_point = {p.beta / p.gamma, 1.0 / p.gamma};
        x_at_zero = lam / p.gamma;
        slope = mu;
    }
    const double norm = std::hypot(slope, 1.0);
    out.separatrix_direction = {-slope / norm, 1.0 / norm};

    out.samples.reserve(grid.nx * grid.ny);
    for (std::size_t j = 0; j < grid.ny; ++j) {
        const double y = grid.y_min + (grid.y_max - grid.y_min) * static_cast<double>(j) / (grid.ny - 1);
        for (std::size_t i = 0; i < grid.nx; ++i) {
            const double x = grid.x_min + (grid.x_max - grid.x_min) * static_cast<double>(i) / (grid.nx - 1);
            const auto v = plane_velocity(plane, x, y, p);
            out.samples.push_back({x, y, v[0], v[1]});
        }
    }
    for (std::size_t j = 0; j < separatrix_points; ++j) {
        const double y =
            grid.y_min + (grid.y_max - grid.y_min) * static_cast<double>(j) / (separatrix_points - 1);
        out.separatrix.push_back({x_at_zero - slope * y, y});
    }
    return out;
}

} // namespace epct

#endif
