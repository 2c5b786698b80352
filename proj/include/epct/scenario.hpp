#ifndef EPCT_SCENARIO_HPP
#define EPCT_SCENARIO_HPP

#include "errors.hpp"
#include "profile.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace epct {

inline constexpr double normalization_tolerance = 1e-10;

namespace detail {
inline std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}
} // namespace detail

/// Symmetric, nonnegative, 1-periodic, Lipschitz alignment kernel.
class Kernel {
  public:
    Kernel() = default;

    /// Validates the kernel on its grid. When no Lipschitz constant is
    /// declared the smallest grid-consistent one is used.
    explicit Kernel(PeriodicProfile profile, std::optional<double> lipschitz = std::nullopt)
        : profile_(std::move(profile)) {
        const std::size_t n = profile_.size();
        const auto s = profile_.samples();
        if (profile_.min() < 0.0)
            throw InvalidScenario("kernel must be nonnegative: min psi = " + detail::sci(profile_.min()));
        const double scale = std::max(1.0, profile_.max());
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t mirror = (n - i) % n;
            if (std::abs(s[i] - s[mirror]) > 1e-12 * scale)
                throw InvalidScenario("kernel not symmetric at x = " + detail::sci(profile_.grid_point(i)));
        }
        // Adjacent slopes bound all pairwise ones along the shorter arc.
        double slope = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            slope = std::max(slope, std::abs(s[(i + 1) % n] - s[i]) / profile_.spacing());
        if (lipschitz) {
            if (*lipschitz < 0.0)
                throw InvalidScenario("kernel Lipschitz constant must be >= 0");
            if (slope > *lipschitz * (1.0 + 1e-12))
                throw InvalidScenario("kernel violates declared Lipschitz constant K = " +
                                      detail::sci(*lipschitz) + " (grid slope " + detail::sci(slope) + ")");
            lipschitz_ = *lipschitz;
        } else {
            lipschitz_ = slope;
        }
    }

    double operator()(double x) const { return profile_(x); }
    const PeriodicProfile& profile() const { return profile_; }
    double psi_min() const { return profile_.min(); }
    double psi_max() const { return profile_.max(); }
    double lipschitz() const { return lipschitz_; }

    /// psi(x) = a + b cos(2 pi x) in closed form (constants included), which
    /// allows the convolution to be summed in O(N).
    std::optional<std::pair<double, double>> cosine_coefficients() const {
        const auto form = profile_.closed_form();
        if (!form)
            return std::nullopt;
        if (form->kind == ClosedForm::Kind::Constant)
            return std::pair{form->a(), 0.0};
        if (form->kind == ClosedForm::Kind::RaisedCosine)
            return std::pair{form->a(), form->b()};
        return std::nullopt;
    }

  private:
    PeriodicProfile profile_;
    double lipschitz_ = 0.0;
};

/// A Lagrangian point mass at position x.
struct WeightedPoint {
    double x;
    double mass;
};

/// (psi * rho)(x) = sum_j psi(x - x_j) m_j with the argument wrapped to the torus.
inline double convolve(const Kernel& kernel, std::span<const WeightedPoint> weights, double x) {
    double sum = 0.0;
    for (const auto& w : weights) {
        if (w.mass < 0.0)
            throw PreconditionError("convolution weights must be nonnegative");
        sum += kernel(wrap_torus(x - w.x)) * w.mass;
    }
    return sum;
}

struct ScenarioOptions {
    bool normalize_rho0 = false;
};

/// Problem instance for the damped pressureless Euler-Poisson system on the
/// torus, with optional alignment. Immutable after construction.
class Scenario {
  public:
    using Options = ScenarioOptions;

    Scenario(double k, double nu, PeriodicProfile background, PeriodicProfile rho0, PeriodicProfile u0,
             std::optional<PeriodicProfile> u0x = std::nullopt, std::optional<Kernel> kernel = std::nullopt,
             Options options = {})
        : k_(k), nu_(nu), background_(std::move(background)), rho0_(std::move(rho0)), u0_(std::move(u0)),
          kernel_(std::move(kernel)) {
        if (!(k_ < 0.0))
            throw InvalidScenario("attractive forcing required (k<0), got k = " + detail::sci(k_));
        if (!(nu_ >= 0.0))
            throw InvalidScenario("damping must satisfy nu >= 0, got nu = " + detail::sci(nu_));
        const std::size_t n = background_.size();
        if (rho0_.size() != n || u0_.size() != n || (u0x && u0x->size() != n) ||
            (kernel_ && kernel_->profile().size() != n))
            throw InvalidScenario("all profiles must share the scenario grid size N = " + std::to_string(n));
        if (!(background_.min() > 0.0))
            throw InvalidScenario("background must be positive: min c = " + detail::sci(background_.min()));
        if (rho0_.min() < 0.0)
            throw InvalidScenario("density must be nonnegative: min rho0 = " + detail::sci(rho0_.min()));
        if (options.normalize_rho0) {
            const double mass = torus_quadrature(rho0_);
            if (!(mass > 0.0))
                throw InvalidScenario("cannot normalize rho0 with zero mass");
            rho0_ = rho0_.scaled(1.0 / mass);
        }
        const double c_mass = torus_quadrature(background_);
        const double rho_mass = torus_quadrature(rho0_);
        if (std::abs(rho_mass - c_mass) > normalization_tolerance)
            throw InvalidScenario("neutrality violated: ∫(ρ₀−c) = " + detail::sci(rho_mass - c_mass));
        if (std::abs(c_mass - 1.0) > normalization_tolerance)
            throw InvalidScenario("background not normalized: ∫c = " + detail::sci(c_mass));
        if (std::abs(rho_mass - 1.0) > normalization_tolerance)
            throw InvalidScenario("mass not normalized: ∫ρ₀ = " + detail::sci(rho_mass));
        u0x_ = u0x ? std::move(*u0x) : u0_.derivative();
    }

    double k() const { return k_; }
    double nu() const { return nu_; }
    std::size_t grid_size() const { return background_.size(); }
    const PeriodicProfile& background() const { return background_; }
    const PeriodicProfile& rho0() const { return rho0_; }
    const PeriodicProfile& u0() const { return u0_; }
    const PeriodicProfile& u0x() const { return u0x_; }
    const std::optional<Kernel>& kernel() const { return kernel_; }
    bool has_kernel() const { return kernel_.has_value(); }
    double c1() const { return background_.min(); }
    double c2() const { return background_.max(); }
    bool constant_background(double tol = 1e-12) const { return c2() - c1() < tol; }

    /// Lagrangian point masses rho0(x_i) * dx on the scenario grid.
    std::vector<WeightedPoint> initial_weights() const {
        std::vector<WeightedPoint> w(grid_size());
        for (std::size_t i = 0; i < w.size(); ++i)
            w[i] = {rho0_.grid_point(i), rho0_.sample(i) * rho0_.spacing()};
        return w;
    }

  private:
    double k_;
    double nu_;
    PeriodicProfile background_;
    PeriodicProfile rho0_;
    PeriodicProfile u0_;
    PeriodicProfile u0x_;
    std::optional<Kernel> kernel_;
};

/// E(0, alpha) = integral from -1/2 to alpha of (rho0 - c); vanishes at both
/// ends of the torus under neutrality.
inline double initial_electric_field(const Scenario& scn, double alpha) {
    return scn.rho0().integral_to(alpha) - scn.background().integral_to(alpha);
}

} // namespace epct

#endif
