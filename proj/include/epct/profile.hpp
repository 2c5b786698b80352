#ifndef EPCT_PROFILE_HPP
#define EPCT_PROFILE_HPP

// Periodic scalar functions on the unit torus T = [-1/2, 1/2).

#include "errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace epct {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Wraps x into [-1/2, 1/2).
inline double wrap_torus(double x) {
    double w = x - std::floor(x + 0.5);
    // floor rounding can land exactly on +1/2 for tiny negative inputs
    if (w >= 0.5)
        w -= 1.0;
    return w;
}

/// Geodesic distance on the torus.
inline double torus_distance(double a, double b) { return std::abs(wrap_torus(a - b)); }

/// Closed-form profile families.
///   Constant      a
///   AffineSine    a + b sin(2 pi x + phi)      params {a, b, phi}
///   RaisedCosine  a + b cos(2 pi x)            params {a, b}
struct ClosedForm {
    enum class Kind { Constant, AffineSine, RaisedCosine };

    Kind kind = Kind::Constant;
    std::array<double, 3> params{};

    static ClosedForm constant(double a) { return {Kind::Constant, {a, 0.0, 0.0}}; }
    static ClosedForm affine_sine(double a, double b, double phi = 0.0) {
        return {Kind::AffineSine, {a, b, phi}};
    }
    static ClosedForm raised_cosine(double a, double b) { return {Kind::RaisedCosine, {a, b, 0.0}}; }

    double a() const { return params[0]; }
    double b() const { return kind == Kind::Constant ? 0.0 : params[1]; }
    double phase() const { return kind == Kind::AffineSine ? params[2] : 0.0; }

    // Everything reduces to a + b sin(2 pi x + phase), with cos = sin(. + pi/2).
    double sine_phase() const {
        return kind == Kind::RaisedCosine ? std::numbers::pi / 2.0 : phase();
    }

    double value(double x) const {
        if (kind == Kind::Constant)
            return a();
        if (kind == Kind::RaisedCosine)
            return a() + b() * std::cos(two_pi * x);
        return a() + b() * std::sin(two_pi * x + phase());
    }

    double derivative(double x) const {
        if (kind == Kind::Constant)
            return 0.0;
        return two_pi * b() * std::cos(two_pi * x + sine_phase());
    }

    /// Exact integral from -1/2 to x, for x in [-1/2, 1/2].
    double integral_from_left(double x) const {
        double result = a() * (x + 0.5);
        if (kind != Kind::Constant) {
            const double ph = sine_phase();
            result -= b() / two_pi * (std::cos(two_pi * x + ph) - std::cos(-std::numbers::pi + ph));
        }
        return result;
    }

    ClosedForm scaled(double factor) const {
        ClosedForm out = *this;
        out.params[0] *= factor;
        if (kind != Kind::Constant)
            out.params[1] *= factor;
        return out;
    }

    std::string_view name() const {
        switch (kind) {
        case Kind::Constant:
            return "constant";
        case Kind::AffineSine:
            return "affine_sine";
        case Kind::RaisedCosine:
            return "raised_cosine";
        }
        return "unknown";
    }
};

/// Samples on the uniform grid x_i = -1/2 + i/N, with an optional closed form
/// used for exact evaluation. Off-grid queries on sampled-only profiles use
/// periodic linear interpolation.
class PeriodicProfile {
  public:
    PeriodicProfile() = default;

    static PeriodicProfile from_closed_form(const ClosedForm& form, std::size_t n) {
        check_size(n);
        PeriodicProfile p;
        p.form_ = form;
        p.samples_.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            p.samples_[i] = form.value(grid_point(i, n));
        p.update_extrema();
        return p;
    }

    static PeriodicProfile from_samples(std::vector<double> samples) {
        check_size(samples.size());
        PeriodicProfile p;
        p.samples_ = std::move(samples);
        p.update_extrema();
        return p;
    }

    /// Resamples scattered (x, value) points onto an n-point grid by periodic
    /// linear interpolation. Points may be given in any order.
    static PeriodicProfile from_points(std::span<const double> xs, std::span<const double> values,
                                       std::size_t n) {
        if (xs.size() != values.size() || xs.empty())
            throw ConfigError("tabulated profile needs matching, non-empty x and value columns");
        std::vector<std::pair<double, double>> pts;
        pts.reserve(xs.size());
        for (std::size_t i = 0; i < xs.size(); ++i)
            pts.emplace_back(wrap_torus(xs[i]), values[i]);
        std::sort(pts.begin(), pts.end());
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i].first - pts[i - 1].first < 1e-12)
                throw ConfigError("tabulated profile has duplicate x = " + std::to_string(pts[i].first));

        std::vector<double> samples(n);
        const std::size_t m = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const double x = grid_point(i, n);
            // first point strictly greater than x
            auto it = std::upper_bound(pts.begin(), pts.end(), x,
                                       [](double v, const auto& p) { return v < p.first; });
            const std::size_t hi = static_cast<std::size_t>(it - pts.begin()) % m;
            const std::size_t lo = (hi + m - 1) % m;
            double x_lo = pts[lo].first;
            double x_hi = pts[hi].first;
            if (x_lo > x)
                x_lo -= 1.0;
            if (x_hi <= x)
                x_hi += 1.0;
            if (m == 1 || x_hi == x_lo) {
                samples[i] = pts[lo].second;
                continue;
            }
            const double w = (x - x_lo) / (x_hi - x_lo);
            samples[i] = (1.0 - w) * pts[lo].second + w * pts[hi].second;
        }
        return from_samples(std::move(samples));
    }

    static double grid_point(std::size_t i, std::size_t n) {
        return -0.5 + static_cast<double>(i) / static_cast<double>(n);
    }

    std::size_t size() const { return samples_.size(); }
    double spacing() const { return 1.0 / static_cast<double>(samples_.size()); }
    double grid_point(std::size_t i) const { return grid_point(i, size()); }
    std::span<const double> samples() const { return samples_; }
    double sample(std::size_t i) const { return samples_[i]; }
    /// The closed form this profile evaluates, if any (not set for derivatives).
    std::optional<ClosedForm> closed_form() const {
        return is_derivative_ ? std::nullopt : form_;
    }
    bool has_exact_evaluation() const { return form_.has_value(); }
    double min() const { return min_; }
    double max() const { return max_; }

    double operator()(double x) const {
        const double w = wrap_torus(x);
        if (form_)
            return is_derivative_ ? form_->derivative(w) : form_->value(w);
        return interpolate(w);
    }

    /// Derivative: exact for closed forms, else the linear interpolant of
    /// centered differences.
    PeriodicProfile derivative() const {
        if (form_ && !is_derivative_) {
            std::vector<double> d(size());
            for (std::size_t i = 0; i < size(); ++i)
                d[i] = form_->derivative(grid_point(i));
            PeriodicProfile p = from_samples(std::move(d));
            p.form_ = form_;
            p.is_derivative_ = true;
            return p;
        }
        const std::size_t n = size();
        std::vector<double> d(n);
        const double inv = 0.5 / spacing();
        for (std::size_t i = 0; i < n; ++i)
            d[i] = (samples_[(i + 1) % n] - samples_[(i + n - 1) % n]) * inv;
        return from_samples(std::move(d));
    }

    /// Integral from -1/2 to x of the periodic extension; for x = 1/2 this is
    /// the total mass, and F(x + 1) = F(x) + total.
    double integral_to(double x) const {
        const double w = wrap_torus(x);
        const double periods = std::round(x - w);
        double partial = 0.0;
        double total = 0.0;
        if (form_ && is_derivative_) {
            partial = form_->value(w) - form_->value(-0.5);
        } else if (form_) {
            partial = form_->integral_from_left(w);
            total = form_->integral_from_left(0.5);
        } else {
            partial = interpolant_integral(w);
            total = rectangle_sum();
        }
        return partial + periods * total;
    }

    /// Rectangle rule over the grid.
    double rectangle_sum() const {
        double sum = 0.0;
        for (double v : samples_)
            sum += v;
        return sum * spacing();
    }

    PeriodicProfile scaled(double factor) const {
        if (form_) {
            PeriodicProfile p = from_closed_form(form_->scaled(factor), size());
            if (is_derivative_)
                p = p.derivative();
            return p;
        }
        std::vector<double> s = samples_;
        for (double& v : s)
            v *= factor;
        return from_samples(std::move(s));
    }

    /// Evaluation error bound for off-grid queries: zero for closed forms,
    /// otherwise the largest jump between neighbouring samples.
    double interpolation_error_bound() const {
        if (form_)
            return 0.0;
        double jump = 0.0;
        const std::size_t n = size();
        for (std::size_t i = 0; i < n; ++i)
            jump = std::max(jump, std::abs(samples_[(i + 1) % n] - samples_[i]));
        return jump;
    }

  private:
    static void check_size(std::size_t n) {
        if (n < 4)
            throw InvalidScenario("profile grid needs N >= 4, got " + std::to_string(n));
    }

    void update_extrema() {
        auto [lo, hi] = std::minmax_element(samples_.begin(), samples_.end());
        min_ = *lo;
        max_ = *hi;
    }

    double interpolate(double w) const {
        const std::size_t n = size();
        const double u = (w + 0.5) * static_cast<double>(n);
        auto i = static_cast<std::size_t>(std::floor(u));
        if (i >= n)
            i = n - 1;
        const double frac = u - static_cast<double>(i);
        return (1.0 - frac) * samples_[i] + frac * samples_[(i + 1) % n];
    }

    double interpolant_integral(double w) const {
        const std::size_t n = size();
        const double h = spacing();
        const double u = (w + 0.5) * static_cast<double>(n);
        auto cells = static_cast<std::size_t>(std::floor(u));
        if (cells >= n)
            cells = n - 1;
        double sum = 0.0;
        for (std::size_t i = 0; i < cells; ++i)
            sum += 0.5 * (samples_[i] + samples_[(i + 1) % n]) * h;
        const double frac = u - static_cast<double>(cells);
        const double a = samples_[cells];
        const double b = samples_[(cells + 1) % n];
        sum += h * frac * (a + 0.5 * frac * (b - a));
        return sum;
    }

    std::vector<double> samples_;
    std::optional<ClosedForm> form_;
    bool is_derivative_ = false;
    double min_ = 0.0;
    double max_ = 0.0;
};

/// Rectangle-rule integral over the torus; spectrally accurate for smooth
/// periodic integrands.
inline double torus_quadrature(const PeriodicProfile& f) { return f.rectangle_sum(); }

} // namespace epct

#endif
