#ifndef EPCT_INTEGRATOR_HPP
#define EPCT_INTEGRATOR_HPP

// Classical RK4 with step halving and cap-based blow-up detection.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <concepts>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace epct {

struct IntegratorConfig {
    double dt_init = 1e-3;
    double dt_min = 1e-10;
    /// Breakdown when a slope variable drops below -slope_cap.
    double slope_cap = 1e8;
    /// Breakdown when a density variable exceeds density_cap.
    double density_cap = 1e12;
    double horizon = 50.0;
    /// Spacing of output times; <= 0 means only t = 0 and the horizon.
    double output_interval = 0.1;
    /// A step is rejected when some component moves by more than this
    /// fraction of max(|y_i|, change_floor).
    double max_relative_change = 0.2;
    double change_floor = 1.0;
    /// Steps whose relative change stays below this let dt double (up to dt_init).
    double growth_threshold = 0.05;

    void validate() const {
        if (!(dt_init > 0.0) || !(dt_min > 0.0) || !(dt_min < dt_init))
            throw PreconditionError("integrator needs 0 < dt_min < dt_init");
        if (!(slope_cap > 0.0) || !(density_cap > 0.0))
            throw PreconditionError("integrator caps must be positive");
        if (!(horizon > 0.0))
            throw PreconditionError("integrator horizon must be positive");
        if (!(max_relative_change > 0.0) || !(change_floor > 0.0))
            throw PreconditionError("integrator change control must be positive");
    }

    std::vector<double> output_times() const {
        std::vector<double> times{0.0};
        if (output_interval > 0.0) {
            for (std::size_t k = 1;; ++k) {
                const double t = static_cast<double>(k) * output_interval;
                if (t >= horizon * (1.0 - 1e-12))
                    break;
                times.push_back(t);
            }
        }
        times.push_back(horizon);
        return times;
    }
};

/// Extremes a system reports for breakdown detection. Systems without
/// slope/density variables leave the defaults.
struct Watch {
    double min_slope = std::numeric_limits<double>::infinity();
    double max_density = -std::numeric_limits<double>::infinity();
};

template <class S>
concept OdeSystem = requires(const S& sys, double t, std::span<const double> y, std::span<double> dy) {
    { sys.dimension() } -> std::convertible_to<std::size_t>;
    sys.derivative(t, y, dy);
    { sys.watch(y) } -> std::same_as<Watch>;
};

enum class Termination { HorizonReached, BlowupDetected, StepUnderflow, Stopped };

inline const char* to_string(Termination t) {
    switch (t) {
    case Termination::HorizonReached:
        return "HorizonReached";
    case Termination::BlowupDetected:
        return "BlowupDetected";
    case Termination::StepUnderflow:
        return "StepUnderflow";
    case Termination::Stopped:
        return "Stopped";
    }
    return "unknown";
}

struct IntegrationResult {
    Termination reason = Termination::HorizonReached;
    double t = 0.0;
    std::vector<double> state;
    /// [t_last_ok, t_breach] after bisection on the final step.
    std::optional<std::pair<double, double>> blowup_bracket;
    std::size_t accepted = 0;
    std::size_t rejected = 0;
};

struct StepInfo {
    double t = 0.0;
    double dt = 0.0;
    /// Set when t is one of the configured output times.
    std::optional<std::size_t> output_index;
};

struct NoObserver {
    bool operator()(const StepInfo&, std::span<const double>) const { return true; }
};

namespace detail {

template <OdeSystem S>
class Rk4Stepper {
  public:
    explicit Rk4Stepper(const S& sys) : sys_(sys) {
        const std::size_t n = sys.dimension();
        k1_.resize(n);
        k2_.resize(n);
        k3_.resize(n);
        k4_.resize(n);
        tmp_.resize(n);
    }

    void step(double t, std::span<const double> y, double h, std::span<double> out) {
        const std::size_t n = y.size();
        sys_.derivative(t, y, k1_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + 0.5 * h * k1_[i];
        sys_.derivative(t + 0.5 * h, tmp_, k2_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + 0.5 * h * k2_[i];
        sys_.derivative(t + 0.5 * h, tmp_, k3_);
        for (std::size_t i = 0; i < n; ++i)
            tmp_[i] = y[i] + h * k3_[i];
        sys_.derivative(t + h, tmp_, k4_);
        for (std::size_t i = 0; i < n; ++i)
            out[i] = y[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }

  private:
    const S& sys_;
    std::vector<double> k1_, k2_, k3_, k4_, tmp_;
};

inline bool breached(const Watch& w, const IntegratorConfig& cfg) {
    return w.min_slope < -cfg.slope_cap || w.max_density > cfg.density_cap;
}

inline bool all_finite(std::span<const double> y) {
    return std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
}

} // namespace detail

/// Integrates `sys` from y0 over [0, horizon]. The observer is called at t = 0
/// and after every accepted step; returning false stops the integration.
template <OdeSystem S, class Observer = NoObserver>
IntegrationResult integrate(const S& sys, std::vector<double> y0, const IntegratorConfig& cfg,
                            Observer&& observer = {}) {
    cfg.validate();
    if (y0.size() != sys.dimension())
        throw PreconditionError("initial state has wrong dimension");

    IntegrationResult res;
    const auto times = cfg.output_times();
    std::size_t next_out = 1;
    detail::Rk4Stepper<S> stepper(sys);
    std::vector<double> y = std::move(y0);
    std::vector<double> trial(y.size());
    double t = 0.0;
    double dt = cfg.dt_init;

    if (detail::breached(sys.watch(y), cfg)) {
        res.reason = Termination::BlowupDetected;
        res.blowup_bracket = std::pair{0.0, 0.0};
        res.state = std::move(y);
        return res;
    }
    if (!observer(StepInfo{0.0, 0.0, std::size_t{0}}, std::span<const double>(y))) {
        res.reason = Termination::Stopped;
        res.state = std::move(y);
        return res;
    }

    while (next_out < times.size()) {
        const double target = times[next_out];
        const bool clipped = target - t <= dt;
        const double h = clipped ? target - t : dt;
        stepper.step(t, y, h, trial);

        double change = 0.0;
        const bool finite = detail::all_finite(trial);
        if (finite) {
            for (std::size_t i = 0; i < y.size(); ++i)
                change = std::max(change, std::abs(trial[i] - y[i]) / std::max(std::abs(y[i]), cfg.change_floor));
        }
        if (!finite || change > cfg.max_relative_change) {
            ++res.rejected;
            dt = 0.5 * h;
            if (dt < cfg.dt_min) {
                res.reason = Termination::StepUnderflow;
                res.t = t;
                res.state = std::move(y);
                return res;
            }
            continue;
        }

        const Watch w = sys.watch(trial);
        if (detail::breached(w, cfg)) {
            // Bisect the step length for the first breaching sub-step.
            double lo = 0.0;
            double hi = h;
            std::vector<double> probe(y.size());
            for (int it = 0; it < 80 && hi - lo > 1e-14 * std::max(1.0, t); ++it) {
                const double mid = 0.5 * (lo + hi);
                stepper.step(t, y, mid, probe);
                if (!detail::all_finite(probe) || detail::breached(sys.watch(probe), cfg))
                    hi = mid;
                else
                    lo = mid;
            }
            ++res.accepted;
            res.reason = Termination::BlowupDetected;
            res.blowup_bracket = std::pair{t + lo, t + hi};
            res.t = t + h;
            res.state = std::move(trial);
            return res;
        }

        ++res.accepted;
        t = clipped ? target : t + h;
        std::swap(y, trial);
        StepInfo info{t, h, std::nullopt};
        if (clipped)
            info.output_index = next_out++;
        if (!observer(info, std::span<const double>(y))) {
            res.reason = Termination::Stopped;
            res.t = t;
            res.state = std::move(y);
            return res;
        }

        const bool near_caps = w.min_slope < -0.1 * cfg.slope_cap || w.max_density > 0.1 * cfg.density_cap;
        if (!clipped && change < cfg.growth_threshold && !near_caps)
            dt = std::min(2.0 * dt, cfg.dt_init);
    }
    res.reason = Termination::HorizonReached;
    res.t = t;
    res.state = std::move(y);
    return res;
}

} // namespace epct

#endif
