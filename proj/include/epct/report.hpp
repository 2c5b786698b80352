#ifndef EPCT_REPORT_HPP
#define EPCT_REPORT_HPP

// CSV and JSON serialization. Numbers use shortest round-trip decimal form.

#include "phase.hpp"
#include "simulate.hpp"
#include "thresholds.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>

namespace epct {

inline constexpr const char* toolkit_version = "1.0.0";

inline std::string format_number(double v) {
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

namespace detail {
inline nlohmann::json json_number(double v) {
    if (!std::isfinite(v))
        return nullptr;
    return v;
}
inline nlohmann::json json_number(const std::optional<double>& v) {
    return v ? json_number(*v) : nlohmann::json(nullptr);
}
} // namespace detail

inline nlohmann::json verdict_json(const ThresholdVerdict& v) {
    nlohmann::json j;
    j["verdict"] = to_string(v.verdict);
    j["rule"] = v.rule;
    nlohmann::json constants = nlohmann::json::object();
    for (const auto& [name, value] : v.constants)
        constants[name] = detail::json_number(value);
    j["constants"] = constants;
    j["witness"] = detail::json_number(v.witness);
    j["margin"] = detail::json_number(v.margin);
    j["breakdown_excess"] = detail::json_number(v.breakdown_excess);
    j["gap"] = detail::json_number(v.gap);
    j["grid_size"] = v.grid_size;
    return j;
}

inline nlohmann::json bounds_json(const BoundsReport& rep) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : rep.checks) {
        arr.push_back({{"name", c.name},
                       {"applicable", c.applicable},
                       {"passed", c.passed},
                       {"worst_margin", detail::json_number(c.worst_margin)},
                       {"worst_time", detail::json_number(c.worst_time)}});
    }
    return arr;
}

inline nlohmann::json run_json(const EnsembleRun& run, const ThresholdVerdict& verdict, const BoundsReport& bounds) {
    const auto& d = run.diagnostics;
    nlohmann::json j;
    j["outcome"] = to_string(run.outcome);
    j["characteristics"] = run.n_chars;
    j["alignment"] = run.alignment;
    j["horizon"] = run.config.horizon;
    j["t_end"] = detail::json_number(run.t_end);
    if (run.blowup_bracket) {
        j["t_c_bracket"] = {run.blowup_bracket->first, run.blowup_bracket->second};
        j["t_c"] = detail::json_number(run.breakdown_time());
    } else {
        j["t_c_bracket"] = nullptr;
        j["t_c"] = nullptr;
    }
    j["worst_alpha"] = detail::json_number(run.worst_alpha);
    if (!run.failure.empty())
        j["failure"] = run.failure;
    j["diagnostics"] = {{"lambda", detail::json_number(d.lambda)},
                        {"rho_growth_ratio", detail::json_number(d.rho_growth_ratio)},
                        {"min_ux", detail::json_number(d.min_ux)},
                        {"max_ux", detail::json_number(d.max_ux)},
                        {"slope_upper_excess", detail::json_number(d.slope_upper_excess)},
                        {"energy_ratio", detail::json_number(d.energy_ratio)},
                        {"crossing_time", detail::json_number(d.crossing_time)},
                        {"e_consistency", detail::json_number(d.e_consistency)},
                        {"neutrality_residual", detail::json_number(d.neutrality_residual)},
                        {"accepted_steps", d.accepted_steps},
                        {"rejected_steps", d.rejected_steps}};
    j["bounds"] = bounds_json(bounds);
    j["verdict"] = verdict_json(verdict);
    return j;
}

inline nlohmann::json sweep_json(const SweepResult& s) {
    return {{"param", s.param},
            {"bracket", {s.lo, s.hi}},
            {"midpoint", s.midpoint()},
            {"low_end_breaks", s.lo_breaks},
            {"probes", s.probes.size()},
            {"theta_gs", detail::json_number(s.theta_gs)},
            {"theta_ftb", detail::json_number(s.theta_ftb)},
            {"within_bounds", s.within_bounds() ? nlohmann::json(*s.within_bounds()) : nlohmann::json(nullptr)}};
}

inline void write_trajectory_csv(std::ostream& out, const EnsembleRun& run) {
    out << "t,alpha,x,u,E,rho,slope\n";
    for (const auto& snap : run.snapshots) {
        for (std::size_t i = 0; i < run.n_chars; ++i) {
            out << format_number(snap.t) << ',' << format_number(run.alpha[i]) << ',' << format_number(snap.x[i])
                << ',' << format_number(snap.u[i]) << ',' << format_number(snap.E[i]) << ','
                << format_number(snap.rho[i]) << ',' << format_number(snap.slope[i]) << '\n';
        }
    }
}

inline void write_sweep_csv(std::ostream& out, const SweepResult& s) {
    out << "theta,outcome,t_c\n";
    for (const auto& p : s.probes)
        out << format_number(p.theta) << ',' << (p.outcome.breakdown ? "breakdown" : "global") << ','
            << format_number(p.outcome.t_end) << '\n';
}

inline void write_direction_field_csv(std::ostream& out, const DirectionField& f) {
    out << "coord1,coord2,v1,v2\n";
    for (const auto& s : f.samples)
        out << format_number(s.x) << ',' << format_number(s.y) << ',' << format_number(s.vx) << ','
            << format_number(s.vy) << '\n';
}

inline void write_separatrix_csv(std::ostream& out, const DirectionField& f) {
    out << "coord1,coord2\n";
    for (const auto& p : f.separatrix)
        out << format_number(p[0]) << ',' << format_number(p[1]) << '\n';
}

} // namespace epct

#endif
