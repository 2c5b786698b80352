#ifndef EPCT_CONFIG_HPP
#define EPCT_CONFIG_HPP

// Flat `key = value` scenario files.
//
//   k = -1
//   nu = 0.5
//   N = 128
//   background.family = affine_sine      # constant | affine_sine | raised_cosine | tabulated
//   background.params = 1, 0.3, 0
//   rho0.family = tabulated
//   rho0.csv = rho0.csv                  # columns x,value; resolved next to the file
//
// Profiles: background, rho0, u0 (required), u0x, kernel (optional).

#include "errors.hpp"
#include "scenario.hpp"

#include <cerrno>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace epct {

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::optional<double> parse_double(std::string_view text) {
    const std::string s = trim(text);
    if (s.empty())
        return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE)
        return std::nullopt;
    return v;
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace detail

inline const std::vector<std::string>& profile_names() {
    static const std::vector<std::string> names{"background", "rho0", "u0", "u0x", "kernel"};
    return names;
}

/// Parsed key/value file. Keys keep their file order.
class Config {
  public:
    static Config parse(std::string_view text, std::filesystem::path base_dir = {}) {
        Config cfg;
        cfg.base_dir_ = std::move(base_dir);
        std::size_t line_no = 0;
        std::istringstream in{std::string(text)};
        for (std::string line; std::getline(in, line);) {
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            const std::string body = detail::trim(line);
            if (body.empty())
                continue;
            const auto eq = body.find('=');
            if (eq == std::string::npos)
                throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
            const std::string key = detail::trim(body.substr(0, eq));
            const std::string value = detail::trim(body.substr(eq + 1));
            if (key.empty())
                throw ConfigError("line " + std::to_string(line_no) + ": empty key");
            if (!known_key(key))
                throw ConfigError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
            if (cfg.values_.count(key))
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
            cfg.order_.push_back(key);
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config load(const std::filesystem::path& path) {
        return parse(detail::read_file(path), path.parent_path());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }
    const std::filesystem::path& base_dir() const { return base_dir_; }
    const std::vector<std::string>& keys() const { return order_; }

    const std::string& text(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end())
            throw ConfigError("missing key '" + key + "'");
        return it->second;
    }

    double number(const std::string& key) const {
        const auto v = detail::parse_double(text(key));
        if (!v)
            throw ConfigError("key '" + key + "' is not a number: '" + text(key) + "'");
        return *v;
    }

    double number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::vector<double> numbers(const std::string& key) const {
        std::vector<double> out;
        for (const auto& item : detail::split(text(key), ',')) {
            const auto v = detail::parse_double(item);
            if (!v)
                throw ConfigError("key '" + key + "' has a non-numeric entry '" + item + "'");
            out.push_back(*v);
        }
        return out;
    }

    bool flag(const std::string& key, bool fallback = false) const {
        if (!has(key))
            return fallback;
        const auto& v = text(key);
        if (v == "true" || v == "1" || v == "yes")
            return true;
        if (v == "false" || v == "0" || v == "no")
            return false;
        throw ConfigError("key '" + key + "' is not a boolean: '" + v + "'");
    }

    /// Sets a value addressed by `path`: a plain key, or `<key>.<index>` for one
    /// entry of a comma-separated list (e.g. u0x.params.0).
    void set_number(const std::string& path, double value) {
        if (has(path) || known_key(path)) {
            if (!has(path))
                order_.push_back(path);
            values_[path] = format(value);
            return;
        }
        const auto dot = path.rfind('.');
        if (dot != std::string::npos) {
            const std::string key = path.substr(0, dot);
            const auto idx = detail::parse_double(path.substr(dot + 1));
            if (has(key) && idx && *idx >= 0.0 && *idx == std::floor(*idx)) {
                auto items = detail::split(text(key), ',');
                const auto i = static_cast<std::size_t>(*idx);
                if (i >= items.size())
                    throw ConfigError("parameter '" + path + "' indexes past the end of '" + key + "'");
                items[i] = format(value);
                std::string joined;
                for (std::size_t j = 0; j < items.size(); ++j)
                    joined += (j ? ", " : "") + items[j];
                values_[key] = joined;
                return;
            }
        }
        throw ConfigError("cannot resolve parameter '" + path + "'");
    }

    std::string serialize() const {
        std::string out;
        for (const auto& key : order_)
            out += key + " = " + values_.at(key) + "\n";
        return out;
    }

    static bool known_key(const std::string& key) {
        static const std::vector<std::string> plain{
            "k",         "nu",         "N",         "probe",           "char.rho",     "char.d",
            "char.c",    "sweep.param", "sweep.lo", "sweep.hi",        "sweep.tol",    "sim.chars",
            "sim.horizon", "sim.dt",    "sim.output_interval", "kernel.lipschitz", "rho0.normalize"};
        for (const auto& p : plain)
            if (key == p)
                return true;
        for (const auto& name : profile_names())
            for (const char* field : {".family", ".params", ".csv"})
                if (key == name + field)
                    return true;
        return false;
    }

  private:
    static std::string format(double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return buf;
    }

    std::filesystem::path base_dir_;
    std::vector<std::string> order_;
    std::map<std::string, std::string> values_;
};

/// Reads a two-column x,value CSV; a non-numeric first line is treated as a header.
inline PeriodicProfile load_profile_csv(const std::filesystem::path& path, std::size_t n) {
    const std::string text = detail::read_file(path);
    std::istringstream in(text);
    std::vector<double> xs, vs;
    std::size_t line_no = 0;
    for (std::string line; std::getline(in, line);) {
        ++line_no;
        const std::string body = detail::trim(line);
        if (body.empty())
            continue;
        const auto cols = detail::split(body, ',');
        if (cols.size() != 2)
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected two columns x,value");
        const auto x = detail::parse_double(cols[0]);
        const auto v = detail::parse_double(cols[1]);
        if (!x || !v) {
            if (xs.empty() && line_no == 1)
                continue;
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-numeric entry");
        }
        xs.push_back(*x);
        vs.push_back(*v);
    }
    return PeriodicProfile::from_points(xs, vs, n);
}

inline std::optional<PeriodicProfile> profile_from_config(const Config& cfg, const std::string& name, std::size_t n) {
    const std::string fam_key = name + ".family";
    if (!cfg.has(fam_key)) {
        if (cfg.has(name + ".params") || cfg.has(name + ".csv"))
            throw ConfigError("'" + name + "' has parameters but no family");
        return std::nullopt;
    }
    const std::string& family = cfg.text(fam_key);
    if (family == "tabulated") {
        std::filesystem::path p = cfg.text(name + ".csv");
        if (p.is_relative())
            p = cfg.base_dir() / p;
        return load_profile_csv(p, n);
    }
    const auto params = cfg.numbers(name + ".params");
    auto need = [&](std::size_t lo, std::size_t hi) {
        if (params.size() < lo || params.size() > hi)
            throw ConfigError("'" + name + "' family " + family + " takes " + std::to_string(lo) +
                              (lo == hi ? "" : "-" + std::to_string(hi)) + " parameters, got " +
                              std::to_string(params.size()));
    };
    if (family == "constant") {
        need(1, 1);
        return PeriodicProfile::from_closed_form(ClosedForm::constant(params[0]), n);
    }
    if (family == "affine_sine") {
        need(2, 3);
        return PeriodicProfile::from_closed_form(
            ClosedForm::affine_sine(params[0], params[1], params.size() > 2 ? params[2] : 0.0), n);
    }
    if (family == "raised_cosine") {
        need(2, 2);
        return PeriodicProfile::from_closed_form(ClosedForm::raised_cosine(params[0], params[1]), n);
    }
    throw ConfigError("'" + name + "' has unknown family '" + family +
                      "' (expected constant, affine_sine, raised_cosine or tabulated)");
}

inline Scenario scenario_from_config(const Config& cfg) {
    const double n_real = cfg.number("N");
    if (!(n_real >= 1.0) || n_real != std::floor(n_real))
        throw ConfigError("N must be a positive integer");
    const auto n = static_cast<std::size_t>(n_real);
    auto required = [&](const std::string& name) {
        auto p = profile_from_config(cfg, name, n);
        if (!p)
            throw ConfigError("missing profile '" + name + "' (" + name + ".family)");
        return std::move(*p);
    };
    auto background = required("background");
    auto rho0 = required("rho0");
    auto u0 = required("u0");
    auto u0x = profile_from_config(cfg, "u0x", n);
    std::optional<Kernel> kernel;
    if (auto kp = profile_from_config(cfg, "kernel", n)) {
        std::optional<double> lip;
        if (cfg.has("kernel.lipschitz"))
            lip = cfg.number("kernel.lipschitz");
        kernel.emplace(std::move(*kp), lip);
    } else if (cfg.has("kernel.lipschitz")) {
        throw ConfigError("kernel.lipschitz given without a kernel");
    }
    Scenario::Options opts;
    opts.normalize_rho0 = cfg.flag("rho0.normalize");
    return Scenario(cfg.number("k"), cfg.number("nu"), std::move(background), std::move(rho0), std::move(u0),
                    std::move(u0x), std::move(kernel), opts);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
    for (unsigned char ch : data) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace epct

#endif
