#include "cli/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "liquidex/errors.hpp"

namespace liquidex::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::string format_default(double v) {
    if (std::isinf(v)) return "infinite";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return buf;
}

/// Tracks which keys of one JSON object were consumed, fills defaults into the
/// resolved configuration, and rejects unknown keys on finish().
class Section {
public:
    Section(const json* src, std::string path, std::vector<std::string>* defaults)
        : src_(src), path_(std::move(path)), defaults_(defaults) {
        if (src_ && !src_->is_object())
            throw ConfigError("config section '" + display_path() + "' must be a JSON object");
    }

    double number(const char* key, double def) {
        const json* v = find(key);
        if (!v) return record_default(key, def);
        if (!v->is_number()) throw type_error(key, "a number");
        const double x = v->get<double>();
        resolved_[key] = x;
        return x;
    }

    std::uint64_t uinteger(const char* key, std::uint64_t def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, std::to_string(def));
            resolved_[key] = def;
            return def;
        }
        if (!v->is_number_unsigned()) throw type_error(key, "a non-negative integer");
        const std::uint64_t x = v->get<std::uint64_t>();
        resolved_[key] = x;
        return x;
    }

    std::size_t size(const char* key, std::size_t def) {
        return static_cast<std::size_t>(uinteger(key, def));
    }

    bool boolean(const char* key, bool def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, def ? "true" : "false");
            resolved_[key] = def;
            return def;
        }
        if (!v->is_boolean()) throw type_error(key, "a boolean");
        const bool x = v->get<bool>();
        resolved_[key] = x;
        return x;
    }

    std::string text(const char* key, const std::string& def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, def);
            resolved_[key] = def;
            return def;
        }
        if (!v->is_string()) throw type_error(key, "a string");
        const std::string x = v->get<std::string>();
        resolved_[key] = x;
        return x;
    }

    /// Terminal penalty: a positive number or the string "infinite".
    double penalty(const char* key, double def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, format_default(def));
            resolved_[key] = std::isinf(def) ? json("infinite") : json(def);
            return def;
        }
        if (v->is_string()) {
            if (v->get<std::string>() != "infinite")
                throw ConfigError("config key '" + display_path() + "." + key +
                                  "': the only string value allowed is \"infinite\"");
            resolved_[key] = "infinite";
            return std::numeric_limits<double>::infinity();
        }
        if (!v->is_number()) throw type_error(key, "a number or \"infinite\"");
        const double x = v->get<double>();
        resolved_[key] = x;
        return x;
    }

    std::vector<double> number_list(const char* key, const std::vector<double>& def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, "[" + std::to_string(def.size()) + " values]");
            resolved_[key] = def;
            return def;
        }
        if (!v->is_array()) throw type_error(key, "an array of numbers");
        std::vector<double> out;
        for (const auto& e : *v) {
            if (!e.is_number()) throw type_error(key, "an array of numbers");
            out.push_back(e.get<double>());
        }
        resolved_[key] = out;
        return out;
    }

    std::vector<std::size_t> size_list(const char* key, const std::vector<std::size_t>& def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, "[" + std::to_string(def.size()) + " values]");
            resolved_[key] = def;
            return def;
        }
        if (!v->is_array()) throw type_error(key, "an array of positive integers");
        std::vector<std::size_t> out;
        for (const auto& e : *v) {
            if (!e.is_number_unsigned()) throw type_error(key, "an array of positive integers");
            out.push_back(e.get<std::size_t>());
        }
        resolved_[key] = out;
        return out;
    }

    std::vector<std::vector<double>> matrix(const char* key,
                                            const std::vector<std::vector<double>>& def) {
        const json* v = find(key);
        if (!v) {
            note_default(key, "[default matrix]");
            resolved_[key] = def;
            return def;
        }
        if (!v->is_array()) throw type_error(key, "an array of arrays of numbers");
        std::vector<std::vector<double>> out;
        for (const auto& row : *v) {
            if (!row.is_array()) throw type_error(key, "an array of arrays of numbers");
            std::vector<double> r;
            for (const auto& e : row) {
                if (!e.is_number()) throw type_error(key, "an array of arrays of numbers");
                r.push_back(e.get<double>());
            }
            out.push_back(std::move(r));
        }
        resolved_[key] = out;
        return out;
    }

    Section subsection(const char* key) {
        const json* v = find(key);
        return Section(v, display_path().empty() ? key : display_path() + "." + key, defaults_);
    }

    /// Absorb a finished child section into this one's resolved output.
    void adopt(const char* key, Section& child) {
        child.check_unknown_keys();
        resolved_[key] = std::move(child.resolved_);
    }

    void finish() { check_unknown_keys(); }

    ordered_json take_resolved() { return std::move(resolved_); }

private:
    std::string display_path() const { return path_; }

    ConfigError type_error(const char* key, const char* expected) const {
        return ConfigError("config key '" + (path_.empty() ? std::string(key)
                                                           : path_ + "." + key) +
                           "' must be " + expected);
    }

    const json* find(const char* key) {
        if (!src_ || !src_->contains(key)) return nullptr;
        consumed_.insert(key);
        return &(*src_)[key];
    }

    double record_default(const char* key, double def) {
        note_default(key, format_default(def));
        resolved_[key] = def;
        return def;
    }

    void note_default(const char* key, const std::string& shown) {
        defaults_->push_back((path_.empty() ? std::string(key) : path_ + "." + key) + " = " +
                             shown);
    }

    void check_unknown_keys() const {
        if (!src_) return;
        for (const auto& item : src_->items()) {
            if (!consumed_.count(item.key()))
                throw ConfigError("unknown config key '" +
                                  (path_.empty() ? item.key() : path_ + "." + item.key()) + "'");
        }
    }

    const json* src_;
    std::string path_;
    std::vector<std::string>* defaults_;
    std::set<std::string> consumed_;
    ordered_json resolved_ = ordered_json::object();
};

ModelBlock read_model_block(Section& root, const char* key) {
    Section s = root.subsection(key);
    ModelBlock mb;
    mb.params.lambda = s.number("lambda", 0.2);
    mb.params.kappa = s.number("kappa", 0.2);
    mb.params.sigma = s.number("sigma", 0.1);
    mb.params.T = s.number("T", 20.0);
    mb.S0 = s.number("S0", 100.0);
    mb.q0 = s.number("q0", 1000.0);
    mb.params.a = s.penalty("a", std::numeric_limits<double>::infinity());
    mb.params.theta0 = mb.S0 * mb.q0;
    root.adopt(key, s);
    if (!(mb.S0 > 0.0)) throw ConfigError("model.S0 must be positive");
    mb.params.validate();
    return mb;
}

std::size_t read_grid_block(Section& root, std::size_t def_steps) {
    Section s = root.subsection("grid");
    const std::size_t n = s.size("n_steps", def_steps);
    root.adopt("grid", s);
    if (n < 1) throw ConfigError("grid.n_steps must be at least 1");
    return n;
}

std::uint64_t read_seed(Section& root, const CliOverrides& ov) {
    std::uint64_t seed = root.uinteger("seed", 1);
    if (ov.seed) seed = *ov.seed;
    return seed;
}

}  // namespace

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file " + path + " must hold a JSON object");
    return j;
}

std::pair<PathsConfig, ResolvedConfig> parse_paths_config(const json& j, const CliOverrides& ov) {
    ResolvedConfig rc;
    Section root(&j, "", &rc.defaults_applied);
    PathsConfig cfg;
    cfg.model = read_model_block(root, "model");
    cfg.n_steps = read_grid_block(root, 2000);
    rc.seed = read_seed(root, ov);
    cfg.emit_gnuplot = root.boolean("emit_gnuplot", false);
    root.finish();
    rc.resolved = root.take_resolved();
    rc.resolved["seed"] = rc.seed;
    return {cfg, rc};
}

std::pair<SweepConfig, ResolvedConfig> parse_sweep_config(const json& j, const CliOverrides& ov) {
    ResolvedConfig rc;
    Section root(&j, "", &rc.defaults_applied);
    SweepConfig cfg;
    cfg.model = read_model_block(root, "model");
    cfg.n_steps = read_grid_block(root, 2000);
    rc.seed = read_seed(root, ov);
    Section sw = root.subsection("sweep");
    cfg.parameter = sw.text("parameter", "sigma");
    cfg.values = sw.number_list("values", {0.05, 0.1, 0.2, 0.4});
    root.adopt("sweep", sw);
    root.finish();
    rc.resolved = root.take_resolved();
    rc.resolved["seed"] = rc.seed;
    if (cfg.parameter != "sigma" && cfg.parameter != "lambda" && cfg.parameter != "kappa")
        throw ConfigError("sweep.parameter must be one of sigma, lambda, kappa");
    if (cfg.values.size() < 2) throw ConfigError("sweep.values needs at least 2 entries");
    for (double v : cfg.values)
        if (!(v > 0.0)) throw ConfigError("sweep.values must all be positive");
    return {cfg, rc};
}

std::pair<OracleCheckConfig, ResolvedConfig> parse_oracle_config(const json& j,
                                                                 const CliOverrides& ov) {
    ResolvedConfig rc;
    Section root(&j, "", &rc.defaults_applied);
    OracleCheckConfig cfg;
    cfg.model = read_model_block(root, "model");
    rc.seed = read_seed(root, ov);
    Section oc = root.subsection("oracle");
    cfg.a_grid = oc.number_list("a_grid", cfg.a_grid);
    cfg.n_grid = oc.size_list("n_grid", cfg.n_grid);
    cfg.headline_a = oc.number("headline_a", cfg.headline_a);
    cfg.headline_n = oc.size("headline_n", cfg.headline_n);
    cfg.alpha = oc.number("alpha", cfg.alpha);
    cfg.t_cap_fraction = oc.number("t_cap_fraction", cfg.t_cap_fraction);
    cfg.gain_tolerance = oc.number("gain_tolerance", cfg.gain_tolerance);
    cfg.offset_tolerance = oc.number("offset_tolerance", cfg.offset_tolerance);
    cfg.one_step_grid_points = oc.size("one_step_grid_points", cfg.one_step_grid_points);
    root.adopt("oracle", oc);
    root.finish();
    rc.resolved = root.take_resolved();
    rc.resolved["seed"] = rc.seed;
    if (cfg.a_grid.empty() || cfg.n_grid.empty())
        throw ConfigError("oracle.a_grid and oracle.n_grid must be non-empty");
    for (std::size_t n : cfg.n_grid)
        if (n < 1) throw ConfigError("oracle.n_grid entries must be positive");
    return {cfg, rc};
}

std::pair<MultiConfig, ResolvedConfig> parse_multi_config(const json& j, const CliOverrides& ov) {
    ResolvedConfig rc;
    Section root(&j, "", &rc.defaults_applied);
    MultiConfig cfg;
    rc.seed = read_seed(root, ov);
    Section m = root.subsection("multi");
    cfg.sigma = m.number_list("sigma", cfg.sigma);
    cfg.rho = m.matrix("rho", cfg.rho);
    cfg.lambda = m.number("lambda", cfg.lambda);
    cfg.kappa = m.number("kappa", cfg.kappa);
    cfg.T = m.number("T", cfg.T);
    cfg.a = m.number("a", cfg.a);
    cfg.theta0 = m.number_list("theta0", cfg.theta0);
    cfg.n_steps = m.size("n_steps", cfg.n_steps);
    cfg.n_paths = m.size("n_paths", cfg.n_paths);
    cfg.a_list = m.number_list("a_list", cfg.a_list);
    cfg.riccati_n = m.size("riccati_n", cfg.riccati_n);
    root.adopt("multi", m);
    root.finish();
    rc.resolved = root.take_resolved();
    rc.resolved["seed"] = rc.seed;
    if (ov.n_paths) {
        cfg.n_paths = *ov.n_paths;
        rc.resolved["multi"]["n_paths"] = cfg.n_paths;
    }
    return {cfg, rc};
}

std::pair<DriftDemoConfig, ResolvedConfig> parse_drift_config(const json& j,
                                                              const CliOverrides& ov) {
    ResolvedConfig rc;
    Section root(&j, "", &rc.defaults_applied);
    DriftDemoConfig cfg;
    cfg.model = read_model_block(root, "model");
    cfg.n_steps = read_grid_block(root, 2000);
    rc.seed = read_seed(root, ov);
    Section d = root.subsection("drift");
    cfg.preset = d.text("preset", cfg.preset);
    cfg.alpha0 = d.number("alpha0", cfg.alpha0);
    cfg.mean = d.number("mean", cfg.mean);
    cfg.rate = d.number("rate", cfg.rate);
    cfg.vol = d.number("vol", cfg.vol);
    cfg.cond_exp_table = d.number_list("cond_exp_table", {});
    cfg.fd_step = d.number("fd_step", cfg.fd_step);
    root.adopt("drift", d);
    root.finish();
    rc.resolved = root.take_resolved();
    rc.resolved["seed"] = rc.seed;
    if (cfg.preset != "zero" && cfg.preset != "constant" && cfg.preset != "linear_decay" &&
        cfg.preset != "mean_reverting")
        throw ConfigError("drift.preset must be zero, constant, linear_decay or mean_reverting");
    if (!cfg.cond_exp_table.empty() && cfg.cond_exp_table.size() != cfg.n_steps + 1)
        throw ConfigError("drift.cond_exp_table must have n_steps + 1 entries");
    if (!(cfg.fd_step > 0.0)) throw ConfigError("drift.fd_step must be positive");
    return {cfg, rc};
}

}  // namespace liquidex::cli
