#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "liquidex/model.hpp"

namespace liquidex::cli {

/// Fully resolved configuration of one run: the effective JSON (defaults filled
/// in), the list of defaults that were applied, and the master seed.
struct ResolvedConfig {
    nlohmann::ordered_json resolved;
    std::vector<std::string> defaults_applied;
    std::uint64_t seed = 0;
};

/// Overrides coming from the command line, applied after the file is read.
struct CliOverrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> n_paths;
};

struct ModelBlock {
    ModelParams params;
    double S0 = 100.0;
    double q0 = 1000.0;  ///< params.theta0 = S0 * q0
};

struct PathsConfig {
    ModelBlock model;
    std::size_t n_steps = 2000;
    bool emit_gnuplot = false;
};

struct SweepConfig {
    ModelBlock model;
    std::size_t n_steps = 2000;
    std::string parameter = "sigma";  ///< one of sigma | lambda | kappa
    std::vector<double> values = {0.05, 0.1, 0.2, 0.4};
};

struct OracleCheckConfig {
    ModelBlock model;
    std::vector<double> a_grid = {1e4, 1e6, 1e8};
    std::vector<std::size_t> n_grid = {500, 1000, 2000, 2500, 5000};
    double headline_a = 1e8;
    std::size_t headline_n = 5000;
    double alpha = 0.05;
    double t_cap_fraction = 0.9;
    double gain_tolerance = 0.01;
    double offset_tolerance = 0.01;
    std::size_t one_step_grid_points = 10000001;
};

struct MultiConfig {
    std::vector<double> sigma = {0.1, 0.2};
    std::vector<std::vector<double>> rho = {{1.0, 0.5}, {0.5, 1.0}};
    double lambda = 0.2;
    double kappa = 0.2;
    double T = 20.0;
    double a = 1e6;
    std::vector<double> theta0 = {1e5, 1e5};
    std::size_t n_steps = 2000;
    std::size_t n_paths = 100;
    std::vector<double> a_list = {1e2, 1e4, 1e6};
    std::size_t riccati_n = 5000;
};

struct DriftDemoConfig {
    ModelBlock model;
    std::size_t n_steps = 2000;
    std::string preset = "constant";  ///< zero | constant | linear_decay | mean_reverting
    double alpha0 = 0.05;
    double mean = 0.0;    ///< mean_reverting: long-run level
    double rate = 0.5;    ///< mean_reverting: reversion speed
    double vol = 0.02;    ///< mean_reverting: drift volatility
    std::vector<double> cond_exp_table;  ///< optional override of E^Q[alpha_T|F_t]
    double fd_step = 1e-4;
};

nlohmann::json load_config_file(const std::string& path);  // "" -> empty object

std::pair<PathsConfig, ResolvedConfig> parse_paths_config(const nlohmann::json& j,
                                                          const CliOverrides& ov);
std::pair<SweepConfig, ResolvedConfig> parse_sweep_config(const nlohmann::json& j,
                                                          const CliOverrides& ov);
std::pair<OracleCheckConfig, ResolvedConfig> parse_oracle_config(const nlohmann::json& j,
                                                                 const CliOverrides& ov);
std::pair<MultiConfig, ResolvedConfig> parse_multi_config(const nlohmann::json& j,
                                                          const CliOverrides& ov);
std::pair<DriftDemoConfig, ResolvedConfig> parse_drift_config(const nlohmann::json& j,
                                                              const CliOverrides& ov);

}  // namespace liquidex::cli
