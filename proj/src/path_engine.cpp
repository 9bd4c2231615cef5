#include "liquidex/path_engine.hpp"

#include <cmath>
#include <random>
#include <string>

namespace liquidex {

namespace {

std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void check_nodes(const TimeGrid& grid, const std::vector<double>& v, const char* name) {
    if (v.size() != grid.nodes())
        throw InputError(std::string(name) + " has " + std::to_string(v.size()) +
                         " nodes, grid expects " + std::to_string(grid.nodes()));
}

// exp(-sigma^2 t_k / 2 + sigma W_k), the exponential martingale along the path.
double martingale_factor(double sigma, double t, double w) {
    return std::exp(-0.5 * sigma * sigma * t + sigma * w);
}

}  // namespace

std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream) {
    return mix64(master ^ mix64(stream));
}

std::vector<double> sample_brownian(const TimeGrid& grid, std::uint64_t seed) {
    std::mt19937_64 engine(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double sqrt_dt = std::sqrt(grid.dt());
    std::vector<double> w(grid.nodes());
    w[0] = 0.0;
    for (std::size_t k = 0; k < grid.n_steps; ++k)
        w[k + 1] = w[k] + sqrt_dt * gauss(engine);
    return w;
}

std::vector<double> gbm_price_path(double S0, double sigma, const TimeGrid& grid,
                                   const std::vector<double>& W) {
    if (!(S0 > 0.0)) throw ParameterError("gbm_price_path: S0 must be positive");
    check_nodes(grid, W, "W");
    std::vector<double> s(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k)
        s[k] = S0 * martingale_factor(sigma, grid.time(k), W[k]);
    return s;
}

std::vector<double> optimal_position_path(const ModelParams& p, const CoefBundle& c,
                                          const TimeGrid& grid, const std::vector<double>& W) {
    check_nodes(grid, W, "W");
    std::vector<double> theta(grid.nodes());
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        const double t = grid.time(k);
        theta[k] = p.theta0 * position_decay_factor(c, t) * martingale_factor(p.sigma, t, W[k]);
    }
    theta[grid.n_steps] = 0.0;  // D(T) = 0 forces full liquidation
    return theta;
}

std::vector<double> optimal_position_path_drift(const ModelParams& p, const CoefBundle& c,
                                                const TimeGrid& grid, const DriftSpec& drift,
                                                const std::vector<double>& W) {
    if (drift.is_zero()) return optimal_position_path(p, c, grid, W);
    check_nodes(grid, W, "W");
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt();
    std::vector<double> theta(grid.nodes());
    double integral = 0.0;   // trapezoid of H_s^{-1} nu(s)
    double prev_integrand = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);
        const double h = position_decay_factor(c, t) * martingale_factor(p.sigma, t, W[k]);
        const double nu = drift_offset(c, p, t, drift.alpha_at(t, k, grid.nodes()),
                                       drift.cond_exp_T_at(k, grid.nodes()));
        const double integrand = nu / h;
        if (k > 0) integral += 0.5 * dt * (prev_integrand + integrand);
        prev_integrand = integrand;
        theta[k] = h * (p.theta0 + integral);
    }
    theta[n] = 0.0;  // H(T) = 0
    return theta;
}

std::vector<double> optimal_control_path(const ModelParams& p, const CoefBundle& c,
                                         const TimeGrid& grid, const std::vector<double>& theta,
                                         const std::vector<double>& W, const DriftSpec& drift) {
    check_nodes(grid, theta, "theta");
    check_nodes(grid, W, "W");
    const std::size_t n = grid.n_steps;
    std::vector<double> u(grid.nodes());
    std::vector<double> nu(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
        const double t = grid.time(k);
        nu[k] = drift.is_zero() ? 0.0
                                : drift_offset(c, p, t, drift.alpha_at(t, k, grid.nodes()),
                                               drift.cond_exp_T_at(k, grid.nodes()));
        u[k] = theta[k] * feedback_gain(c, t) + nu[k];
    }
    // Horizon node: Gamma(T) theta_T is 0 * inf; use D Gamma = D' instead.
    // theta_{n-1}/H_{n-1} recovers theta0 + integral of H^{-1} nu; for zero drift
    // it is theta0 and u_n reduces to theta0 * D'(T)/D(0) * exp(-sigma^2 T/2 + sigma W_T).
    const double mart_T = martingale_factor(p.sigma, grid.T, W[n]);
    if (drift.is_zero()) {
        u[n] = p.theta0 * terminal_control_factor(c) * mart_T;
    } else {
        const double tprev = grid.time(n - 1);
        const double h_prev =
            position_decay_factor(c, tprev) * martingale_factor(p.sigma, tprev, W[n - 1]);
        const double accumulated = theta[n - 1] / h_prev;
        // nu(T) by linear extrapolation from the last two interior nodes; exact
        // in the limit for drifts with a finite nu at the horizon.
        const double nu_T = (n >= 2) ? 2.0 * nu[n - 1] - nu[n - 2] : nu[n - 1];
        u[n] = terminal_control_factor(c) * mart_T * accumulated + nu_T;
    }
    return u;
}

std::vector<double> gatheral_share_path(double q0, double kappa, const TimeGrid& grid,
                                        const std::vector<double>& S) {
    check_nodes(grid, S, "S");
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt();
    const double T = grid.T;
    std::vector<double> q(grid.nodes());
    double price_integral = 0.0;
    q[0] = q0;
    for (std::size_t k = 1; k <= n; ++k) {
        price_integral += 0.5 * dt * (S[k - 1] + S[k]);
        q[k] = ((T - grid.time(k)) / T) * (q0 - 0.25 * kappa * T * price_integral);
    }
    q[n] = 0.0;
    return q;
}

std::vector<double> implied_control_path(double sigma, const TimeGrid& grid,
                                         const std::vector<double>& theta,
                                         const std::vector<double>& W) {
    check_nodes(grid, theta, "theta");
    check_nodes(grid, W, "W");
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt();
    std::vector<double> u(grid.nodes());
    for (std::size_t k = 0; k < n; ++k) {
        const double dW = W[k + 1] - W[k];
        u[k] = (theta[k + 1] - theta[k] - theta[k] * sigma * dW) / dt;
    }
    u[n] = n > 0 ? u[n - 1] : 0.0;
    return u;
}

PathBundle simulate_optimal_bundle(const ModelParams& p, const CoefBundle& c,
                                   const TimeGrid& grid, double S0, std::uint64_t seed,
                                   const DriftSpec& drift) {
    PathBundle b;
    b.grid = grid;
    b.seed = seed;
    b.W = sample_brownian(grid, seed);
    b.S = gbm_price_path(S0, p.sigma, grid, b.W);
    b.theta = drift.is_zero() ? optimal_position_path(p, c, grid, b.W)
                              : optimal_position_path_drift(p, c, grid, drift, b.W);
    b.u = optimal_control_path(p, c, grid, b.theta, b.W, drift);
    b.q.resize(grid.nodes());
    for (std::size_t k = 0; k < grid.nodes(); ++k) b.q[k] = b.theta[k] / b.S[k];
    return b;
}

StrategyFn optimal_cash_strategy(const ModelParams& p, const CoefBundle& c,
                                 const DriftSpec& drift) {
    return [p, c, drift](const TimeGrid& grid, const std::vector<double>& W,
                         const std::vector<double>&) {
        StrategyPaths sp;
        sp.theta = drift.is_zero() ? optimal_position_path(p, c, grid, W)
                                   : optimal_position_path_drift(p, c, grid, drift, W);
        sp.u = optimal_control_path(p, c, grid, sp.theta, W, drift);
        return sp;
    };
}

StrategyFn gatheral_cash_strategy(const ModelParams& p, double S0) {
    const double q0 = p.theta0 / S0;
    return [p, q0](const TimeGrid& grid, const std::vector<double>& W,
                   const std::vector<double>& S) {
        StrategyPaths sp;
        const std::vector<double> q = gatheral_share_path(q0, p.kappa, grid, S);
        sp.theta.resize(grid.nodes());
        for (std::size_t k = 0; k < grid.nodes(); ++k) sp.theta[k] = q[k] * S[k];
        sp.u = implied_control_path(p.sigma, grid, sp.theta, W);
        return sp;
    };
}

StrategyFn linear_cash_strategy(const ModelParams& p) {
    return [p](const TimeGrid& grid, const std::vector<double>& W,
               const std::vector<double>&) {
        StrategyPaths sp;
        sp.theta.resize(grid.nodes());
        for (std::size_t k = 0; k < grid.nodes(); ++k)
            sp.theta[k] = p.theta0 * (grid.T - grid.time(k)) / grid.T;
        sp.theta[grid.n_steps] = 0.0;
        sp.u = implied_control_path(p.sigma, grid, sp.theta, W);
        return sp;
    };
}

namespace {

double objective_one_path(const ModelParams& p, const TimeGrid& grid, const DriftSpec& drift,
                          const StrategyPaths& sp) {
    check_nodes(grid, sp.theta, "strategy theta");
    check_nodes(grid, sp.u, "strategy u");
    const std::size_t n = grid.n_steps;
    const double dt = grid.dt();
    const double half_lambda = 0.5 * p.lambda;
    const double half_ks2 = 0.5 * p.kappa * p.sigma * p.sigma;
    double integral = 0.0;
    for (std::size_t k = 0; k <= n; ++k) {
        const double alpha =
            drift.is_zero() ? 0.0 : drift.alpha_at(grid.time(k), k, grid.nodes());
        const double integrand = alpha * sp.theta[k] - half_lambda * sp.u[k] * sp.u[k] -
                                 half_ks2 * sp.theta[k] * sp.theta[k];
        integral += (k == 0 || k == n) ? 0.5 * dt * integrand : dt * integrand;
    }
    if (p.penalty_is_infinite()) {
        if (sp.theta[n] != 0.0)
            throw EvaluationError(
                "objective with a = infinite requires exact terminal liquidation, got theta_T = " +
                std::to_string(sp.theta[n]));
        return integral;
    }
    return integral - 0.5 * p.a * sp.theta[n] * sp.theta[n];
}

}  // namespace

std::vector<McEstimate> objective_mc_crn(const ModelParams& p, const TimeGrid& grid,
                                         const std::vector<StrategyFn>& strategies,
                                         std::size_t n_paths, std::uint64_t master_seed,
                                         double S0, const DriftSpec& drift) {
    if (strategies.empty() || n_paths == 0)
        throw InputError("objective_mc: need at least one strategy and one path");
    std::vector<double> sum(strategies.size(), 0.0);
    std::vector<double> sum_sq(strategies.size(), 0.0);
    for (std::size_t ip = 0; ip < n_paths; ++ip) {
        const std::uint64_t seed = derive_stream_seed(master_seed, ip);
        const std::vector<double> W = sample_brownian(grid, seed);
        const std::vector<double> S = gbm_price_path(S0, p.sigma, grid, W);
        for (std::size_t is = 0; is < strategies.size(); ++is) {
            const double j = objective_one_path(p, grid, drift, strategies[is](grid, W, S));
            sum[is] += j;
            sum_sq[is] += j * j;
        }
    }
    std::vector<McEstimate> out(strategies.size());
    const double np = static_cast<double>(n_paths);
    for (std::size_t is = 0; is < strategies.size(); ++is) {
        const double mean = sum[is] / np;
        double var = 0.0;
        if (n_paths > 1) var = std::max(0.0, (sum_sq[is] - np * mean * mean) / (np - 1.0));
        out[is] = McEstimate{mean, std::sqrt(var / np), n_paths};
    }
    return out;
}

McEstimate objective_mc(const ModelParams& p, const TimeGrid& grid, const StrategyFn& strategy,
                        std::size_t n_paths, std::uint64_t master_seed, double S0,
                        const DriftSpec& drift) {
    return objective_mc_crn(p, grid, {strategy}, n_paths, master_seed, S0, drift)[0];
}

}  // namespace liquidex
