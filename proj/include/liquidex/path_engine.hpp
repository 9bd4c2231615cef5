#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "liquidex/closed_form.hpp"
#include "liquidex/model.hpp"

namespace liquidex {

/// Uniform grid 0 = t_0 < t_1 < ... < t_n = T with t_k = T*k/n (t_n is exactly T).
struct TimeGrid {
    double T = 0.0;
    std::size_t n_steps = 0;

    static TimeGrid uniform(double T, std::size_t n_steps) {
        if (!(T > 0.0) || n_steps < 1)
            throw ParameterError("TimeGrid: need T > 0 and n_steps >= 1");
        return TimeGrid{T, n_steps};
    }

    double dt() const { return T / static_cast<double>(n_steps); }
    std::size_t nodes() const { return n_steps + 1; }
    double time(std::size_t k) const { return T * static_cast<double>(k) / static_cast<double>(n_steps); }
    std::vector<double> times() const {
        std::vector<double> ts(nodes());
        for (std::size_t k = 0; k < nodes(); ++k) ts[k] = time(k);
        return ts;
    }
};

/// One simulated scenario: Brownian path, price, cash position, trading rate,
/// and share position, all sampled on the same grid.
struct PathBundle {
    TimeGrid grid;
    std::uint64_t seed = 0;
    std::vector<double> W;      ///< Brownian values, W[0] = 0
    std::vector<double> S;      ///< price path, $
    std::vector<double> theta;  ///< cash position, $
    std::vector<double> u;      ///< trading rate, $/time
    std::vector<double> q;      ///< share position, theta/S
};

/// Deterministic per-stream seed derivation: hash of (master seed, stream index).
/// Streams with distinct indices are statistically independent.
std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t stream);

/// Brownian path at the grid nodes. Same (grid, seed) always yields the same path.
std::vector<double> sample_brownian(const TimeGrid& grid, std::uint64_t seed);

/// Driftless GBM evaluated exactly: S_k = S0 * exp(sigma*W_k - sigma^2 t_k / 2).
std::vector<double> gbm_price_path(double S0, double sigma, const TimeGrid& grid,
                                   const std::vector<double>& W);

/// Optimal cash position under zero drift, exact scheme:
///   theta_k = theta0 * (D(t_k)/D(0)) * exp(-sigma^2 t_k/2 + sigma W_k),
/// with theta_n = 0 exactly (D(T) = 0).
std::vector<double> optimal_position_path(const ModelParams& p, const CoefBundle& c,
                                          const TimeGrid& grid, const std::vector<double>& W);

/// Optimal cash position under a drift, by variation of constants:
///   theta_t = H_t * (theta0 + integral_0^t H_s^{-1} nu(s) ds),
/// H_t = (D(t)/D(0)) exp(-sigma^2 t/2 + sigma W_t), trapezoid integral on the
/// grid, theta_n = 0 (H(T) = 0 kills every term).
std::vector<double> optimal_position_path_drift(const ModelParams& p, const CoefBundle& c,
                                                const TimeGrid& grid, const DriftSpec& drift,
                                                const std::vector<double>& W);

/// Optimal trading rate along a position path: u_k = Gamma(t_k) theta_k + nu(t_k)
/// for k < n. At the horizon the 0 * inf product is evaluated in product form,
///   u_n = (D'(T)/D(0)) * exp(-sigma^2 T/2 + sigma W_n) * theta0   (zero drift),
/// with the drift case adding the extrapolated nu limit (see implementation).
std::vector<double> optimal_control_path(const ModelParams& p, const CoefBundle& c,
                                         const TimeGrid& grid, const std::vector<double>& theta,
                                         const std::vector<double>& W,
                                         const DriftSpec& drift = DriftSpec::zero());

/// Share-denominated benchmark q*_t = ((T-t)/T) (q0 - (kappa T/4) int_0^t S_u du),
/// cumulative integral by trapezoid.
std::vector<double> gatheral_share_path(double q0, double kappa, const TimeGrid& grid,
                                        const std::vector<double>& S);

/// Residual conversion of a cash position path into a trading rate:
/// u_k = (theta_{k+1} - theta_k - theta_k sigma dW_k) / dt, flat at the last node.
/// This is the discrete residual of d(theta) = u dt + sigma theta dW; exact only
/// as dt -> 0, used to evaluate position-specified benchmark strategies.
std::vector<double> implied_control_path(double sigma, const TimeGrid& grid,
                                         const std::vector<double>& theta,
                                         const std::vector<double>& W);

/// Full scenario for one seed: W, S, optimal theta/u and the share position.
PathBundle simulate_optimal_bundle(const ModelParams& p, const CoefBundle& c,
                                   const TimeGrid& grid, double S0, std::uint64_t seed,
                                   const DriftSpec& drift = DriftSpec::zero());

/// A strategy maps a scenario (grid, W, S) to its cash position and trading rate.
struct StrategyPaths {
    std::vector<double> theta;
    std::vector<double> u;
};
using StrategyFn =
    std::function<StrategyPaths(const TimeGrid&, const std::vector<double>& W,
                                const std::vector<double>& S)>;

/// Ready-made strategies for the objective comparisons.
StrategyFn optimal_cash_strategy(const ModelParams& p, const CoefBundle& c,
                                 const DriftSpec& drift = DriftSpec::zero());
StrategyFn gatheral_cash_strategy(const ModelParams& p, double S0);
StrategyFn linear_cash_strategy(const ModelParams& p);

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n_paths = 0;
};

/// Monte-Carlo estimate of the objective
///   E[ int_0^T (alpha_t theta_t - (lambda/2) u_t^2 - (kappa sigma^2/2) theta_t^2) dt
///      - (a/2) theta_T^2 ]
/// with trapezoid time integration. When p.a is infinite the terminal penalty is
/// dropped, which requires theta_T == 0 exactly; otherwise EvaluationError.
McEstimate objective_mc(const ModelParams& p, const TimeGrid& grid, const StrategyFn& strategy,
                        std::size_t n_paths, std::uint64_t master_seed, double S0,
                        const DriftSpec& drift = DriftSpec::zero());

/// Same, for several strategies evaluated on common random numbers (same W and S
/// per path for every strategy), which is how strategies should be compared.
std::vector<McEstimate> objective_mc_crn(const ModelParams& p, const TimeGrid& grid,
                                         const std::vector<StrategyFn>& strategies,
                                         std::size_t n_paths, std::uint64_t master_seed,
                                         double S0, const DriftSpec& drift = DriftSpec::zero());

}  // namespace liquidex
