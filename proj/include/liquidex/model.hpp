#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "liquidex/errors.hpp"

namespace liquidex {

/// Single-asset market, cost and risk parameters.
///
/// Positions and controls are denominated in cash: theta_t = q_t * S_t is the
/// dollar value of the holding and u_t = qdot_t * S_t the trading rate in
/// dollars per unit time. `a` is the terminal penalty weight; an infinite `a`
/// selects the exact-liquidation limit formulas.
struct ModelParams {
    double lambda = 0.2;  ///< temporary cost coefficient ($*time per $^2 traded rate)
    double kappa = 0.2;   ///< risk-aversion weight on the quadratic-variation penalty
    double sigma = 0.1;   ///< volatility, per sqrt(time unit)
    double T = 20.0;      ///< horizon, time units
    double theta0 = 1e5;  ///< initial cash position, $
    double a = std::numeric_limits<double>::infinity();  ///< terminal penalty weight

    bool penalty_is_infinite() const { return std::isinf(a); }

    void validate() const {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ParameterError("ModelParams: lambda must be positive, got " + std::to_string(lambda));
        if (!(kappa > 0.0) || !std::isfinite(kappa))
            throw ParameterError("ModelParams: kappa must be positive, got " + std::to_string(kappa));
        if (!(sigma > 0.0) || !std::isfinite(sigma))
            throw ParameterError("ModelParams: sigma must be positive, got " + std::to_string(sigma));
        if (!(T > 0.0) || !std::isfinite(T))
            throw ParameterError("ModelParams: T must be positive, got " + std::to_string(T));
        if (!std::isfinite(theta0))
            throw ParameterError("ModelParams: theta0 must be finite");
        if (!(a > 0.0))
            throw ParameterError("ModelParams: a must be positive or infinite, got " + std::to_string(a));
    }
};

/// Characteristic roots of gamma^2 + sigma^2*gamma - kappa*sigma^2/lambda = 0
/// together with the discriminant and the horizon needed to evaluate the
/// liquidation denominator D(t) = exp(gamma1*t + gamma2*T) - exp(gamma1*T + gamma2*t).
struct CoefBundle {
    double gamma1 = 0.0;  ///< negative root
    double gamma2 = 0.0;  ///< positive root
    double delta = 0.0;   ///< discriminant, sigma^2 * (sigma^2 + 4*kappa/lambda)
    double T = 0.0;       ///< horizon
};

/// Price drift model used by the stochastic-drift extension.
///
/// The drift enters the optimal control only through the pair
/// (alpha_t, E^Q[alpha_T | F_t]); this type supplies both along a time grid.
struct DriftSpec {
    enum class Mode { Zero, Deterministic, Scripted };

    Mode mode = Mode::Zero;
    std::function<double(double)> alpha_fn;  ///< alpha(t), Deterministic mode
    double alpha_terminal = 0.0;             ///< alpha(T), Deterministic mode
    std::vector<double> alpha_path;          ///< realized alpha at grid nodes, Scripted mode
    std::vector<double> cond_exp_path;       ///< E^Q[alpha_T | F_{t_k}] at grid nodes, Scripted mode

    static DriftSpec zero() { return DriftSpec{}; }

    /// Deterministic drift: the conditional expectation of alpha_T is alpha(T) itself.
    static DriftSpec deterministic(std::function<double(double)> fn, double T) {
        if (!fn) throw InputError("DriftSpec: deterministic mode needs a drift function");
        DriftSpec d;
        d.mode = Mode::Deterministic;
        d.alpha_terminal = fn(T);
        d.alpha_fn = std::move(fn);
        return d;
    }

    /// Scripted drift: realized path and conditional-expectation map sampled on
    /// the same grid the position paths will use (n_steps + 1 values each).
    static DriftSpec scripted(std::vector<double> alpha, std::vector<double> cond_exp) {
        if (alpha.size() != cond_exp.size() || alpha.empty())
            throw InputError("DriftSpec: scripted paths must be non-empty and equally sized");
        DriftSpec d;
        d.mode = Mode::Scripted;
        d.alpha_path = std::move(alpha);
        d.cond_exp_path = std::move(cond_exp);
        return d;
    }

    bool is_zero() const { return mode == Mode::Zero; }

    /// Realized alpha at grid node k (time t, grid of n_nodes values).
    double alpha_at(double t, std::size_t k, std::size_t n_nodes) const {
        switch (mode) {
            case Mode::Zero: return 0.0;
            case Mode::Deterministic: return alpha_fn(t);
            case Mode::Scripted:
                if (alpha_path.size() != n_nodes)
                    throw InputError("DriftSpec: scripted drift path length does not match grid");
                return alpha_path[k];
        }
        return 0.0;
    }

    /// E^Q[alpha_T | F_{t_k}] at grid node k.
    double cond_exp_T_at(std::size_t k, std::size_t n_nodes) const {
        switch (mode) {
            case Mode::Zero: return 0.0;
            case Mode::Deterministic: return alpha_terminal;
            case Mode::Scripted:
                if (cond_exp_path.size() != n_nodes)
                    throw InputError("DriftSpec: scripted drift path length does not match grid");
                return cond_exp_path[k];
        }
        return 0.0;
    }
};

}  // namespace liquidex
