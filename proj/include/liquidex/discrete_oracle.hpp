#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "liquidex/model.hpp"
#include "liquidex/multi_asset_params.hpp"

namespace liquidex {

// Discrete-time dynamic-programming oracles. Everything here is derived from
// first principles of the discretized objective and never touches the
// closed-form module, so agreement between the two is meaningful evidence.

/// Backward LQ solution of the discretized problem. The value function at step
/// k is V_k(theta) = -p_k theta^2/2 + b_k theta + cst_k and the optimal control
/// u_k = g_k theta + h_k.
struct OracleSolution {
    std::size_t n = 0;
    std::vector<double> p;    ///< n+1 quadratic value coefficients, p_n = a
    std::vector<double> b;    ///< n+1 affine value coefficients, zero without drift
    std::vector<double> cst;  ///< n+1 constant value terms
    std::vector<double> g;    ///< n feedback gains
    std::vector<double> h;    ///< n affine control offsets

    double value_at(double theta0) const {
        return -0.5 * p[0] * theta0 * theta0 + b[0] * theta0 + cst[0];
    }
};

/// Discrete scalar LQ recursion for
///   theta_{k+1} = theta_k (1 + sigma dW_k) + u_k dt,
///   reward per step (alpha_k theta_k - (lambda/2) u_k^2 - (kappa sigma^2/2) theta_k^2) dt,
///   terminal -(a/2) theta_n^2,
/// derived by backward induction on V_k(theta) = -p_k theta^2/2 + b_k theta + cst_k.
///
/// With E[theta_{k+1}] = theta + u dt and E[theta_{k+1}^2] = (theta + u dt)^2
/// + sigma^2 theta^2 dt, maximizing over u gives
///   u_k = (-p_{k+1} theta + b_{k+1}) / (lambda + p_{k+1} dt)
/// and collecting the theta powers of the maximized Bellman right-hand side:
///   g_k = -p_{k+1} / (lambda + p_{k+1} dt)
///   h_k =  b_{k+1} / (lambda + p_{k+1} dt)
///   p_k = kappa sigma^2 dt + p_{k+1} (1 + sigma^2 dt) + g_k p_{k+1} dt
///   b_k = alpha_k dt + b_{k+1} (1 + g_k dt)
///   cst_k = cst_{k+1} + h_k dt (b_{k+1} - p_{k+1} h_k dt / 2) - lambda h_k^2 dt / 2.
///
/// Requires a finite terminal weight; drift must be zero or deterministic.
OracleSolution scalar_riccati(const ModelParams& p, std::size_t n,
                              const DriftSpec& drift = DriftSpec::zero());

/// Matrix version of the same recursion for N correlated assets.
/// The multiplicative-noise covariance folds in as the Hadamard term
/// (P_{k+1} o Sigma) dt, with Sigma the return covariance matrix.
struct MatrixOracleSolution {
    std::size_t n = 0;
    std::vector<Eigen::MatrixXd> P;  ///< n+1 symmetric positive-definite value matrices
    std::vector<Eigen::MatrixXd> G;  ///< n feedback gain matrices, u_k = G_k theta_k
};

MatrixOracleSolution matrix_riccati(const MultiAssetParams& mp, std::size_t n);

/// Exact DP on the binomial tree dW = +-sqrt(dt), each with probability 1/2.
/// Every node carries its own quadratic value coefficients computed by a
/// per-node closed-form minimization, with no sharing across nodes; all nodes
/// of a level agreeing is itself part of what the cross-checks establish.
struct BinomialNode {
    double p = 0.0, b = 0.0, c = 0.0;      ///< value quadratic at this node
    double gain = 0.0, offset = 0.0;       ///< optimal control u = gain*theta + offset
};

struct BinomialTreeResult {
    std::size_t depth = 0;
    double dt = 0.0;
    double sigma = 0.0;
    std::vector<std::vector<BinomialNode>> levels;  ///< levels[k] has 2^k nodes

    double root_value(double theta0) const {
        const BinomialNode& r = levels[0][0];
        return -0.5 * r.p * theta0 * theta0 + r.b * theta0 + r.c;
    }

    /// Controls along the tree for a given starting position (forward walk).
    std::vector<std::vector<double>> optimal_controls(double theta0) const;
};

BinomialTreeResult binomial_tree_dp(const ModelParams& p, std::size_t depth,
                                    const DriftSpec& drift = DriftSpec::zero());

/// Exact expected objective of an arbitrary per-node control plan on the tree.
double binomial_policy_value(const ModelParams& p, std::size_t depth, const DriftSpec& drift,
                             const std::vector<std::vector<double>>& controls, double theta0);

/// Convergence study of the discrete gains toward the closed-form feedback gain
/// (and, with a constant drift, of the affine offset toward the drift offset).
struct GainConvergenceRow {
    std::size_t n = 0;
    double max_gain_rel_err = 0.0;  ///< max over t_k <= t_cap of |g_k - Gamma(t_k)|/|Gamma(t_k)|
    double offset_rel_err = 0.0;    ///< |h_0 - nu(0)|/|nu(0)|, NaN when no drift
};

struct GainConvergenceReport {
    std::vector<GainConvergenceRow> rows;
    double fitted_order = 0.0;  ///< least-squares slope of log(err) against log(1/n)
    double a = 0.0;
    double alpha = 0.0;
    double t_cap_fraction = 0.0;
};

GainConvergenceReport gain_convergence_report(const ModelParams& base,
                                              const std::vector<std::size_t>& n_list, double a,
                                              double alpha = 0.0, double t_cap_fraction = 0.9);

}  // namespace liquidex
