#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "liquidex/multi_asset_params.hpp"
#include "liquidex/path_engine.hpp"

namespace liquidex {

// N-asset liquidation: time-dependent feedback gain G(t) with u(t) = G(t) theta(t),
// plus correlated path simulation.
//
// Two routes to the gain are provided.
//
//   * solve_feedback_gain / feedback_gain_schedule integrate the generalized
//     value Riccati equation P' = P^2/lambda - kappa Sigma - P o Sigma,
//     P(T) = a I, via its inverse S = P^{-1} (smooth through the terminal
//     boundary layer even for a ~ 1e8), G = -P/lambda. This is the module's
//     gain: it is exact for every correlation structure and is what the
//     discrete matrix-LQ oracle converges to.
//
//   * adjoint_bvp_gain propagates the first-order-condition linear ODE system
//     (see build_system_matrix) with a matrix exponential and imposes the mixed
//     boundary conditions. For a single asset and for uncorrelated assets it
//     agrees with the Riccati route to full precision; for correlated assets
//     the linear system's cross-measure closure is only approximate and its
//     off-diagonal gains deviate by several percent (kept as a diagnostic
//     surface, cross-checked in the tests).

/// State of the first-order-condition linear system: controls v^i, own-asset
/// accumulators z^i and cross accumulators z^{i,j} (j != i), packed as
/// [v (N) | z (N) | zx (N(N-1))] with zx ordered by (i, then j skipping i).
struct OdeState {
    Eigen::VectorXd v;   ///< N
    Eigen::VectorXd z;   ///< N
    Eigen::MatrixXd zx;  ///< N x N, diagonal unused (z^{i,i} is z^i)

    static std::size_t packed_size(Eigen::Index n) {
        return static_cast<std::size_t>(n * n + n);
    }
    static Eigen::Index zx_offset(Eigen::Index n, Eigen::Index i, Eigen::Index j) {
        return 2 * n + i * (n - 1) + (j < i ? j : j - 1);
    }

    Eigen::VectorXd pack() const;
    static OdeState unpack(const Eigen::VectorXd& x, Eigen::Index n);
};

/// Constant coefficient matrix M of the first-order-condition system
///   v'^i = (kappa sigma_i^2/lambda) z^i + (kappa/lambda) sum_{j!=i} rho_ij sigma_i sigma_j z^{i,j}
///   z'^i = sigma_i^2 z^i + v^i
///   z'^{i,j} = sigma_i sigma_j rho_ij z^{i,j} + v^j
Eigen::MatrixXd build_system_matrix(const MultiAssetParams& mp);

/// exp(M s) by scaling-and-squaring with a Pade kernel.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double s);

struct GainMatrix {
    double t = 0.0;
    Eigen::MatrixXd G;  ///< u(t) = G(t) * theta(t)
};

/// Feedback gain at one time from the generalized Riccati value equation.
GainMatrix solve_feedback_gain(const MultiAssetParams& mp, double t0);

/// Gains at grid nodes t_0..t_{n-1}, computed in one backward sweep.
std::vector<GainMatrix> feedback_gain_schedule(const MultiAssetParams& mp, const TimeGrid& grid);

/// Feedback gain from the linear first-order-condition system: propagate the
/// packed state with E = exp(M (T - t0)), impose (lambda/a) v(T) + z(T) = 0 and
/// the t0-side conditions z(t0) = theta, z^{i,j}(t0) = theta_j, and solve the
/// reduced N x N system for v(t0) column by column. Throws ConditioningError
/// (with the condition estimate) when the reduced system cannot be trusted.
GainMatrix adjoint_bvp_gain(const MultiAssetParams& mp, double t0,
                            double condition_limit = 1e12);

/// Correlated Euler simulation theta_{k+1} = theta_k + G(t_k) theta_k dt
/// + diag(sigma) theta_k o dW_k, with Cov(dW) = rho dt. Asset i's raw normal
/// stream is derived from (seed, i), so with rho = 0 asset paths are driven by
/// fully independent streams.
struct MultiPaths {
    Eigen::MatrixXd theta;          ///< (n+1) x N cash positions
    Eigen::MatrixXd u;              ///< n x N trading rates applied on each step
    Eigen::VectorXd terminal_abs;   ///< |theta_n| per asset
};

MultiPaths simulate_multi(const MultiAssetParams& mp, const std::vector<GainMatrix>& schedule,
                          const TimeGrid& grid, std::uint64_t seed);

}  // namespace liquidex
