#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "liquidex/errors.hpp"

namespace liquidex {

/// Parameters of the N-asset liquidation problem. Costs and risk weights are
/// shared scalars (lambda, kappa); each asset has its own volatility, and the
/// Brownian drivers are correlated through `rho`.
struct MultiAssetParams {
    Eigen::VectorXd sigma;  ///< per-asset volatilities, all positive
    Eigen::MatrixXd rho;    ///< correlation matrix of the Brownian drivers
    double lambda = 0.2;
    double kappa = 0.2;
    double T = 20.0;
    double a = 1e8;             ///< finite terminal penalty weight
    Eigen::VectorXd theta0;     ///< initial cash positions, $

    Eigen::Index n_assets() const { return sigma.size(); }

    /// Return covariance Sigma_ij = sigma_i sigma_j rho_ij.
    Eigen::MatrixXd covariance() const {
        return rho.cwiseProduct(sigma * sigma.transpose());
    }

    void validate() const {
        const Eigen::Index n = sigma.size();
        if (n < 1) throw ParameterError("MultiAssetParams: need at least one asset");
        if ((sigma.array() <= 0.0).any())
            throw ParameterError("MultiAssetParams: all sigma must be positive");
        if (rho.rows() != n || rho.cols() != n)
            throw ParameterError("MultiAssetParams: rho must be N x N");
        if (theta0.size() != n)
            throw ParameterError("MultiAssetParams: theta0 must have N entries");
        if (!(lambda > 0.0) || !(kappa > 0.0) || !(T > 0.0))
            throw ParameterError("MultiAssetParams: lambda, kappa, T must be positive");
        if (!(a > 0.0) || !std::isfinite(a))
            throw ParameterError("MultiAssetParams: a must be positive and finite");
        if (!rho.isApprox(rho.transpose(), 1e-12))
            throw ParameterError("MultiAssetParams: rho must be symmetric");
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(rho(i, i) - 1.0) > 1e-12)
                throw ParameterError("MultiAssetParams: rho must have unit diagonal");
        }
        if ((rho.array().abs() > 1.0 + 1e-12).any())
            throw ParameterError("MultiAssetParams: correlations must lie in [-1, 1]");
        // A usable correlation structure must give a positive-definite covariance.
        Eigen::LLT<Eigen::MatrixXd> llt(covariance());
        if (llt.info() != Eigen::Success)
            throw ParameterError("MultiAssetParams: covariance matrix is singular or indefinite");
    }
};

}  // namespace liquidex
