#include "liquidex/discrete_oracle.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "liquidex/closed_form.hpp"

namespace liquidex {

namespace {

double drift_value(const DriftSpec& drift, double t, std::size_t k, std::size_t nodes) {
    switch (drift.mode) {
        case DriftSpec::Mode::Zero: return 0.0;
        case DriftSpec::Mode::Deterministic: return drift.alpha_fn(t);
        case DriftSpec::Mode::Scripted:
            throw InputError("discrete oracle: scripted drifts are not supported, "
                             "use zero or deterministic mode");
    }
    (void)k;
    (void)nodes;
    return 0.0;
}

// The discrete recursions are meaningful on a slightly wider domain than the
// closed form: kappa = 0 and a = 0 are legitimate degenerate cases.
void check_oracle_params(const ModelParams& p, const char* who) {
    if (!(p.lambda > 0.0) || !(p.sigma > 0.0) || !(p.T > 0.0))
        throw ParameterError(std::string(who) + ": lambda, sigma, T must be positive");
    if (!(p.kappa >= 0.0))
        throw ParameterError(std::string(who) + ": kappa must be non-negative");
    if (!(p.a >= 0.0) || p.penalty_is_infinite())
        throw ParameterError(std::string(who) + ": needs a finite terminal weight a >= 0");
}

}  // namespace

OracleSolution scalar_riccati(const ModelParams& p, std::size_t n, const DriftSpec& drift) {
    check_oracle_params(p, "scalar_riccati");
    if (n < 1) throw ParameterError("scalar_riccati: need n >= 1");
    const double dt = p.T / static_cast<double>(n);
    const double s2 = p.sigma * p.sigma;

    OracleSolution sol;
    sol.n = n;
    sol.p.assign(n + 1, 0.0);
    sol.b.assign(n + 1, 0.0);
    sol.cst.assign(n + 1, 0.0);
    sol.g.assign(n, 0.0);
    sol.h.assign(n, 0.0);
    sol.p[n] = p.a;
    for (std::size_t k = n; k-- > 0;) {
        const double pk1 = sol.p[k + 1];
        const double bk1 = sol.b[k + 1];
        const double denom = p.lambda + pk1 * dt;
        const double g = -pk1 / denom;
        const double h = bk1 / denom;
        const double t = p.T * static_cast<double>(k) / static_cast<double>(n);
        const double alpha = drift_value(drift, t, k, n + 1);
        sol.g[k] = g;
        sol.h[k] = h;
        sol.p[k] = p.kappa * s2 * dt + pk1 * (1.0 + s2 * dt) + g * pk1 * dt;
        sol.b[k] = alpha * dt + bk1 * (1.0 + g * dt);
        sol.cst[k] = sol.cst[k + 1] + h * dt * (bk1 - 0.5 * pk1 * h * dt) -
                     0.5 * p.lambda * h * h * dt;
    }
    return sol;
}

MatrixOracleSolution matrix_riccati(const MultiAssetParams& mp, std::size_t n) {
    mp.validate();
    if (n < 1) throw ParameterError("matrix_riccati: need n >= 1");
    const Eigen::Index N = mp.n_assets();
    const double dt = mp.T / static_cast<double>(n);
    const Eigen::MatrixXd cov = mp.covariance();
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(N, N);

    MatrixOracleSolution sol;
    sol.n = n;
    sol.P.assign(n + 1, Eigen::MatrixXd());
    sol.G.assign(n, Eigen::MatrixXd());
    sol.P[n] = mp.a * I;
    for (std::size_t k = n; k-- > 0;) {
        const Eigen::MatrixXd& Pk1 = sol.P[k + 1];
        Eigen::LLT<Eigen::MatrixXd> llt(mp.lambda * I + Pk1 * dt);
        if (llt.info() != Eigen::Success)
            throw NumericError("matrix_riccati: non-SPD value matrix at step " +
                               std::to_string(k));
        const Eigen::MatrixXd G = -llt.solve(Pk1);
        const Eigen::MatrixXd closed = I + G * dt;
        Eigen::MatrixXd P = mp.kappa * cov * dt + mp.lambda * G.transpose() * G * dt +
                            closed.transpose() * Pk1 * closed + Pk1.cwiseProduct(cov) * dt;
        P = 0.5 * (P + P.transpose());
        Eigen::LLT<Eigen::MatrixXd> check(P);
        if (check.info() != Eigen::Success)
            throw NumericError("matrix_riccati: non-SPD value matrix at step " +
                               std::to_string(k));
        sol.G[k] = G;
        sol.P[k] = std::move(P);
    }
    return sol;
}

std::vector<std::vector<double>> BinomialTreeResult::optimal_controls(double theta0) const {
    const double sqdt = std::sqrt(dt);
    std::vector<std::vector<double>> controls(depth);
    std::vector<double> theta_level{theta0};
    for (std::size_t k = 0; k < depth; ++k) {
        controls[k].resize(theta_level.size());
        std::vector<double> next(theta_level.size() * 2);
        for (std::size_t j = 0; j < theta_level.size(); ++j) {
            const BinomialNode& node = levels[k][j];
            const double th = theta_level[j];
            const double u = node.gain * th + node.offset;
            controls[k][j] = u;
            next[2 * j] = th * (1.0 + sigma * sqdt) + u * dt;
            next[2 * j + 1] = th * (1.0 - sigma * sqdt) + u * dt;
        }
        theta_level.swap(next);
    }
    return controls;
}

BinomialTreeResult binomial_tree_dp(const ModelParams& p, std::size_t depth,
                                    const DriftSpec& drift) {
    check_oracle_params(p, "binomial_tree_dp");
    if (depth < 1 || depth > 16)
        throw InputError("binomial_tree_dp: depth must lie in [1, 16]");
    const double dt = p.T / static_cast<double>(depth);
    const double sqdt = std::sqrt(dt);
    const double up = 1.0 + p.sigma * sqdt;
    const double dn = 1.0 - p.sigma * sqdt;
    const double s2 = p.sigma * p.sigma;

    BinomialTreeResult tree;
    tree.depth = depth;
    tree.dt = dt;
    tree.sigma = p.sigma;
    tree.levels.resize(depth + 1);
    tree.levels[depth].assign(std::size_t{1} << depth, BinomialNode{p.a, 0.0, 0.0, 0.0, 0.0});

    for (std::size_t k = depth; k-- > 0;) {
        const double t = p.T * static_cast<double>(k) / static_cast<double>(depth);
        const double alpha = drift_value(drift, t, k, depth + 1);
        tree.levels[k].resize(std::size_t{1} << k);
        for (std::size_t j = 0; j < tree.levels[k].size(); ++j) {
            const BinomialNode& cu = tree.levels[k + 1][2 * j];
            const BinomialNode& cd = tree.levels[k + 1][2 * j + 1];
            // Bellman value with equal branch weights; theta_child = e_c theta + u dt.
            // Quadratic in u, maximized in closed form.
            const double denom = p.lambda + 0.5 * (cu.p + cd.p) * dt;
            const double gain = -0.5 * (cu.p * up + cd.p * dn) / denom;
            const double offset = 0.5 * (cu.b + cd.b) / denom;
            const double eu = up + gain * dt;
            const double ed = dn + gain * dt;
            BinomialNode node;
            node.gain = gain;
            node.offset = offset;
            node.p = 0.5 * (cu.p * eu * eu + cd.p * ed * ed) + p.lambda * dt * gain * gain +
                     p.kappa * s2 * dt;
            node.b = alpha * dt - p.lambda * dt * gain * offset -
                     0.5 * (cu.p * eu + cd.p * ed) * offset * dt +
                     0.5 * (cu.b * eu + cd.b * ed);
            node.c = -0.25 * (cu.p + cd.p) * offset * offset * dt * dt +
                     0.5 * (cu.b + cd.b) * offset * dt + 0.5 * (cu.c + cd.c) -
                     0.5 * p.lambda * dt * offset * offset;
            tree.levels[k][j] = node;
        }
    }
    return tree;
}

double binomial_policy_value(const ModelParams& p, std::size_t depth, const DriftSpec& drift,
                             const std::vector<std::vector<double>>& controls, double theta0) {
    check_oracle_params(p, "binomial_policy_value");
    if (controls.size() != depth)
        throw InputError("binomial_policy_value: controls do not match the tree depth");
    const double dt = p.T / static_cast<double>(depth);
    const double sqdt = std::sqrt(dt);
    const double s2 = p.sigma * p.sigma;

    std::vector<double> theta_level{theta0};
    double value = 0.0;
    for (std::size_t k = 0; k < depth; ++k) {
        if (controls[k].size() != theta_level.size())
            throw InputError("binomial_policy_value: level " + std::to_string(k) +
                             " has the wrong node count");
        const double t = p.T * static_cast<double>(k) / static_cast<double>(depth);
        const double alpha = drift_value(drift, t, k, depth + 1);
        const double weight = 1.0 / static_cast<double>(std::size_t{1} << k);
        std::vector<double> next(theta_level.size() * 2);
        for (std::size_t j = 0; j < theta_level.size(); ++j) {
            const double th = theta_level[j];
            const double u = controls[k][j];
            value += weight * (alpha * th - 0.5 * p.lambda * u * u - 0.5 * p.kappa * s2 * th * th) * dt;
            next[2 * j] = th * (1.0 + p.sigma * sqdt) + u * dt;
            next[2 * j + 1] = th * (1.0 - p.sigma * sqdt) + u * dt;
        }
        theta_level.swap(next);
    }
    const double leaf_weight = 1.0 / static_cast<double>(std::size_t{1} << depth);
    for (double th : theta_level) value -= leaf_weight * 0.5 * p.a * th * th;
    return value;
}

GainConvergenceReport gain_convergence_report(const ModelParams& base,
                                              const std::vector<std::size_t>& n_list, double a,
                                              double alpha, double t_cap_fraction) {
    if (n_list.empty()) throw InputError("gain_convergence_report: empty refinement list");
    ModelParams p = base;
    p.a = a;
    p.validate();
    const CoefBundle c = characteristic_roots(p);
    const DriftSpec drift =
        alpha != 0.0 ? DriftSpec::deterministic([alpha](double) { return alpha; }, p.T)
                     : DriftSpec::zero();

    GainConvergenceReport report;
    report.a = a;
    report.alpha = alpha;
    report.t_cap_fraction = t_cap_fraction;
    for (std::size_t n : n_list) {
        const OracleSolution sol = scalar_riccati(p, n, drift);
        double worst = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            const double t = p.T * static_cast<double>(k) / static_cast<double>(n);
            if (t > t_cap_fraction * p.T) break;
            const double gamma = feedback_gain(c, t);
            worst = std::max(worst, std::abs(sol.g[k] - gamma) / std::abs(gamma));
        }
        double offset_err = std::numeric_limits<double>::quiet_NaN();
        if (alpha != 0.0) {
            const double nu0 = drift_offset(c, p, 0.0, alpha, alpha);
            offset_err = std::abs(sol.h[0] - nu0) / std::abs(nu0);
        }
        report.rows.push_back(GainConvergenceRow{n, worst, offset_err});
    }
    // Least-squares slope of log(err) vs log(n); the convergence order is -slope.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& row : report.rows) {
        const double x = std::log(static_cast<double>(row.n));
        const double y = std::log(row.max_gain_rel_err);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(report.rows.size());
    report.fitted_order = m > 1 ? -(m * sxy - sx * sy) / (m * sxx - sx * sx) : 0.0;
    return report;
}

}  // namespace liquidex
