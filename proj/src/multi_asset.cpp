#include "liquidex/multi_asset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace liquidex {

Eigen::VectorXd OdeState::pack() const {
    const Eigen::Index n = v.size();
    Eigen::VectorXd x(static_cast<Eigen::Index>(packed_size(n)));
    x.head(n) = v;
    x.segment(n, n) = z;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) x(zx_offset(n, i, j)) = zx(i, j);
    return x;
}

OdeState OdeState::unpack(const Eigen::VectorXd& x, Eigen::Index n) {
    if (x.size() != static_cast<Eigen::Index>(packed_size(n)))
        throw InputError("OdeState: packed vector has wrong size");
    OdeState s;
    s.v = x.head(n);
    s.z = x.segment(n, n);
    s.zx = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) s.zx(i, j) = x(zx_offset(n, i, j));
    return s;
}

Eigen::MatrixXd build_system_matrix(const MultiAssetParams& mp) {
    mp.validate();
    const Eigen::Index n = mp.n_assets();
    const Eigen::MatrixXd cov = mp.covariance();
    const Eigen::Index dim = static_cast<Eigen::Index>(OdeState::packed_size(n));
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(dim, dim);
    for (Eigen::Index i = 0; i < n; ++i) {
        // v'^i row
        M(i, n + i) = mp.kappa * cov(i, i) / mp.lambda;
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) M(i, OdeState::zx_offset(n, i, j)) = mp.kappa * cov(i, j) / mp.lambda;
        // z'^i row
        M(n + i, i) = 1.0;
        M(n + i, n + i) = cov(i, i);
        // z'^{i,j} rows
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            const Eigen::Index r = OdeState::zx_offset(n, i, j);
            M(r, r) = cov(i, j);
            M(r, j) = 1.0;
        }
    }
    return M;
}

namespace {

// Pade-13 scaling-and-squaring kernel.
Eigen::MatrixXd expm_pade13(Eigen::MatrixXd A) {
    static const double b[14] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
                                 1187353796428800.0,  129060195264000.0,   10559470521600.0,
                                 670442572800.0,      33522128640.0,       1323241920.0,
                                 40840800.0,          960960.0,            16380.0,
                                 182.0,               1.0};
    constexpr double theta13 = 5.371920351148152;
    const Eigen::Index n = A.rows();
    const double norm = A.cwiseAbs().colwise().sum().maxCoeff();  // induced 1-norm
    int squarings = 0;
    if (norm > theta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm / theta13)));
        A /= std::ldexp(1.0, squarings);
    }
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd A2 = A * A;
    const Eigen::MatrixXd A4 = A2 * A2;
    const Eigen::MatrixXd A6 = A4 * A2;
    const Eigen::MatrixXd U =
        A * (A6 * (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 +
             b[1] * I);
    const Eigen::MatrixXd V =
        A6 * (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * I;
    Eigen::MatrixXd E = (V - U).partialPivLu().solve(V + U);
    for (int k = 0; k < squarings; ++k) E = E * E;
    return E;
}

}  // namespace

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& M, double s) {
    if (M.rows() != M.cols()) throw InputError("matrix_exponential: matrix must be square");
    if (!M.allFinite() || !std::isfinite(s))
        throw NumericError("matrix_exponential: non-finite input");
    Eigen::MatrixXd E = expm_pade13(M * s);
    if (!E.allFinite())
        throw NumericError("matrix_exponential: overflow, ||M s||_1 = " +
                           std::to_string((M * s).cwiseAbs().colwise().sum().maxCoeff()));
    return E;
}

namespace {

// Derivative of the inverse value matrix S = P^{-1} along
//   P' = P^2/lambda - kappa Sigma - P o Sigma,
// i.e. S' = -I/lambda + kappa S Sigma S + S (S^{-1} o Sigma) S.
// S stays symmetric positive definite and, unlike P, is smooth through the
// terminal boundary layer when a is large.
class InverseValueFlow {
public:
    InverseValueFlow(const MultiAssetParams& mp)
        : lambda_(mp.lambda), kappa_(mp.kappa), cov_(mp.covariance()),
          eye_(Eigen::MatrixXd::Identity(mp.n_assets(), mp.n_assets())) {}

    Eigen::MatrixXd derivative(const Eigen::MatrixXd& S, double t) const {
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw NumericError("feedback gain: value matrix lost positive definiteness at t = " +
                               std::to_string(t));
        const Eigen::MatrixXd Sinv = llt.solve(eye_);
        return -eye_ / lambda_ + kappa_ * S * cov_ * S + S * Sinv.cwiseProduct(cov_) * S;
    }

    Eigen::MatrixXd rk4_back_step(const Eigen::MatrixXd& S, double t, double h) const {
        const Eigen::MatrixXd k1 = derivative(S, t);
        const Eigen::MatrixXd k2 = derivative(S - 0.5 * h * k1, t - 0.5 * h);
        const Eigen::MatrixXd k3 = derivative(S - 0.5 * h * k2, t - 0.5 * h);
        const Eigen::MatrixXd k4 = derivative(S - h * k3, t - h);
        Eigen::MatrixXd next = S - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        return 0.5 * (next + next.transpose());
    }

    Eigen::MatrixXd gain_from(const Eigen::MatrixXd& S, double t) const {
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw NumericError("feedback gain: value matrix lost positive definiteness at t = " +
                               std::to_string(t));
        return -llt.solve(eye_) / lambda_;
    }

private:
    double lambda_, kappa_;
    Eigen::MatrixXd cov_;
    Eigen::MatrixXd eye_;
};

// One backward sweep from T, emitting gains at the requested times
// (strictly ascending input; visited in descending order).
std::vector<GainMatrix> riccati_gain_sweep(const MultiAssetParams& mp,
                                           const std::vector<double>& times) {
    mp.validate();
    for (std::size_t i = 0; i < times.size(); ++i) {
        if (!(times[i] >= 0.0) || !(times[i] < mp.T))
            throw TimeDomainError("feedback gain time " + std::to_string(times[i]) +
                                  " outside [0, T)");
        if (i > 0 && !(times[i] > times[i - 1]))
            throw InputError("feedback gain query times must be strictly ascending");
    }
    const InverseValueFlow flow(mp);
    const double h_max = std::min(1e-3, mp.T / 1000.0);
    Eigen::MatrixXd S =
        Eigen::MatrixXd::Identity(mp.n_assets(), mp.n_assets()) / mp.a;
    double t = mp.T;
    std::vector<GainMatrix> out(times.size());
    for (std::size_t qi = times.size(); qi-- > 0;) {
        const double target = times[qi];
        while (t > target + 1e-14 * mp.T) {
            const double h = std::min(h_max, t - target);
            S = flow.rk4_back_step(S, t, h);
            t -= h;
        }
        out[qi] = GainMatrix{target, flow.gain_from(S, target)};
    }
    return out;
}

}  // namespace

GainMatrix solve_feedback_gain(const MultiAssetParams& mp, double t0) {
    return riccati_gain_sweep(mp, {t0})[0];
}

std::vector<GainMatrix> feedback_gain_schedule(const MultiAssetParams& mp, const TimeGrid& grid) {
    if (std::abs(grid.T - mp.T) > 1e-12 * mp.T)
        throw InputError("feedback_gain_schedule: grid horizon differs from model horizon");
    std::vector<double> times(grid.n_steps);
    for (std::size_t k = 0; k < grid.n_steps; ++k) times[k] = grid.time(k);
    return riccati_gain_sweep(mp, times);
}

GainMatrix adjoint_bvp_gain(const MultiAssetParams& mp, double t0, double condition_limit) {
    mp.validate();
    if (!(t0 >= 0.0) || !(t0 < mp.T))
        throw TimeDomainError("adjoint_bvp_gain: t0 must lie in [0, T)");
    const Eigen::Index n = mp.n_assets();
    const Eigen::Index dim = static_cast<Eigen::Index>(OdeState::packed_size(n));
    const Eigen::MatrixXd M = build_system_matrix(mp);
    const Eigen::MatrixXd E = matrix_exponential(M, mp.T - t0);

    // Boundary rows, scaled for conditioning: (lambda/a) v(T) + z(T) = 0.
    Eigen::MatrixXd bc = Eigen::MatrixXd::Zero(n, dim);
    bc.block(0, 0, n, n) = (mp.lambda / mp.a) * Eigen::MatrixXd::Identity(n, n);
    bc.block(0, n, n, n) = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd phi = bc * E;

    // Known part of the t0 state as a linear image of theta(t0):
    // z(t0) = theta, z^{i,j}(t0) = theta_j.
    Eigen::MatrixXd rest_of_theta = Eigen::MatrixXd::Zero(dim - n, n);
    rest_of_theta.block(0, 0, n, n) = Eigen::MatrixXd::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (j != i) rest_of_theta(OdeState::zx_offset(n, i, j) - n, j) = 1.0;

    const Eigen::MatrixXd phi_v = phi.leftCols(n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(phi_v, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smin = svd.singularValues()(n - 1);
    const double smax = svd.singularValues()(0);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (cond > condition_limit)
        throw ConditioningError("adjoint_bvp_gain: reduced system condition estimate " +
                                    std::to_string(cond) + " exceeds limit",
                                cond);
    GainMatrix g;
    g.t = t0;
    g.G = -svd.solve(phi.rightCols(dim - n) * rest_of_theta);
    return g;
}

MultiPaths simulate_multi(const MultiAssetParams& mp, const std::vector<GainMatrix>& schedule,
                          const TimeGrid& grid, std::uint64_t seed) {
    mp.validate();
    const Eigen::Index n = mp.n_assets();
    if (schedule.size() != grid.n_steps)
        throw InputError("simulate_multi: gain schedule has " + std::to_string(schedule.size()) +
                         " entries, grid has " + std::to_string(grid.n_steps) + " steps");
    for (std::size_t k = 0; k < schedule.size(); ++k)
        if (std::abs(schedule[k].t - grid.time(k)) > 1e-12 * std::max(1.0, grid.T))
            throw InputError("simulate_multi: gain schedule times do not match the grid");

    Eigen::LLT<Eigen::MatrixXd> llt(mp.rho);
    if (llt.info() != Eigen::Success)
        throw ParameterError("simulate_multi: correlation matrix has no Cholesky factor");
    const Eigen::MatrixXd L = llt.matrixL();

    // One independent raw normal stream per asset, mixed by L afterwards, so
    // uncorrelated assets consume disjoint randomness. Each engine gets its own
    // distribution object: the polar method caches a second variate and a
    // shared one would leak draws across streams.
    std::vector<std::mt19937_64> engines;
    std::vector<std::normal_distribution<double>> gauss(static_cast<std::size_t>(n),
                                                        std::normal_distribution<double>(0.0, 1.0));
    engines.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i)
        engines.emplace_back(derive_stream_seed(seed, static_cast<std::uint64_t>(i)));

    const double dt = grid.dt();
    const double sqrt_dt = std::sqrt(dt);
    MultiPaths mpth;
    mpth.theta.resize(grid.nodes(), n);
    mpth.u.resize(grid.n_steps, n);
    mpth.theta.row(0) = mp.theta0.transpose();
    Eigen::VectorXd raw(n), dW(n), theta = mp.theta0;
    for (std::size_t k = 0; k < grid.n_steps; ++k) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto idx = static_cast<std::size_t>(i);
            raw(i) = gauss[idx](engines[idx]);
        }
        dW = sqrt_dt * (L * raw);
        const Eigen::VectorXd u = schedule[k].G * theta;
        mpth.u.row(k) = u.transpose();
        theta += u * dt + (mp.sigma.array() * theta.array() * dW.array()).matrix();
        mpth.theta.row(k + 1) = theta.transpose();
    }
    mpth.terminal_abs = theta.cwiseAbs();
    return mpth;
}

}  // namespace liquidex
