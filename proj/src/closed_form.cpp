#include "liquidex/closed_form.hpp"

#include <cmath>
#include <string>

namespace liquidex {

namespace {

void check_time(const CoefBundle& c, double t) {
    if (!(t >= 0.0) || !(t <= c.T))
        throw TimeDomainError("time " + std::to_string(t) + " outside [0, " +
                              std::to_string(c.T) + "]");
}

void check_before_horizon(const CoefBundle& c, double t, const char* what) {
    check_time(c, t);
    if (t == c.T)
        throw PoleError(std::string(what) + " has a pole at t = T (D(T) = 0)");
}

// (gamma2 - gamma1) * (T - t), the gap between the two exponents of D.
double exponent_gap(const CoefBundle& c, double t) {
    return (c.gamma2 - c.gamma1) * (c.T - t);
}

}  // namespace

CoefBundle characteristic_roots(const ModelParams& p) {
    p.validate();
    const double s2 = p.sigma * p.sigma;
    const double delta = s2 * (s2 + 4.0 * p.kappa / p.lambda);
    const double root = std::sqrt(delta);
    CoefBundle c;
    c.gamma1 = 0.5 * (-s2 - root);
    c.gamma2 = 0.5 * (-s2 + root);
    c.delta = delta;
    c.T = p.T;
    return c;
}

double denominator(const CoefBundle& c, double t) {
    check_time(c, t);
    const double gap = exponent_gap(c, t);
    double value;
    if (c.gamma2 * c.T > 500.0) {
        // Large-exponent regime: extract the common factor e^{(gamma1+gamma2) T}
        // and difference the rescaled exponentials.
        const double common = (c.gamma1 + c.gamma2) * c.T;
        value = std::exp(common - c.gamma1 * (c.T - t)) * (-std::expm1(-gap));
    } else {
        value = std::exp(c.gamma1 * t + c.gamma2 * c.T) * (-std::expm1(-gap));
    }
    if (!std::isfinite(value))
        throw NumericError("denominator overflow: gamma2*T = " + std::to_string(c.gamma2 * c.T) +
                           ", t = " + std::to_string(t));
    return value;
}

double denominator_derivative(const CoefBundle& c, double t) {
    check_time(c, t);
    // D'(t) = e^{gamma1 t + gamma2 T} (gamma1 - gamma2 e^{-gap})
    const double gap = exponent_gap(c, t);
    const double value = std::exp(c.gamma1 * t + c.gamma2 * c.T) *
                         (c.gamma1 - c.gamma2 * std::exp(-gap));
    if (!std::isfinite(value))
        throw NumericError("denominator derivative overflow at t = " + std::to_string(t));
    return value;
}

double beta_inf(const CoefBundle& c, double t) {
    check_before_horizon(c, t, "beta_inf");
    return 1.0 / denominator(c, t);
}

double feedback_gain(const CoefBundle& c, double t) {
    check_before_horizon(c, t, "feedback_gain");
    // Gamma = D'/D = gamma1 - (gamma2 - gamma1) / (e^{gap} - 1), stable for any
    // parameter magnitude and reproducing the -1/(T - t) pole as gap -> 0.
    return c.gamma1 - (c.gamma2 - c.gamma1) / std::expm1(exponent_gap(c, t));
}

double feedback_gain_integral(const CoefBundle& c, double t0, double t1) {
    check_time(c, t0);
    check_time(c, t1);
    if (t1 < t0) throw TimeDomainError("feedback_gain_integral needs t0 <= t1");
    if (t0 == t1) return 0.0;
    // log D(t1) - log D(t0) with the e^{gamma2 T} factor cancelled.
    const double tail1 = std::log1p(-std::exp(-exponent_gap(c, t1)));  // -inf at t1 = T
    const double tail0 = std::log1p(-std::exp(-exponent_gap(c, t0)));
    return c.gamma1 * (t1 - t0) + tail1 - tail0;
}

double position_decay_factor(const CoefBundle& c, double t) {
    check_time(c, t);
    if (t == c.T) return 0.0;
    return std::exp(feedback_gain_integral(c, 0.0, t));
}

double terminal_control_factor(const CoefBundle& c) {
    // D'(T)/D(0) = (gamma1 - gamma2) e^{gamma1 T} / (1 - e^{-(gamma2-gamma1) T})
    return (c.gamma1 - c.gamma2) * std::exp(c.gamma1 * c.T) /
           (-std::expm1(-exponent_gap(c, 0.0)));
}

double drift_offset(const CoefBundle& c, const ModelParams& p, double t,
                    double alpha_t, double exp_alpha_T) {
    check_before_horizon(c, t, "drift_offset");
    if (alpha_t == 0.0 && exp_alpha_T == 0.0) return 0.0;
    const double ks2 = p.kappa * p.sigma * p.sigma;
    const double gain = feedback_gain(c, t);
    // D'(T)/D(t) = (gamma1 - gamma2) e^{gamma1 (T - t)} / (1 - e^{-gap})
    const double ratio = (c.gamma1 - c.gamma2) * std::exp(c.gamma1 * (c.T - t)) /
                         (-std::expm1(-exponent_gap(c, t)));
    return -alpha_t / ks2 * gain + ratio * exp_alpha_T / ks2 - alpha_t / p.kappa;
}

double optimal_control(const CoefBundle& c, const ModelParams& p, double t,
                       double theta_t, double alpha_t, double exp_alpha_T) {
    check_before_horizon(c, t, "optimal_control");
    return theta_t * feedback_gain(c, t) + drift_offset(c, p, t, alpha_t, exp_alpha_T);
}

}  // namespace liquidex
