#pragma once

#include "liquidex/model.hpp"

namespace liquidex {

// Closed-form quantities of the cash-denominated optimal liquidation problem.
//
// All functions are pure; every quantity with a pole at the horizon throws
// PoleError at t == T so that NaNs never propagate. Simulation code evaluates
// the horizon through product forms (D * Gamma = D') instead.

/// Roots gamma1 = (-sigma^2 - sqrt(delta))/2, gamma2 = (-sigma^2 + sqrt(delta))/2
/// of gamma^2 + sigma^2*gamma - kappa*sigma^2/lambda = 0, delta = sigma^2*(sigma^2 + 4*kappa/lambda).
CoefBundle characteristic_roots(const ModelParams& p);

/// Liquidation denominator D(t) = e^{gamma1 t + gamma2 T} - e^{gamma1 T + gamma2 t}.
/// Strictly positive on [0, T), exactly zero at t = T. Evaluated in a
/// scale-stable form; throws NumericError if the value itself overflows.
double denominator(const CoefBundle& c, double t);

/// D'(t) = gamma1 e^{gamma1 t + gamma2 T} - gamma2 e^{gamma1 T + gamma2 t}.
/// Finite and strictly negative on all of [0, T].
double denominator_derivative(const CoefBundle& c, double t);

/// beta_inf(t) = 1 / D(t). Pole at t = T.
double beta_inf(const CoefBundle& c, double t);

/// Feedback gain Gamma(t) = D'(t)/D(t) < gamma1 < 0; the optimal control under
/// zero drift is u*(t) = Gamma(t) * theta_t. Diverges to -inf at the horizon
/// like -1/(T - t); pole at t = T.
double feedback_gain(const CoefBundle& c, double t);

/// Exact integral of the feedback gain: log(D(t1)/D(t0)).
/// Returns -infinity when t1 == T (D(T) = 0).
double feedback_gain_integral(const CoefBundle& c, double t0, double t1);

/// Deterministic position factor D(t)/D(0) in (0, 1]; exactly 0 at t = T.
double position_decay_factor(const CoefBundle& c, double t);

/// D'(T)/D(0), the factor in the product-form control at the horizon.
double terminal_control_factor(const CoefBundle& c);

/// Drift offset nu(t): the affine term of the optimal control under a price
/// drift, linear in the realized drift alpha_t and in exp_alpha_T = E^Q[alpha_T | F_t]:
///
///   nu(t) = -alpha_t/(kappa sigma^2) * Gamma(t)
///           + D'(T)/D(t) * exp_alpha_T/(kappa sigma^2)
///           - alpha_t/kappa
///
/// which is the reduced form of the C1/C2-limit expression. Pole at t = T.
double drift_offset(const CoefBundle& c, const ModelParams& p, double t,
                    double alpha_t, double exp_alpha_T);

/// Optimal trading rate u*(t) = Gamma(t) * theta_t + nu(t). Pole at t = T;
/// callers sampling the horizon must use the product form instead.
double optimal_control(const CoefBundle& c, const ModelParams& p, double t,
                       double theta_t, double alpha_t = 0.0, double exp_alpha_T = 0.0);

}  // namespace liquidex
