#pragma once

#include <Eigen/Dense>

#include "mmv/cone.hpp"
#include "mmv/market.hpp"

namespace mmv {

/**
 * Every closed-form object of the cone-constrained MMV/MV solution:
 *
 *   h(t) = e^{r (T-t)}
 *   f(t) = e^{f_rate (T-t)},        f_rate = 2 xi.xi_c - |xi_c|^2
 *   ft(t) = e^{f_tilde_rate (T-t)}, f_tilde_rate = 2r - 2 xi.xi_c + |xi_c|^2
 *   beta_star = x0 e^{rT} + psi_tilde / theta
 *   psi_tilde = e^{xi.xi_c T}
 *   direction = Sigma^{-1} sigma xi_c   (portfolio space)
 *   eta_star = -xi_c                    (optimal distortion)
 *
 * For conic constraints the orthogonality identity xi.xi_c = |xi_c|^2 holds,
 * so f_rate reduces to xi.xi_c and f(0) equals psi_tilde; the solution
 * stores the reduced rates in that case so that the MMV and MV feedback maps
 * are the *same* arithmetic, not merely equal in exact mathematics. Non-conic
 * solutions (counterexample studies) keep the general rates.
 */
struct ClosedFormSolution {
    // problem data
    double r = 0.0;
    double horizon = 0.0;
    double theta = 1.0;
    double x0 = 0.0;
    bool conic = true;

    Eigen::MatrixXd sigma;      ///< n x d, kept for SDE and HJBI evaluation
    Eigen::VectorXd excess;     ///< B = mu - r 1

    Eigen::VectorXd xi;
    Eigen::VectorXd xi_c;
    Eigen::VectorXd direction;  ///< Sigma^{-1} sigma xi_c
    Eigen::VectorXd eta_star;   ///< -xi_c

    double h_rate = 0.0;        ///< r
    double f_rate = 0.0;
    double f_tilde_rate = 0.0;
    double xi_dot_xic = 0.0;
    double xic_squared = 0.0;
    double psi_tilde = 1.0;     ///< e^{xi.xi_c T}
    double beta_star = 0.0;

    double h(double t) const;        ///< e^{r (T-t)}
    double f(double t) const;        ///< e^{f_rate (T-t)}
    double f_tilde(double t) const;  ///< e^{f_tilde_rate (T-t)}
    double f0() const { return f(0.0); }

    void require_time(double t) const;  ///< throws TimeOutOfRange outside [0, T]
};

/// Threshold (bliss) process chi_c(t) = x0 e^{rt} + e^{-r(T-t)} factor / theta.
/// It solves d chi_c = r chi_c dt; chi_c(T) is the bliss point (= beta_star
/// when factor = psi_tilde).
struct ThresholdProcess {
    double x0 = 0.0;
    double r = 0.0;
    double horizon = 0.0;
    double theta = 1.0;
    double factor = 1.0;

    double value(double t) const;
    double bliss() const { return value(horizon); }
};

/// Builds the solution from an externally supplied projection xi_c. Used by
/// solve() and by counterexample studies that feed non-conic projections.
ClosedFormSolution make_solution(const Market& market, const Preference& pref,
                                 const Eigen::VectorXd& xi_c, bool conic);

/// Full pipeline: project xi onto Pi_sigma and assemble the solution.
/// Rejects non-conic constraint sets with NonConicSet.
ClosedFormSolution solve(const Market& market, const Preference& pref,
                         const ConstraintSet& constraint);

/// Optimal MMV feedback strategy
///   pi*(t) = -(x - x0 e^{rt} - e^{-r(T-t)} (f(0) + G(0,t)) / theta) direction.
/// G(0,t) is an explicit input; conic constraints pass 0.
Eigen::VectorXd mmv_strategy(const ClosedFormSolution& sol, double t, double x,
                             double g_integral);

/// Optimal MV feedback strategy
///   pi~*(t) = -(x - x0 e^{rt} - e^{-r(T-t)} psi_tilde / theta) direction.
Eigen::VectorXd mv_strategy(const ClosedFormSolution& sol, double t, double x);

/// Game value V(t, x, lambda) = x h(t) + (lambda f(t) - 1) / (2 theta).
double value_function(const ClosedFormSolution& sol, double t, double x, double lambda);

/// Quadratic-loss value V_QLM(t, x) = x^2 e^{f_tilde_rate (T-t)}.
double qlm_value(const ClosedFormSolution& sol, double t, double x);

/// g(t) = f(t) Lambda*(t) (|xi_c|^2 - xi.xi_c); identically zero for cones.
double g_process(const ClosedFormSolution& sol, double f_t, double lambda_t);

struct FactorComparison {
    double psi_t = 0.0;      ///< MMV factor f(0) + G(0,t)
    double psi_tilde = 0.0;  ///< MV factor e^{xi.xi_c T}
    double difference = 0.0;
};

/// Compares the MMV factor Psi(t) (with G = 0) against the MV factor.
FactorComparison factor_comparison(const ClosedFormSolution& sol, double t);

/// chi_c built from the solution's psi_tilde factor.
ThresholdProcess threshold_process(const ClosedFormSolution& sol);

}  // namespace mmv
