#include "mmv/closed_form.hpp"

#include <cmath>

#include "mmv/errors.hpp"

namespace mmv {

namespace {

constexpr double kMaxExponent = 700.0;  // exp overflows just above 709

void require_exponent(double rate, double horizon, const char* what) {
    if (std::abs(rate * horizon) > kMaxExponent)
        throw ParameterOverflow(std::string(what) + " exponent exceeds 700");
}

}  // namespace

void ClosedFormSolution::require_time(double t) const {
    if (!(t >= 0.0 && t <= horizon))
        throw TimeOutOfRange("t = " + std::to_string(t) + " outside [0, " +
                             std::to_string(horizon) + "]");
}

double ClosedFormSolution::h(double t) const {
    require_time(t);
    return std::exp(h_rate * (horizon - t));
}

double ClosedFormSolution::f(double t) const {
    require_time(t);
    return std::exp(f_rate * (horizon - t));
}

double ClosedFormSolution::f_tilde(double t) const {
    require_time(t);
    return std::exp(f_tilde_rate * (horizon - t));
}

double ThresholdProcess::value(double t) const {
    if (!(t >= 0.0 && t <= horizon))
        throw TimeOutOfRange("threshold time outside [0, T]");
    return x0 * std::exp(r * t) + std::exp(-r * (horizon - t)) * factor / theta;
}

ClosedFormSolution make_solution(const Market& market, const Preference& pref,
                                 const Eigen::VectorXd& xi_c, bool conic) {
    if (!(pref.theta > 0.0))
        throw InvalidParameter("theta must be positive");
    if (!std::isfinite(pref.x0))
        throw InvalidParameter("x0 must be finite");
    if (xi_c.size() != market.d())
        throw DimensionMismatch("xi_c must live in R^d");

    ClosedFormSolution sol;
    sol.r = market.rate();
    sol.horizon = market.horizon();
    sol.theta = pref.theta;
    sol.x0 = pref.x0;
    sol.conic = conic;
    sol.sigma = market.sigma();
    sol.excess = market.excess_return();
    sol.xi = market.price_of_risk();
    sol.xi_c = xi_c;
    sol.eta_star = -xi_c;
    sol.direction = recover_portfolio_direction(market, xi_c);

    const double a = sol.xi.dot(xi_c);
    const double b = xi_c.squaredNorm();
    sol.xi_dot_xic = a;
    sol.xic_squared = b;
    sol.h_rate = market.rate();

    if (conic) {
        // Conic orthogonality: a == b up to projection round-off. Collapse the
        // rates through the identity so f(0) and psi_tilde are the same double
        // and the MMV/MV feedback maps coincide bitwise. A large gap means the
        // projection solver produced an inconsistent xi_c.
        const double gap = std::abs(a - b);
        if (gap > 1e-8 * (1.0 + sol.xi.squaredNorm()))
            throw SolverNonconvergence("projection violates conic orthogonality by " +
                                       std::to_string(gap));
        sol.f_rate = a;
        sol.f_tilde_rate = 2.0 * market.rate() - a;
    } else {
        sol.f_rate = 2.0 * a - b;
        sol.f_tilde_rate = 2.0 * market.rate() - 2.0 * a + b;
    }

    require_exponent(sol.h_rate, sol.horizon, "h");
    require_exponent(sol.f_rate, sol.horizon, "f");
    require_exponent(sol.f_tilde_rate, sol.horizon, "f_tilde");
    require_exponent(a, sol.horizon, "psi_tilde");

    sol.psi_tilde = std::exp(a * sol.horizon);
    sol.beta_star = pref.x0 * std::exp(market.rate() * sol.horizon) +
                    sol.psi_tilde / pref.theta;
    return sol;
}

ClosedFormSolution solve(const Market& market, const Preference& pref,
                         const ConstraintSet& constraint) {
    if (!constraint.is_conic())
        throw NonConicSet("solve requires a conic constraint set");
    return make_solution(market, pref, constrained_market_price(market, constraint), true);
}

Eigen::VectorXd mmv_strategy(const ClosedFormSolution& sol, double t, double x,
                             double g_integral) {
    sol.require_time(t);
    const double factor = sol.f0() + g_integral;
    const double gap = x - sol.x0 * std::exp(sol.r * t) -
                       std::exp(-sol.r * (sol.horizon - t)) * factor / sol.theta;
    return -gap * sol.direction;
}

Eigen::VectorXd mv_strategy(const ClosedFormSolution& sol, double t, double x) {
    sol.require_time(t);
    const double gap = x - sol.x0 * std::exp(sol.r * t) -
                       std::exp(-sol.r * (sol.horizon - t)) * sol.psi_tilde / sol.theta;
    return -gap * sol.direction;
}

double value_function(const ClosedFormSolution& sol, double t, double x, double lambda) {
    if (!(lambda > 0.0))
        throw NonpositiveDensity("value function requires lambda > 0");
    return x * sol.h(t) + (lambda * sol.f(t) - 1.0) / (2.0 * sol.theta);
}

double qlm_value(const ClosedFormSolution& sol, double t, double x) {
    return x * x * sol.f_tilde(t);
}

double g_process(const ClosedFormSolution& sol, double f_t, double lambda_t) {
    if (!std::isfinite(f_t) || !std::isfinite(lambda_t))
        throw InvalidParameter("g process inputs must be finite");
    if (!(lambda_t > 0.0))
        throw NonpositiveDensity("g process requires lambda > 0");
    if (sol.conic) return 0.0;  // orthogonality kills the integrand
    return f_t * lambda_t * (sol.xic_squared - sol.xi_dot_xic);
}

FactorComparison factor_comparison(const ClosedFormSolution& sol, double t) {
    sol.require_time(t);
    FactorComparison cmp;
    cmp.psi_t = sol.f0();  // + G(0,t), identically zero under a cone
    cmp.psi_tilde = sol.psi_tilde;
    cmp.difference = cmp.psi_t - cmp.psi_tilde;
    return cmp;
}

ThresholdProcess threshold_process(const ClosedFormSolution& sol) {
    ThresholdProcess chi;
    chi.x0 = sol.x0;
    chi.r = sol.r;
    chi.horizon = sol.horizon;
    chi.theta = sol.theta;
    chi.factor = sol.psi_tilde;
    return chi;
}

}  // namespace mmv
