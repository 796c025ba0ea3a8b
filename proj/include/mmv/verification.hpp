#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmv/closed_form.hpp"
#include "mmv/simulation.hpp"

namespace mmv {

struct SaddleCheckConfig {
    int n_state_samples = 1000;
    int n_control_samples = 100;
    double eta_radius = 0.0;   ///< 0 picks max(2 |xi_c|, 1)
    double tolerance = 1e-9;
    std::uint64_t seed = 20240001;

    void check() const;  ///< tolerance must be positive
};

struct VerificationReport {
    std::string suite;
    bool pass = false;
    double worst_residual = 0.0;
    std::string worst_location;  ///< state/control sample of the worst residual
    std::string notes;
};

/// Throws the suite-appropriate error (SaddleViolation / EquivalenceViolation)
/// when the report failed.
void require_pass(const VerificationReport& report);

/**
 * Generator of the (X, Lambda) pair under Q^eta, evaluated on the linear
 * value ansatz (all second derivatives vanish):
 *
 *   L = h'(t) x + lambda f'(t)/(2 theta)
 *     + h(t) (r x + pi.(B + sigma eta)) + lambda f(t) |eta|^2 / (2 theta),
 *
 * with h' and f' analytic. The saddle conditions of the verification argument
 * are: (i) L(pi*, eta) >= 0, (ii) L(pi, eta*) <= 0 on Pi, (iii) L(pi*, eta*) = 0.
 */
double hjbi_operator(const ClosedFormSolution& sol, double t, double x, double lambda,
                     const Eigen::VectorXd& pi, const Eigen::VectorXd& eta);

/// Markov candidate pi*(t, lambda) = (lambda f / (theta h)) Sigma^{-1} sigma xi_c.
Eigen::VectorXd hjbi_candidate(const ClosedFormSolution& sol, double t, double lambda);

/// Analytic inner minimizer eta*(pi) = -(theta h / (lambda f)) sigma^T pi.
Eigen::VectorXd eta_minimizer(const ClosedFormSolution& sol, double t, double lambda,
                              const Eigen::VectorXd& pi);

/**
 * Samples (t, x, lambda) states and control perturbations and checks the
 * three saddle conditions plus two analytic cross-checks: the eta-quadratic
 * minimizer and the projection inequality (sigma^T pi).(xi - xi_c) <= 0.
 * Violations are reported, not thrown (non-conic counterexamples are expected
 * to fail condition (ii)). The uniform-integrability condition of the
 * verification argument is analytic-only and not mechanically checked.
 */
VerificationReport saddle_check(const ClosedFormSolution& sol,
                                const ConstraintSet& constraint,
                                const SaddleCheckConfig& cfg);

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t n = 0;
};

/// E[X] - theta/2 Var[X] from terminal samples; SE by the delta method.
Estimate estimate_mv_objective(const Eigen::VectorXd& terminal_wealth, double theta);

/// E[Lambda X] + (E[Lambda^2] - 1)/(2 theta) from joint terminal samples.
Estimate estimate_mmv_objective(const Eigen::VectorXd& terminal_wealth,
                                const Eigen::VectorXd& terminal_density, double theta);

/**
 * Certifies MMV/MV strategy equivalence three ways: factor equality on a time
 * grid, pointwise feedback equality on random (t, x), and shared-noise path
 * coincidence.
 */
VerificationReport equivalence_certificate(const ClosedFormSolution& sol,
                                           const SaddleCheckConfig& cfg);

/// Named verification suites the CLI dispatches on.
std::vector<std::string> suite_names();  // orthogonality saddle relation monotone equivalence beta

VerificationReport run_suite(const std::string& name, const Market& market,
                             const Preference& pref, const ConstraintSet& constraint,
                             const SimConfig& sim_cfg, const SaddleCheckConfig& saddle_cfg);

}  // namespace mmv
