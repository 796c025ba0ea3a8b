#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "mmv/closed_form.hpp"
#include "mmv/rng.hpp"

namespace mmv {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Scheme {
    euler,           ///< Euler-Maruyama wealth stepping
    exact_relation   ///< wealth reconstructed algebraically from the exact density
};

struct SimConfig {
    std::int64_t n_paths = 1;
    std::int64_t n_steps = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::euler;
    bool antithetic = false;   ///< odd paths reuse the previous even path's noise, negated
    int threads = 1;           ///< <= 0 picks hardware concurrency
    bool store_brownian = false;

    void check() const;  ///< throws InvalidParameter on nonsensical settings
};

/// Feedback strategy: writes pi(t, x) in R^n into the caller's buffer.
using Strategy = std::function<void(double t, double x, Eigen::Ref<Eigen::VectorXd>)>;

Strategy zero_feedback(int n);
Strategy mmv_feedback(const ClosedFormSolution& sol);   ///< conic MMV optimum (G = 0)
Strategy mv_feedback(const ClosedFormSolution& sol);
/// (1 + eps) times the MMV optimum; stays in Pi for eps >= -1 by conic scaling.
Strategy scaled_feedback(const ClosedFormSolution& sol, double eps);

/**
 * Jointly simulated wealth and density paths on a shared Brownian grid.
 *
 * density holds the exact exponential martingale
 *   Lambda*(t_i) = exp(-xi_c.W(t_i) - |xi_c|^2 t_i / 2),
 * positive on every path regardless of step size. relation_residual holds the
 * per-time consistency gap of the pathwise identity
 *   theta (h X - h(0) x0) + (f Lambda - f(0)) = G(0, t)  (= 0 under a cone),
 * evaluated against the discrete density of the wealth scheme so that the
 * residual measures the scheme's own consistency order, O(dt) for Euler. The
 * exact density is what every moment/martingale check consumes.
 */
struct PathBundle {
    Eigen::VectorXd times;           ///< n_steps + 1 grid points
    RowMatrixXd wealth;              ///< n_paths x (n_steps + 1)
    RowMatrixXd density;             ///< exact exponential density
    RowMatrixXd relation_residual;   ///< scheme-consistent identity gap
    RowMatrixXd brownian;            ///< optional, n_paths x (n_steps * d)

    std::int64_t n_paths() const { return wealth.rows(); }
    std::int64_t n_steps() const { return wealth.cols() - 1; }
};

/// Terminal-only samples for large-n estimation (O(n_paths) memory).
struct TerminalSamples {
    Eigen::VectorXd wealth;
    Eigen::VectorXd density;
};

/// Exact lognormal auxiliary paths X~_beta(t) of the embedded quadratic-loss
/// problem, on the same Brownian addressing as the other simulators.
struct QlmBundle {
    Eigen::VectorXd times;
    RowMatrixXd aux;
};

PathBundle simulate_paths(const ClosedFormSolution& sol, const SimConfig& cfg,
                          const Strategy& strategy,
                          const NormalSource* noise = nullptr,
                          const ConstraintSet* membership_check = nullptr);

/// Wealth paths alone: X(t_{i+1}) = X(t_i) + (r X + pi.B) dt + (sigma^T pi).dW
/// under scheme euler, on the same increments as the joint bundle.
RowMatrixXd simulate_wealth(const ClosedFormSolution& sol, const SimConfig& cfg,
                            const Strategy& strategy,
                            const NormalSource* noise = nullptr,
                            const ConstraintSet* membership_check = nullptr);

TerminalSamples simulate_terminal(const ClosedFormSolution& sol, const SimConfig& cfg,
                                  const Strategy& strategy,
                                  const NormalSource* noise = nullptr);

/// Density paths alone (exact scheme).
RowMatrixXd simulate_density(const ClosedFormSolution& sol, const SimConfig& cfg,
                             const NormalSource* noise = nullptr);

QlmBundle simulate_qlm(const ClosedFormSolution& sol, const SimConfig& cfg, double beta,
                       const NormalSource* noise = nullptr);

/// Per-path max over the grid of the relation residual.
Eigen::VectorXd relation_residual(const ClosedFormSolution& sol, const PathBundle& paths);

/// RMS terminal gap between simulated wealth and the exact-relation
/// reconstruction from the exact density (the strong-error diagnostic;
/// order 1/2 for Euler).
double strong_gap_rms(const ClosedFormSolution& sol, const PathBundle& paths);

struct MonotoneReport {
    double fraction_beyond = 0.0;      ///< share of paths with X(T) - mean > 1/theta
    double median_identity = 0.0;      ///< median |X(T) - mean - (1 - Lambda(T))/theta|
    double max_identity = 0.0;
};

MonotoneReport monotone_region_check(const ClosedFormSolution& sol,
                                     const Eigen::VectorXd& terminal_wealth,
                                     const Eigen::VectorXd& terminal_density);

/// CSV export: time,path_id,wealth,density,residual; LF endings, '.' decimals,
/// shortest round-trip formatting (byte-stable across runs and thread counts).
void write_paths_csv(std::ostream& os, const PathBundle& paths);

struct MomentSummary {
    double mean = 0.0;
    double variance = 0.0;
    double min = 0.0;
    double max = 0.0;
};

MomentSummary moments(const Eigen::VectorXd& samples);
double quantile(Eigen::VectorXd samples, double q);  // by sorted interpolation

}  // namespace mmv
