#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mmv/market.hpp"
#include "mmv/nnls.hpp"

namespace mmv {

enum class ConstraintKind {
    full_space,            ///< Pi = R^n
    nonnegative_orthant,   ///< Pi = R^n_+ (no short selling)
    coordinate_subspace,   ///< Pi = span of free coordinates (others frozen at 0)
    finitely_generated_cone,  ///< Pi = { G*gamma : gamma >= 0 }
    box                    ///< Pi = [lower, upper]; non-conic, counterexample detection only
};

/**
 * The portfolio constraint set Pi in R^n. All kinds except `box` are convex
 * cones containing 0. `box` exists solely to detect failure of the conic
 * orthogonality identity on non-conic sets.
 */
struct ConstraintSet {
    ConstraintKind kind = ConstraintKind::full_space;
    std::vector<bool> free_mask;   ///< coordinate_subspace: true = tradable
    Eigen::MatrixXd generators;    ///< finitely_generated_cone: n x k, k >= 1
    Eigen::VectorXd lower, upper;  ///< box bounds

    static ConstraintSet full();
    static ConstraintSet orthant();
    static ConstraintSet subspace(std::vector<bool> free_mask);
    static ConstraintSet generated(Eigen::MatrixXd generators);
    static ConstraintSet box_set(Eigen::VectorXd lower, Eigen::VectorXd upper);

    bool is_conic() const noexcept { return kind != ConstraintKind::box; }

    /// Throws DimensionMismatch / InvalidParameter when inconsistent with an
    /// n-asset market (zero generator columns, bad mask length, ...).
    void check(int n) const;
};

/**
 * The image Pi_sigma = { sigma^T pi : pi in Pi } in R^d.
 *
 * Representation depends on the kind:
 *  - full_space:          range(sigma^T), held as an orthonormal basis;
 *  - coordinate_subspace: span{ sigma^T e_i : free i }, orthonormal basis;
 *  - orthant / generated: cone generated by the columns of
 *                         generator_matrix_sigma = sigma^T * (Pi generators);
 *  - box:                 axis-aligned interval box (diagonal sigma only).
 *
 * Note the orthant case: the image of R^n_+ is the cone generated by the
 * columns of sigma^T, NOT the nonnegative orthant of R^d. Projecting by
 * componentwise clipping in R^d would be wrong for every non-diagonal sigma.
 */
struct ProjectedCone {
    ConstraintKind kind = ConstraintKind::full_space;
    int ambient_dim = 0;
    Eigen::MatrixXd generator_matrix_sigma;  ///< d x k (cone kinds)
    Eigen::MatrixXd basis;                   ///< d x m orthonormal (subspace kinds)
    Eigen::VectorXd box_lo, box_hi;          ///< box kind

    bool is_conic() const noexcept { return kind != ConstraintKind::box; }
};

/// Maps Pi through sigma^T. For box constraints this requires a diagonal
/// square sigma (the image of a box is otherwise not axis-aligned); throws
/// NotSupported when that does not hold.
ProjectedCone to_projected_cone(const ConstraintSet& constraint, const Market& market);

struct ProjectionDetail {
    Eigen::VectorXd point;   ///< Proj_{Pi_sigma}[v]
    Eigen::VectorXd coeffs;  ///< NNLS gamma* for cone kinds (empty otherwise)
    int iterations = 0;
};

/// Orthogonal projection of v onto Pi_sigma (argmin over the set of |v - v'|).
Eigen::VectorXd project(const Eigen::VectorXd& v, const ProjectedCone& cone);
ProjectionDetail project_detail(const Eigen::VectorXd& v, const ProjectedCone& cone);

/// xi_c = Proj_{Pi_sigma}[xi]. Exact pass-through for the full space.
Eigen::VectorXd constrained_market_price(const Market& market, const ConstraintSet& constraint);

/// Scalar residual xi^T xi_c - |xi_c|^2; zero for every conic Pi_sigma.
double orthogonality_residual(const Eigen::VectorXd& xi, const Eigen::VectorXd& xi_c);

/**
 * Recovers the portfolio-space direction Sigma^{-1} sigma xi_c in R^n.
 * When `constraint` is given, membership of the result in Pi is verified
 * (residual above `tol` throws MembershipViolation; it would indicate an
 * inconsistent projection).
 */
Eigen::VectorXd recover_portfolio_direction(const Market& market,
                                            const Eigen::VectorXd& xi_c,
                                            const ConstraintSet* constraint = nullptr,
                                            double tol = 1e-9);

/// Distance-like membership residual of pi relative to Pi (0 inside).
double membership_residual(const ConstraintSet& constraint, const Eigen::VectorXd& pi);

/// Random element of Pi, for sampling-based checks. `unif` supplies U(0,1).
Eigen::VectorXd sample_member(const ConstraintSet& constraint, int n,
                              const std::function<double()>& unif);

}  // namespace mmv
