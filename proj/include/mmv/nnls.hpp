#pragma once

#include <Eigen/Dense>

namespace mmv {

struct NnlsResult {
    Eigen::VectorXd coeffs;    ///< gamma* >= 0, length k
    Eigen::VectorXd fit;       ///< G * gamma*, length d
    int iterations = 0;
};

/**
 * Nonnegative least squares  min_{gamma >= 0} || G*gamma - v ||^2
 * by the Lawson-Hanson active-set iteration.
 *
 * Deterministic tie-breaking: the entering column is the smallest index among
 * those attaining the extreme dual value. Rank-deficient G (duplicated or
 * collinear columns) is allowed; the fit G*gamma* is then still unique even
 * though gamma* is not. Throws SolverNonconvergence after 10*(k+d) iterations.
 */
NnlsResult nnls(const Eigen::MatrixXd& G, const Eigen::VectorXd& v);

}  // namespace mmv
