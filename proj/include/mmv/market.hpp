#pragma once

#include <Eigen/Dense>

#include "mmv/errors.hpp"

namespace mmv {

/**
 * Raw parameters of the constant-coefficient GBM market: one risk-free asset
 * at rate r and n risky assets driven by d >= n Brownian motions.
 *
 * Units: r, mu in 1/year; sigma in 1/sqrt(year); horizon_T in years.
 */
struct MarketParams {
    double r = 0.0;
    Eigen::VectorXd mu;      ///< expected returns, length n
    Eigen::MatrixXd sigma;   ///< volatility matrix, n x d
    double horizon_T = 1.0;
};

/// Investor preferences: risk aversion theta > 0 and initial wealth x0.
struct Preference {
    double theta = 1.0;
    double x0 = 0.0;
};

/**
 * A validated market. Construction via Market::validate checks shapes,
 * finiteness and positive definiteness of Sigma = sigma*sigma^T, and caches
 * the derived quantities every other module consumes:
 *
 *   B  = mu - r*1          (excess returns)
 *   xi = sigma^T Sigma^{-1} B   (market price of risk, in R^d)
 *
 * Sigma^{-1} is never formed explicitly; solves go through a cached LDLT
 * factorization. Instances are immutable and safe to share across threads.
 *
 * Note: sigma entries may be any reals with Sigma positive definite. This is
 * a deliberate generalization; no formula below requires positive entries.
 */
class Market {
public:
    /// Validates raw parameters. Throws DimensionMismatch, InvalidParameter
    /// or SingularCovariance.
    static Market validate(const MarketParams& params);

    int n() const noexcept { return static_cast<int>(params_.sigma.rows()); }
    int d() const noexcept { return static_cast<int>(params_.sigma.cols()); }
    double rate() const noexcept { return params_.r; }
    double horizon() const noexcept { return params_.horizon_T; }

    const MarketParams& params() const noexcept { return params_; }
    const Eigen::MatrixXd& sigma() const noexcept { return params_.sigma; }
    const Eigen::MatrixXd& covariance() const noexcept { return Sigma_; }
    const Eigen::VectorXd& excess_return() const noexcept { return B_; }

    /// x -> Sigma^{-1} x through the cached factorization.
    Eigen::VectorXd solve_covariance(const Eigen::VectorXd& x) const;
    Eigen::MatrixXd solve_covariance(const Eigen::MatrixXd& x) const;

    /// Market price of risk xi = sigma^T Sigma^{-1} B (cached).
    const Eigen::VectorXd& price_of_risk() const noexcept { return xi_; }

private:
    explicit Market(MarketParams params);

    MarketParams params_;
    Eigen::MatrixXd Sigma_;
    Eigen::LDLT<Eigen::MatrixXd> ldlt_;
    Eigen::VectorXd B_;
    Eigen::VectorXd xi_;
};

/// Free-function spelling of the cached accessor.
inline const Eigen::VectorXd& market_price_vector(const Market& market) {
    return market.price_of_risk();
}

}  // namespace mmv
