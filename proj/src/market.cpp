#include "mmv/market.hpp"

#include <cmath>

namespace mmv {

namespace {

bool all_finite(const Eigen::MatrixXd& m) {
    return m.allFinite();
}

}  // namespace

Market Market::validate(const MarketParams& params) {
    const auto n = params.sigma.rows();
    const auto d = params.sigma.cols();
    if (n < 1)
        throw DimensionMismatch("market needs at least one risky asset");
    if (d < n)
        throw DimensionMismatch("need d >= n Brownian drivers, got n=" +
                                std::to_string(n) + ", d=" + std::to_string(d));
    if (params.mu.size() != n)
        throw DimensionMismatch("mu has length " + std::to_string(params.mu.size()) +
                                ", expected n=" + std::to_string(n));
    if (!std::isfinite(params.r) || !std::isfinite(params.horizon_T) ||
        !all_finite(params.mu) || !all_finite(params.sigma))
        throw InvalidParameter("market parameters must be finite");
    if (params.horizon_T <= 0.0)
        throw InvalidParameter("horizon_T must be positive");
    return Market(params);
}

Market::Market(MarketParams params) : params_(std::move(params)) {
    Sigma_ = params_.sigma * params_.sigma.transpose();
    ldlt_.compute(Sigma_);
    // Pivot-based positive definiteness test: smallest pivot must clear
    // 1e-12 times the largest diagonal entry, else downstream divisions are
    // numerically meaningless.
    const double scale = Sigma_.diagonal().cwiseAbs().maxCoeff();
    const double min_pivot = ldlt_.vectorD().minCoeff();
    if (ldlt_.info() != Eigen::Success || !(min_pivot > 1e-12 * scale))
        throw SingularCovariance("sigma*sigma^T is not positive definite "
                                 "(smallest pivot " + std::to_string(min_pivot) + ")");
    B_ = params_.mu.array() - params_.r;
    xi_ = params_.sigma.transpose() * ldlt_.solve(B_);
}

Eigen::VectorXd Market::solve_covariance(const Eigen::VectorXd& x) const {
    if (x.size() != n())
        throw DimensionMismatch("covariance solve expects a length-n vector");
    return ldlt_.solve(x);
}

Eigen::MatrixXd Market::solve_covariance(const Eigen::MatrixXd& x) const {
    if (x.rows() != n())
        throw DimensionMismatch("covariance solve expects n rows");
    return ldlt_.solve(x);
}

}  // namespace mmv
