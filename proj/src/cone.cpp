#include "mmv/cone.hpp"

#include <cmath>
#include <numbers>

#include "mmv/errors.hpp"

namespace mmv {

ConstraintSet ConstraintSet::full() {
    ConstraintSet c;
    c.kind = ConstraintKind::full_space;
    return c;
}

ConstraintSet ConstraintSet::orthant() {
    ConstraintSet c;
    c.kind = ConstraintKind::nonnegative_orthant;
    return c;
}

ConstraintSet ConstraintSet::subspace(std::vector<bool> free_mask) {
    ConstraintSet c;
    c.kind = ConstraintKind::coordinate_subspace;
    c.free_mask = std::move(free_mask);
    return c;
}

ConstraintSet ConstraintSet::generated(Eigen::MatrixXd generators) {
    ConstraintSet c;
    c.kind = ConstraintKind::finitely_generated_cone;
    c.generators = std::move(generators);
    return c;
}

ConstraintSet ConstraintSet::box_set(Eigen::VectorXd lower, Eigen::VectorXd upper) {
    ConstraintSet c;
    c.kind = ConstraintKind::box;
    c.lower = std::move(lower);
    c.upper = std::move(upper);
    return c;
}

void ConstraintSet::check(int n) const {
    switch (kind) {
        case ConstraintKind::full_space:
        case ConstraintKind::nonnegative_orthant:
            return;
        case ConstraintKind::coordinate_subspace:
            if (static_cast<int>(free_mask.size()) != n)
                throw DimensionMismatch("free_mask must have one entry per asset");
            return;
        case ConstraintKind::finitely_generated_cone: {
            if (generators.rows() != n)
                throw DimensionMismatch("generator matrix must have n rows");
            if (generators.cols() < 1)
                throw InvalidParameter("generator matrix needs at least one column");
            if (!generators.allFinite())
                throw InvalidParameter("generators must be finite");
            for (Eigen::Index j = 0; j < generators.cols(); ++j)
                if (generators.col(j).norm() == 0.0)
                    throw InvalidParameter("generator column " + std::to_string(j) + " is zero");
            return;
        }
        case ConstraintKind::box:
            if (lower.size() != n || upper.size() != n)
                throw DimensionMismatch("box bounds must have length n");
            if (!lower.allFinite() || !upper.allFinite())
                throw InvalidParameter("box bounds must be finite");
            if (((upper - lower).array() < 0.0).any())
                throw InvalidParameter("box needs lower <= upper");
            return;
    }
    throw InvalidParameter("unknown constraint kind");
}

namespace {

Eigen::MatrixXd orthonormal_basis(const Eigen::MatrixXd& columns) {
    if (columns.cols() == 0) return Eigen::MatrixXd(columns.rows(), 0);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(columns);
    const auto rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(columns.rows(), rank);
    return q;
}

}  // namespace

ProjectedCone to_projected_cone(const ConstraintSet& constraint, const Market& market) {
    constraint.check(market.n());
    const Eigen::MatrixXd sigma_t = market.sigma().transpose();  // d x n
    ProjectedCone cone;
    cone.kind = constraint.kind;
    cone.ambient_dim = market.d();

    switch (constraint.kind) {
        case ConstraintKind::full_space:
            cone.basis = orthonormal_basis(sigma_t);
            break;
        case ConstraintKind::coordinate_subspace: {
            int m = 0;
            for (bool v : constraint.free_mask) m += v ? 1 : 0;
            Eigen::MatrixXd cols(market.d(), m);
            for (int i = 0, j = 0; i < market.n(); ++i)
                if (constraint.free_mask[static_cast<std::size_t>(i)]) cols.col(j++) = sigma_t.col(i);
            cone.basis = orthonormal_basis(cols);
            break;
        }
        case ConstraintKind::nonnegative_orthant:
            cone.generator_matrix_sigma = sigma_t;  // cone generated by sigma^T e_i
            break;
        case ConstraintKind::finitely_generated_cone:
            cone.generator_matrix_sigma = sigma_t * constraint.generators;
            break;
        case ConstraintKind::box: {
            // The sigma^T-image of a box is axis-aligned only for diagonal sigma.
            if (market.n() != market.d())
                throw NotSupported("box constraints require square diagonal sigma");
            const Eigen::MatrixXd& s = market.sigma();
            const double scale = s.cwiseAbs().maxCoeff();
            for (int i = 0; i < market.n(); ++i)
                for (int j = 0; j < market.d(); ++j)
                    if (i != j && std::abs(s(i, j)) > 1e-14 * scale)
                        throw NotSupported("box constraints require diagonal sigma");
            cone.box_lo.resize(market.d());
            cone.box_hi.resize(market.d());
            for (int i = 0; i < market.d(); ++i) {
                const double a = s(i, i) * constraint.lower[i];
                const double b = s(i, i) * constraint.upper[i];
                cone.box_lo[i] = std::min(a, b);
                cone.box_hi[i] = std::max(a, b);
            }
            break;
        }
    }
    return cone;
}

ProjectionDetail project_detail(const Eigen::VectorXd& v, const ProjectedCone& cone) {
    if (v.size() != cone.ambient_dim)
        throw DimensionMismatch("projection input must live in R^d");
    if (!v.allFinite())
        throw InvalidParameter("projection input must be finite");

    ProjectionDetail out;
    switch (cone.kind) {
        case ConstraintKind::full_space:
        case ConstraintKind::coordinate_subspace:
            out.point = cone.basis.cols() == 0
                            ? Eigen::VectorXd::Zero(v.size()).eval()
                            : (cone.basis * (cone.basis.transpose() * v)).eval();
            break;
        case ConstraintKind::nonnegative_orthant:
        case ConstraintKind::finitely_generated_cone: {
            NnlsResult r = nnls(cone.generator_matrix_sigma, v);
            out.point = std::move(r.fit);
            out.coeffs = std::move(r.coeffs);
            out.iterations = r.iterations;
            break;
        }
        case ConstraintKind::box:
            out.point = v.cwiseMax(cone.box_lo).cwiseMin(cone.box_hi);
            break;
    }
    return out;
}

Eigen::VectorXd project(const Eigen::VectorXd& v, const ProjectedCone& cone) {
    return project_detail(v, cone).point;
}

Eigen::VectorXd constrained_market_price(const Market& market, const ConstraintSet& constraint) {
    const Eigen::VectorXd& xi = market.price_of_risk();
    if (constraint.kind == ConstraintKind::full_space) return xi;  // xi already in range(sigma^T)
    return project(xi, to_projected_cone(constraint, market));
}

double orthogonality_residual(const Eigen::VectorXd& xi, const Eigen::VectorXd& xi_c) {
    if (xi.size() != xi_c.size())
        throw DimensionMismatch("orthogonality residual needs equal-length vectors");
    return xi.dot(xi_c) - xi_c.squaredNorm();
}

Eigen::VectorXd recover_portfolio_direction(const Market& market,
                                            const Eigen::VectorXd& xi_c,
                                            const ConstraintSet* constraint,
                                            double tol) {
    if (xi_c.size() != market.d())
        throw DimensionMismatch("xi_c must live in R^d");
    Eigen::VectorXd direction = market.solve_covariance(Eigen::VectorXd(market.sigma() * xi_c));
    if (constraint != nullptr) {
        const double res = membership_residual(*constraint, direction);
        if (!(res <= tol))
            throw MembershipViolation("recovered direction violates Pi by " + std::to_string(res));
    }
    return direction;
}

double membership_residual(const ConstraintSet& constraint, const Eigen::VectorXd& pi) {
    constraint.check(static_cast<int>(pi.size()));
    switch (constraint.kind) {
        case ConstraintKind::full_space:
            return 0.0;
        case ConstraintKind::nonnegative_orthant:
            return std::max(0.0, -pi.minCoeff());
        case ConstraintKind::coordinate_subspace: {
            double res = 0.0;
            for (Eigen::Index i = 0; i < pi.size(); ++i)
                if (!constraint.free_mask[static_cast<std::size_t>(i)])
                    res = std::max(res, std::abs(pi[i]));
            return res;
        }
        case ConstraintKind::finitely_generated_cone:
            return (nnls(constraint.generators, pi).fit - pi).norm();
        case ConstraintKind::box: {
            double res = 0.0;
            for (Eigen::Index i = 0; i < pi.size(); ++i) {
                res = std::max(res, constraint.lower[i] - pi[i]);
                res = std::max(res, pi[i] - constraint.upper[i]);
            }
            return std::max(res, 0.0);
        }
    }
    throw InvalidParameter("unknown constraint kind");
}

Eigen::VectorXd sample_member(const ConstraintSet& constraint, int n,
                              const std::function<double()>& unif) {
    constraint.check(n);
    auto normal = [&unif]() {
        const double u1 = std::max(unif(), 1e-300);
        const double u2 = unif();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    };
    Eigen::VectorXd pi = Eigen::VectorXd::Zero(n);
    switch (constraint.kind) {
        case ConstraintKind::full_space:
            for (int i = 0; i < n; ++i) pi[i] = normal();
            return pi;
        case ConstraintKind::nonnegative_orthant:
            for (int i = 0; i < n; ++i) pi[i] = unif();
            return pi;
        case ConstraintKind::coordinate_subspace:
            for (int i = 0; i < n; ++i)
                if (constraint.free_mask[static_cast<std::size_t>(i)]) pi[i] = normal();
            return pi;
        case ConstraintKind::finitely_generated_cone: {
            Eigen::VectorXd gamma(constraint.generators.cols());
            for (Eigen::Index j = 0; j < gamma.size(); ++j) gamma[j] = unif();
            return constraint.generators * gamma;
        }
        case ConstraintKind::box:
            for (int i = 0; i < n; ++i)
                pi[i] = constraint.lower[i] + unif() * (constraint.upper[i] - constraint.lower[i]);
            return pi;
    }
    throw InvalidParameter("unknown constraint kind");
}

}  // namespace mmv
