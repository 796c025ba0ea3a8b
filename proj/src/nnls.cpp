#include "mmv/nnls.hpp"

#include <limits>
#include <vector>

#include "mmv/errors.hpp"

namespace mmv {

namespace {

Eigen::VectorXd solve_passive(const Eigen::MatrixXd& G,
                              const Eigen::VectorXd& v,
                              const std::vector<int>& passive) {
    const auto m = static_cast<Eigen::Index>(passive.size());
    Eigen::MatrixXd Gp(G.rows(), m);
    for (Eigen::Index j = 0; j < m; ++j) Gp.col(j) = G.col(passive[j]);
    const auto qr = Gp.colPivHouseholderQr();
    Eigen::VectorXd z = qr.solve(v);
    z += qr.solve(v - Gp * z);  // one refinement pass keeps the KKT gap near eps
    return z;
}

}  // namespace

NnlsResult nnls(const Eigen::MatrixXd& G, const Eigen::VectorXd& v) {
    const int k = static_cast<int>(G.cols());
    const int d = static_cast<int>(G.rows());
    if (v.size() != d) throw DimensionMismatch("nnls: v must have G.rows() entries");

    NnlsResult res;
    res.coeffs = Eigen::VectorXd::Zero(k);
    if (k == 0) {
        res.fit = Eigen::VectorXd::Zero(d);
        return res;
    }

    std::vector<int> passive;
    std::vector<bool> in_passive(k, false);
    Eigen::VectorXd gamma = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd residual = v;

    const double dual_scale = std::max(1.0, (G.transpose() * v).cwiseAbs().maxCoeff());
    const double tol = 1e-12 * dual_scale;
    const int max_iter = 10 * (k + d);
    int iter = 0;

    while (true) {
        // Dual vector w = G^T (v - G*gamma); most positive free entry enters,
        // smallest index wins ties.
        Eigen::VectorXd w = G.transpose() * residual;
        int enter = -1;
        double best = tol;
        for (int j = 0; j < k; ++j) {
            if (in_passive[j]) continue;
            if (w[j] > best) {
                best = w[j];
                enter = j;
            }
        }
        if (enter < 0) break;
        if (++iter > max_iter)
            throw SolverNonconvergence("nnls: iteration cap exceeded (ill-conditioned generators?)");

        passive.push_back(enter);
        in_passive[enter] = true;

        Eigen::VectorXd z = solve_passive(G, v, passive);
        while (z.minCoeff() <= 0.0) {
            if (++iter > max_iter)
                throw SolverNonconvergence("nnls: inner iteration cap exceeded");
            // Step toward z until the first passive coefficient hits zero.
            double alpha = std::numeric_limits<double>::infinity();
            for (std::size_t p = 0; p < passive.size(); ++p) {
                if (z[static_cast<Eigen::Index>(p)] <= 0.0) {
                    const double gj = gamma[passive[p]];
                    alpha = std::min(alpha, gj / (gj - z[static_cast<Eigen::Index>(p)]));
                }
            }
            if (!std::isfinite(alpha)) alpha = 0.0;
            for (std::size_t p = 0; p < passive.size(); ++p) {
                const int j = passive[p];
                gamma[j] += alpha * (z[static_cast<Eigen::Index>(p)] - gamma[j]);
            }
            // Drop everything at (or numerically below) zero.
            std::vector<int> kept;
            for (std::size_t p = 0; p < passive.size(); ++p) {
                const int j = passive[p];
                if (z[static_cast<Eigen::Index>(p)] <= 0.0 && gamma[j] <= tol) {
                    gamma[j] = 0.0;
                    in_passive[j] = false;
                } else {
                    kept.push_back(j);
                }
            }
            passive.swap(kept);
            if (passive.empty()) {
                z.resize(0);
                break;
            }
            z = solve_passive(G, v, passive);
        }
        for (std::size_t p = 0; p < passive.size(); ++p)
            gamma[passive[p]] = z[static_cast<Eigen::Index>(p)];
        residual = v - G * gamma;
    }

    res.coeffs = gamma;
    res.fit = G * gamma;
    res.iterations = iter;
    return res;
}

}  // namespace mmv
