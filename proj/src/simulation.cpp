#include "mmv/simulation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>

#include "mmv/errors.hpp"
#include "mmv/parallel.hpp"

namespace mmv {

void SimConfig::check() const {
    if (n_paths < 1) throw InvalidParameter("n_paths must be >= 1");
    if (n_steps < 1) throw InvalidParameter("n_steps must be >= 1");
    if (n_steps > (std::int64_t(1) << 31))
        throw InvalidParameter("n_steps exceeds the counter layout");
    if (antithetic && (n_paths % 2) != 0)
        throw InvalidParameter("antithetic pairing needs an even n_paths");
}

Strategy zero_feedback(int n) {
    return [n](double, double, Eigen::Ref<Eigen::VectorXd> out) {
        if (out.size() != n) throw DimensionMismatch("zero strategy buffer size");
        out.setZero();
    };
}

namespace {

Strategy threshold_feedback(const ClosedFormSolution& sol, double factor, double scale) {
    const Eigen::VectorXd dir = scale * sol.direction;
    const double x0 = sol.x0, r = sol.r, T = sol.horizon, theta = sol.theta;
    return [=](double t, double x, Eigen::Ref<Eigen::VectorXd> out) {
        const double gap = x - x0 * std::exp(r * t) - std::exp(-r * (T - t)) * factor / theta;
        out = -gap * dir;
    };
}

}  // namespace

Strategy mmv_feedback(const ClosedFormSolution& sol) {
    return threshold_feedback(sol, sol.f0(), 1.0);  // G(0,t) = 0 under a cone
}

Strategy mv_feedback(const ClosedFormSolution& sol) {
    return threshold_feedback(sol, sol.psi_tilde, 1.0);
}

Strategy scaled_feedback(const ClosedFormSolution& sol, double eps) {
    if (eps < -1.0) throw InvalidParameter("scaled strategy needs eps >= -1 to stay in Pi");
    return threshold_feedback(sol, sol.f0(), 1.0 + eps);
}

namespace {

struct Grid {
    Eigen::VectorXd times, h, f;
    double dt = 0.0;
};

Grid make_grid(const ClosedFormSolution& sol, std::int64_t n_steps) {
    Grid g;
    g.dt = sol.horizon / double(n_steps);
    g.times.resize(n_steps + 1);
    g.h.resize(n_steps + 1);
    g.f.resize(n_steps + 1);
    for (std::int64_t i = 0; i <= n_steps; ++i) {
        const double t = (i == n_steps) ? sol.horizon : double(i) * g.dt;
        g.times[i] = t;
        g.h[i] = std::exp(sol.h_rate * (sol.horizon - t));
        g.f[i] = std::exp(sol.f_rate * (sol.horizon - t));
    }
    return g;
}

void require_conic(const ClosedFormSolution& sol) {
    if (!sol.conic)
        throw NonConicSet("simulation requires a conic solution");
}

}  // namespace

PathBundle simulate_paths(const ClosedFormSolution& sol, const SimConfig& cfg,
                          const Strategy& strategy, const NormalSource* noise,
                          const ConstraintSet* membership_check) {
    require_conic(sol);
    cfg.check();
    const int n = static_cast<int>(sol.sigma.rows());
    const int d = static_cast<int>(sol.sigma.cols());
    const Grid grid = make_grid(sol, cfg.n_steps);
    const PhiloxNormalSource default_noise(cfg.seed);
    const NormalSource& src = noise ? *noise : default_noise;

    PathBundle out;
    out.times = grid.times;
    out.wealth.resize(cfg.n_paths, cfg.n_steps + 1);
    out.density.resize(cfg.n_paths, cfg.n_steps + 1);
    out.relation_residual.resize(cfg.n_paths, cfg.n_steps + 1);
    if (cfg.store_brownian) out.brownian.resize(cfg.n_paths, cfg.n_steps * d);

    const double sqdt = std::sqrt(grid.dt);
    const double theta = sol.theta;
    const double hx0 = grid.h[0] * sol.x0;
    const double f0 = grid.f[0];
    const double half_xic2 = 0.5 * sol.xic_squared;

    parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
        Eigen::VectorXd z(d), pi(n), dW(d), sig_pi(d);
        for (std::int64_t p = lo; p < hi; ++p) {
            const std::uint64_t stream = cfg.antithetic ? std::uint64_t(p) >> 1 : std::uint64_t(p);
            const double sign = (cfg.antithetic && (p & 1)) ? -1.0 : 1.0;
            double x = sol.x0;
            double lam = 1.0;       // exact exponential density
            double lam_hat = 1.0;   // scheme-consistent density for the residual
            out.wealth(p, 0) = x;
            out.density(p, 0) = lam;
            out.relation_residual(p, 0) = 0.0;
            for (std::int64_t i = 0; i < cfg.n_steps; ++i) {
                src.fill(stream, std::uint64_t(i), {z.data(), std::size_t(d)});
                dW = (sign * sqdt) * z;
                if (cfg.store_brownian)
                    out.brownian.row(p).segment(i * d, d) = dW.transpose();

                strategy(grid.times[i], x, pi);
                if (membership_check) {
                    const double res = membership_residual(*membership_check, pi);
                    if (res > 1e-9 * (1.0 + pi.norm()))
                        throw ConstraintViolation("strategy left Pi at t=" +
                                                  std::to_string(grid.times[i]) +
                                                  " (residual " + std::to_string(res) + ")");
                }

                const double zc = sol.xi_c.dot(dW);
                lam *= std::exp(-zc - half_xic2 * grid.dt);

                if (cfg.scheme == Scheme::euler) {
                    sig_pi.noalias() = sol.sigma.transpose() * pi;
                    x += (sol.r * x + pi.dot(sol.excess)) * grid.dt + sig_pi.dot(dW);
                    lam_hat *= 1.0 - zc;
                } else {
                    // exact_relation: invert the pathwise identity for X(t)
                    x = (theta * hx0 + f0 - grid.f[i + 1] * lam) / (theta * grid.h[i + 1]);
                    lam_hat = lam;
                }
                out.wealth(p, i + 1) = x;
                out.density(p, i + 1) = lam;
                out.relation_residual(p, i + 1) =
                    std::abs(theta * (grid.h[i + 1] * x - hx0) + (grid.f[i + 1] * lam_hat - f0));
            }
        }
    });
    return out;
}

RowMatrixXd simulate_wealth(const ClosedFormSolution& sol, const SimConfig& cfg,
                            const Strategy& strategy, const NormalSource* noise,
                            const ConstraintSet* membership_check) {
    return simulate_paths(sol, cfg, strategy, noise, membership_check).wealth;
}

TerminalSamples simulate_terminal(const ClosedFormSolution& sol, const SimConfig& cfg,
                                  const Strategy& strategy, const NormalSource* noise) {
    require_conic(sol);
    cfg.check();
    const int n = static_cast<int>(sol.sigma.rows());
    const int d = static_cast<int>(sol.sigma.cols());
    const Grid grid = make_grid(sol, cfg.n_steps);
    const PhiloxNormalSource default_noise(cfg.seed);
    const NormalSource& src = noise ? *noise : default_noise;

    TerminalSamples out;
    out.wealth.resize(cfg.n_paths);
    out.density.resize(cfg.n_paths);
    const double sqdt = std::sqrt(grid.dt);
    const double half_xic2 = 0.5 * sol.xic_squared;

    parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
        Eigen::VectorXd z(d), pi(n), dW(d), sig_pi(d);
        for (std::int64_t p = lo; p < hi; ++p) {
            const std::uint64_t stream = cfg.antithetic ? std::uint64_t(p) >> 1 : std::uint64_t(p);
            const double sign = (cfg.antithetic && (p & 1)) ? -1.0 : 1.0;
            double x = sol.x0;
            double lam = 1.0;
            for (std::int64_t i = 0; i < cfg.n_steps; ++i) {
                src.fill(stream, std::uint64_t(i), {z.data(), std::size_t(d)});
                dW = (sign * sqdt) * z;
                strategy(grid.times[i], x, pi);
                const double zc = sol.xi_c.dot(dW);
                lam *= std::exp(-zc - half_xic2 * grid.dt);
                if (cfg.scheme == Scheme::euler) {
                    sig_pi.noalias() = sol.sigma.transpose() * pi;
                    x += (sol.r * x + pi.dot(sol.excess)) * grid.dt + sig_pi.dot(dW);
                } else {
                    x = (sol.theta * grid.h[0] * sol.x0 + grid.f[0] - grid.f[i + 1] * lam) /
                        (sol.theta * grid.h[i + 1]);
                }
            }
            out.wealth[p] = x;
            out.density[p] = lam;
        }
    });
    return out;
}

RowMatrixXd simulate_density(const ClosedFormSolution& sol, const SimConfig& cfg,
                             const NormalSource* noise) {
    require_conic(sol);
    cfg.check();
    const int d = static_cast<int>(sol.sigma.cols());
    const double dt = sol.horizon / double(cfg.n_steps);
    const double sqdt = std::sqrt(dt);
    const double half_xic2 = 0.5 * sol.xic_squared;
    const PhiloxNormalSource default_noise(cfg.seed);
    const NormalSource& src = noise ? *noise : default_noise;

    RowMatrixXd lam(cfg.n_paths, cfg.n_steps + 1);
    parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
        Eigen::VectorXd z(d), dW(d);
        for (std::int64_t p = lo; p < hi; ++p) {
            const std::uint64_t stream = cfg.antithetic ? std::uint64_t(p) >> 1 : std::uint64_t(p);
            const double sign = (cfg.antithetic && (p & 1)) ? -1.0 : 1.0;
            double l = 1.0;
            lam(p, 0) = l;
            for (std::int64_t i = 0; i < cfg.n_steps; ++i) {
                src.fill(stream, std::uint64_t(i), {z.data(), std::size_t(d)});
                dW = (sign * sqdt) * z;
                l *= std::exp(-sol.xi_c.dot(dW) - half_xic2 * dt);
                lam(p, i + 1) = l;
            }
        }
    });
    return lam;
}

QlmBundle simulate_qlm(const ClosedFormSolution& sol, const SimConfig& cfg, double beta,
                       const NormalSource* noise) {
    require_conic(sol);
    cfg.check();
    const int d = static_cast<int>(sol.sigma.cols());
    const double dt = sol.horizon / double(cfg.n_steps);
    const double sqdt = std::sqrt(dt);
    const double start = sol.x0 - beta * std::exp(-sol.r * sol.horizon);
    const double rate = sol.r - sol.xi_dot_xic - 0.5 * sol.xic_squared;
    const PhiloxNormalSource default_noise(cfg.seed);
    const NormalSource& src = noise ? *noise : default_noise;

    QlmBundle out;
    out.times.resize(cfg.n_steps + 1);
    for (std::int64_t i = 0; i <= cfg.n_steps; ++i)
        out.times[i] = (i == cfg.n_steps) ? sol.horizon : double(i) * dt;
    out.aux.resize(cfg.n_paths, cfg.n_steps + 1);

    parallel_for(cfg.n_paths, cfg.threads, [&](std::int64_t lo, std::int64_t hi) {
        Eigen::VectorXd z(d), dW(d);
        for (std::int64_t p = lo; p < hi; ++p) {
            const std::uint64_t stream = cfg.antithetic ? std::uint64_t(p) >> 1 : std::uint64_t(p);
            const double sign = (cfg.antithetic && (p & 1)) ? -1.0 : 1.0;
            double xw = 0.0;  // xi_c . W(t)
            out.aux(p, 0) = start;
            for (std::int64_t i = 0; i < cfg.n_steps; ++i) {
                src.fill(stream, std::uint64_t(i), {z.data(), std::size_t(d)});
                dW = (sign * sqdt) * z;
                xw += sol.xi_c.dot(dW);
                out.aux(p, i + 1) = start * std::exp(rate * out.times[i + 1] - xw);
            }
        }
    });
    return out;
}

Eigen::VectorXd relation_residual(const ClosedFormSolution& sol, const PathBundle& paths) {
    require_conic(sol);
    return paths.relation_residual.rowwise().maxCoeff();
}

double strong_gap_rms(const ClosedFormSolution& sol, const PathBundle& paths) {
    require_conic(sol);
    const double theta = sol.theta;
    const double h0x0 = std::exp(sol.h_rate * sol.horizon) * sol.x0;
    const double f0 = std::exp(sol.f_rate * sol.horizon);
    const auto last = paths.wealth.cols() - 1;
    double acc = 0.0;
    for (std::int64_t p = 0; p < paths.n_paths(); ++p) {
        const double reconstructed = (theta * h0x0 + f0 - paths.density(p, last)) / theta;
        const double gap = paths.wealth(p, last) - reconstructed;
        acc += gap * gap;
    }
    return std::sqrt(acc / double(paths.n_paths()));
}

MonotoneReport monotone_region_check(const ClosedFormSolution& sol,
                                     const Eigen::VectorXd& terminal_wealth,
                                     const Eigen::VectorXd& terminal_density) {
    if (terminal_wealth.size() != terminal_density.size() || terminal_wealth.size() == 0)
        throw DimensionMismatch("monotone check needs matching nonempty samples");
    const double mean = terminal_wealth.mean();
    const double bound = 1.0 / sol.theta;
    Eigen::VectorXd identity(terminal_wealth.size());
    std::int64_t beyond = 0;
    for (Eigen::Index i = 0; i < terminal_wealth.size(); ++i) {
        if (terminal_wealth[i] - mean > bound) ++beyond;
        identity[i] = std::abs(terminal_wealth[i] - mean -
                               (1.0 - terminal_density[i]) / sol.theta);
    }
    MonotoneReport rep;
    rep.fraction_beyond = double(beyond) / double(terminal_wealth.size());
    rep.median_identity = quantile(identity, 0.5);
    rep.max_identity = identity.maxCoeff();
    return rep;
}

namespace {

void append_double(std::string& line, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    line.append(buf, res.ptr);
}

}  // namespace

void write_paths_csv(std::ostream& os, const PathBundle& paths) {
    os << "time,path_id,wealth,density,residual\n";
    std::string line;
    for (std::int64_t p = 0; p < paths.n_paths(); ++p) {
        for (std::int64_t i = 0; i <= paths.n_steps(); ++i) {
            line.clear();
            append_double(line, paths.times[i]);
            line += ',';
            line += std::to_string(p);
            line += ',';
            append_double(line, paths.wealth(p, i));
            line += ',';
            append_double(line, paths.density(p, i));
            line += ',';
            append_double(line, paths.relation_residual(p, i));
            line += '\n';
            os << line;
        }
    }
}

MomentSummary moments(const Eigen::VectorXd& samples) {
    if (samples.size() == 0) throw InsufficientPaths("no samples");
    MomentSummary m;
    m.mean = samples.mean();
    m.variance = samples.size() < 2
                     ? 0.0
                     : (samples.array() - m.mean).square().sum() / double(samples.size() - 1);
    m.min = samples.minCoeff();
    m.max = samples.maxCoeff();
    return m;
}

double quantile(Eigen::VectorXd samples, double q) {
    if (samples.size() == 0) throw InsufficientPaths("no samples");
    q = std::clamp(q, 0.0, 1.0);
    std::sort(samples.data(), samples.data() + samples.size());
    const double pos = q * double(samples.size() - 1);
    const auto lo = static_cast<Eigen::Index>(pos);
    const auto hi = std::min<Eigen::Index>(lo + 1, samples.size() - 1);
    const double w = pos - double(lo);
    return (1.0 - w) * samples[lo] + w * samples[hi];
}

}  // namespace mmv
