#include <doctest.h>

#include <cmath>
#include <sstream>

#include "mmv/simulation.hpp"
#include "test_helpers.hpp"

using namespace mmv;
using namespace mmv::testing;

namespace {

struct ZeroNoise final : NormalSource {
    void fill(std::uint64_t, std::uint64_t, std::span<double> out) const override {
        for (double& z : out) z = 0.0;
    }
};

SimConfig small_cfg(std::int64_t paths, std::int64_t steps, std::uint64_t seed = 42) {
    SimConfig cfg;
    cfg.n_paths = paths;
    cfg.n_steps = steps;
    cfg.seed = seed;
    cfg.threads = 1;
    return cfg;
}

}  // namespace

TEST_CASE("philox reproduces the reference known-answer vectors") {
    const auto zero = Philox4x32::block({0, 0, 0, 0}, {0, 0});
    CHECK(zero[0] == 0x6627e8d5u);
    CHECK(zero[1] == 0xe169c58du);
    CHECK(zero[2] == 0xbc57ac4cu);
    CHECK(zero[3] == 0x9b00dbd8u);

    const auto ones = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                                        {0xffffffffu, 0xffffffffu});
    CHECK(ones[0] == 0x408f276du);
    CHECK(ones[1] == 0x41c83b0eu);
    CHECK(ones[2] == 0xa20bc7c6u);
    CHECK(ones[3] == 0x6d5451fdu);

    const auto pi_digits = Philox4x32::block(
        {0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
    CHECK(pi_digits[0] == 0xd16cfe09u);
    CHECK(pi_digits[1] == 0x94fdccebu);
    CHECK(pi_digits[2] == 0x5001e420u);
    CHECK(pi_digits[3] == 0x24126ea1u);
}

TEST_CASE("identical seeds produce identical bundles at any thread count") {
    const ClosedFormSolution sol = desk_solution();
    SimConfig cfg = small_cfg(500, 64, 7);
    const PathBundle a = simulate_paths(sol, cfg, mmv_feedback(sol));
    const PathBundle b = simulate_paths(sol, cfg, mmv_feedback(sol));
    CHECK(a.wealth == b.wealth);
    CHECK(a.density == b.density);

    // initial-slice invariants: X(0) = x0 and Lambda(0) = 1 on every path
    CHECK((a.wealth.col(0).array() == sol.x0).all());
    CHECK((a.density.col(0).array() == 1.0).all());

    // the wealth-only entry point shares increments with the joint bundle
    CHECK(simulate_wealth(sol, cfg, mmv_feedback(sol)) == a.wealth);

    cfg.threads = 3;
    const PathBundle c = simulate_paths(sol, cfg, mmv_feedback(sol));
    CHECK(a.wealth == c.wealth);
    CHECK(a.density == c.density);
    CHECK(a.relation_residual == c.relation_residual);
}

TEST_CASE("zero distortion freezes the density at one") {
    MarketParams mp = desk_params();
    mp.mu[0] = mp.r;
    const ClosedFormSolution sol =
        solve(Market::validate(mp), desk_pref(), ConstraintSet::orthant());
    const PathBundle paths = simulate_paths(sol, small_cfg(50, 16), mmv_feedback(sol));
    CHECK(paths.density.minCoeff() == 1.0);
    CHECK(paths.density.maxCoeff() == 1.0);
}

TEST_CASE("forcing W = 0 pins the exact density at its deterministic drift") {
    const ClosedFormSolution sol = desk_solution();
    const ZeroNoise noise;
    const PathBundle paths =
        simulate_paths(sol, small_cfg(1, 32), mmv_feedback(sol), &noise);
    const double want = std::exp(-0.5 * sol.xic_squared * sol.horizon);
    CHECK(paths.density(0, 32) == doctest::Approx(want).epsilon(1e-14));
    CHECK(paths.density.minCoeff() > 0.0);
}

TEST_CASE("exact density is a positive martingale with lognormal second moment") {
    const ClosedFormSolution sol = desk_solution();
    const SimConfig cfg = small_cfg(20000, 64, 11);
    const RowMatrixXd lam = simulate_density(sol, cfg);
    const Eigen::VectorXd terminal = lam.col(lam.cols() - 1);
    CHECK(terminal.minCoeff() > 0.0);

    const double mean = terminal.mean();
    const double sd = std::sqrt((terminal.array() - mean).square().sum() /
                                double(terminal.size() - 1));
    const double se = sd / std::sqrt(double(terminal.size()));
    CHECK(std::abs(mean - 1.0) <= 4.0 * se);

    const Eigen::ArrayXd sq = terminal.array().square();
    const double mean2 = sq.mean();
    const double sd2 = std::sqrt((sq - mean2).square().sum() / double(sq.size() - 1));
    const double want2 = std::exp(sol.xic_squared * sol.horizon);
    CHECK(std::abs(mean2 - want2) <= 4.0 * sd2 / std::sqrt(double(sq.size())));
}

TEST_CASE("zero strategy compounds the risk-free rate exactly") {
    const ClosedFormSolution sol = desk_solution();
    const std::int64_t steps = 128;
    const PathBundle paths =
        simulate_paths(sol, small_cfg(10, steps, 3), zero_feedback(1));
    const double dt = sol.horizon / double(steps);
    const double want = sol.x0 * std::pow(1.0 + sol.r * dt, double(steps));
    for (std::int64_t p = 0; p < paths.n_paths(); ++p)
        CHECK(paths.wealth(p, steps) == doctest::Approx(want).epsilon(1e-14));
    CHECK(want == doctest::Approx(sol.x0 * std::exp(sol.r * sol.horizon)).epsilon(1e-4));
}

TEST_CASE("driftless risky part leaves the mean at risk-free compounding") {
    MarketParams mp = desk_params();
    mp.mu[0] = mp.r;  // B = 0
    const ClosedFormSolution sol =
        solve(Market::validate(mp), desk_pref(), ConstraintSet::orthant());
    const ConstraintSet orthant = ConstraintSet::orthant();
    const Strategy one = [](double, double, Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(1.0);
    };
    const SimConfig cfg = small_cfg(20000, 64, 19);
    const PathBundle paths = simulate_paths(sol, cfg, one, nullptr, &orthant);
    const Eigen::VectorXd terminal = paths.wealth.col(paths.wealth.cols() - 1);
    const double dt = sol.horizon / double(cfg.n_steps);
    const double want = sol.x0 * std::pow(1.0 + sol.r * dt, double(cfg.n_steps));
    const double mean = terminal.mean();
    const double se = std::sqrt((terminal.array() - mean).square().sum() /
                                double(terminal.size() - 1) / double(terminal.size()));
    CHECK(std::abs(mean - want) <= 4.0 * se);
}

TEST_CASE("optimal wealth mean approaches the bliss point minus 1/theta") {
    const ClosedFormSolution sol = desk_solution();
    const SimConfig cfg = small_cfg(20000, 512, 23);
    const TerminalSamples terminal = simulate_terminal(sol, cfg, mmv_feedback(sol));
    const double want = threshold_process(sol).bliss() - 1.0 / sol.theta;  // beta* - 1
    const double mean = terminal.wealth.mean();
    const double se = std::sqrt((terminal.wealth.array() - mean).square().sum() /
                                double(terminal.wealth.size() - 1) /
                                double(terminal.wealth.size()));
    CHECK(want == doctest::Approx(1.0949489928713763).epsilon(1e-12));
    CHECK(std::abs(mean - want) <= 4.0 * se + 1e-4);
}

TEST_CASE("relation residual starts at zero and vanishes for the exact scheme") {
    const ClosedFormSolution sol = desk_solution();
    SimConfig cfg = small_cfg(200, 64, 31);
    const PathBundle euler = simulate_paths(sol, cfg, mmv_feedback(sol));
    CHECK(euler.relation_residual.col(0).cwiseAbs().maxCoeff() == 0.0);

    cfg.scheme = Scheme::exact_relation;
    const PathBundle exact = simulate_paths(sol, cfg, mmv_feedback(sol));
    CHECK(relation_residual(sol, exact).maxCoeff() <= 1e-12);
}

TEST_CASE("relation residual shrinks at first order in dt") {
    const ClosedFormSolution sol = desk_solution();
    std::vector<double> medians;
    for (std::int64_t steps : {256, 512}) {
        const PathBundle paths =
            simulate_paths(sol, small_cfg(4000, steps, 37), mmv_feedback(sol));
        medians.push_back(quantile(relation_residual(sol, paths), 0.5));
    }
    const double order = std::log2(medians[0] / medians[1]);
    CHECK(order >= 0.7);
    CHECK(order <= 1.3);
}

TEST_CASE("terminal strong gap against the exact reconstruction has order 1/2") {
    const ClosedFormSolution sol = desk_solution();
    std::vector<double> gaps;
    for (std::int64_t steps : {256, 1024}) {
        const PathBundle paths =
            simulate_paths(sol, small_cfg(4000, steps, 41), mmv_feedback(sol));
        gaps.push_back(strong_gap_rms(sol, paths));
    }
    const double order = 0.5 * std::log2(gaps[0] / gaps[1]);
    CHECK(order >= 0.3);
    CHECK(order <= 0.7);
}

TEST_CASE("degenerate market stays inside the monotone region") {
    MarketParams mp = desk_params();
    mp.mu[0] = mp.r;
    const ClosedFormSolution sol =
        solve(Market::validate(mp), desk_pref(), ConstraintSet::orthant());
    const TerminalSamples t = simulate_terminal(sol, small_cfg(500, 32), mmv_feedback(sol));
    const MonotoneReport rep = monotone_region_check(sol, t.wealth, t.density);
    CHECK(rep.fraction_beyond == 0.0);
    CHECK(rep.max_identity <= 1e-10);
}

TEST_CASE("desk instance monotone region check") {
    const ClosedFormSolution sol = desk_solution();
    const SimConfig cfg = small_cfg(20000, 512, 43);
    const TerminalSamples t = simulate_terminal(sol, cfg, mmv_feedback(sol));
    const MonotoneReport rep = monotone_region_check(sol, t.wealth, t.density);
    CHECK(rep.fraction_beyond <= 1e-3);
    CHECK(rep.median_identity <= 10.0 * sol.horizon / double(cfg.n_steps));
}

TEST_CASE("auxiliary QLM paths") {
    const ClosedFormSolution sol = desk_solution();

    SUBCASE("beta = x0 e^{rT} with zero distortion is the zero path") {
        MarketParams mp = desk_params();
        mp.mu[0] = mp.r;
        const ClosedFormSolution flat =
            solve(Market::validate(mp), desk_pref(), ConstraintSet::orthant());
        const double beta = flat.x0 * std::exp(flat.r * flat.horizon);
        const QlmBundle qlm = simulate_qlm(flat, small_cfg(20, 16), beta);
        CHECK(qlm.aux.cwiseAbs().maxCoeff() <= 1e-14);
    }

    SUBCASE("terminal mean under beta* is -1/theta") {
        const SimConfig cfg = small_cfg(20000, 64, 47);
        const QlmBundle qlm = simulate_qlm(sol, cfg, sol.beta_star);
        const Eigen::VectorXd terminal = qlm.aux.col(qlm.aux.cols() - 1);
        const double mean = terminal.mean();
        const double se = std::sqrt((terminal.array() - mean).square().sum() /
                                    double(terminal.size() - 1) / double(terminal.size()));
        CHECK(std::abs(mean + 1.0 / sol.theta) <= 4.0 * se);
    }

    SUBCASE("shifted auxiliary path tracks Euler wealth under the MV strategy") {
        const SimConfig cfg = small_cfg(2000, 512, 53);
        const QlmBundle qlm = simulate_qlm(sol, cfg, sol.beta_star);
        const PathBundle wealth = simulate_paths(sol, cfg, mv_feedback(sol));
        double worst_median_gap = 0.0;
        Eigen::VectorXd gap(cfg.n_paths);
        const auto last = qlm.aux.cols() - 1;
        for (std::int64_t p = 0; p < cfg.n_paths; ++p) {
            const double recovered =
                qlm.aux(p, last) + sol.beta_star * std::exp(-sol.r * 0.0);
            gap[p] = std::abs(recovered - wealth.wealth(p, last));
        }
        worst_median_gap = quantile(gap, 0.5);
        CHECK(worst_median_gap <= 1e-2);  // O(dt) + strong noise at 512 steps
    }
}

TEST_CASE("membership checking flags strategies that leave Pi") {
    const ClosedFormSolution sol = desk_solution();
    const ConstraintSet orthant = ConstraintSet::orthant();
    const Strategy bad = [](double, double, Eigen::Ref<Eigen::VectorXd> out) {
        out.setConstant(-1.0);
    };
    CHECK_THROWS_AS(
        simulate_paths(sol, small_cfg(2, 4), bad, nullptr, &orthant),
        ConstraintViolation);
}

TEST_CASE("antithetic pairing never hurts the terminal-mean standard error") {
    const ClosedFormSolution sol = desk_solution();
    SimConfig cfg = small_cfg(10000, 128, 59);
    const TerminalSamples plain = simulate_terminal(sol, cfg, mmv_feedback(sol));
    const double mean_p = plain.wealth.mean();
    const double se_plain = std::sqrt((plain.wealth.array() - mean_p).square().sum() /
                                      double(cfg.n_paths - 1) / double(cfg.n_paths));

    cfg.antithetic = true;
    const TerminalSamples anti = simulate_terminal(sol, cfg, mmv_feedback(sol));
    Eigen::VectorXd pair_mean(cfg.n_paths / 2);
    for (std::int64_t p = 0; p < cfg.n_paths / 2; ++p)
        pair_mean[p] = 0.5 * (anti.wealth[2 * p] + anti.wealth[2 * p + 1]);
    const double mean_a = pair_mean.mean();
    const double se_anti = std::sqrt((pair_mean.array() - mean_a).square().sum() /
                                     double(pair_mean.size() - 1) / double(pair_mean.size()));
    CHECK(se_anti <= se_plain * 1.02);

    cfg.n_paths = 999;
    CHECK_THROWS_AS(simulate_terminal(sol, cfg, mmv_feedback(sol)), InvalidParameter);
}

TEST_CASE("stored increments reproduce the exact density") {
    const ClosedFormSolution sol = desk_solution();
    SimConfig cfg = small_cfg(20, 32, 61);
    cfg.store_brownian = true;
    const PathBundle paths = simulate_paths(sol, cfg, mmv_feedback(sol));
    for (std::int64_t p = 0; p < cfg.n_paths; ++p) {
        const double wT = paths.brownian.row(p).sum();  // d = 1
        const double want =
            std::exp(-sol.xi_c[0] * wT - 0.5 * sol.xic_squared * sol.horizon);
        CHECK(paths.density(p, 32) == doctest::Approx(want).epsilon(1e-12));
    }
}

TEST_CASE("CSV export is byte-stable across thread counts") {
    const ClosedFormSolution sol = desk_solution();
    SimConfig cfg = small_cfg(64, 16, 67);
    std::ostringstream a, b;
    write_paths_csv(a, simulate_paths(sol, cfg, mmv_feedback(sol)));
    cfg.threads = 4;
    write_paths_csv(b, simulate_paths(sol, cfg, mmv_feedback(sol)));
    CHECK(a.str() == b.str());
    CHECK(a.str().substr(0, 37) == "time,path_id,wealth,density,residual\n");

    std::size_t lines = 0;
    for (char ch : a.str())
        if (ch == '\n') ++lines;
    CHECK(lines == 1 + 64 * 17);
}

TEST_CASE("config validation") {
    SimConfig cfg;
    cfg.n_paths = 0;
    CHECK_THROWS_AS(cfg.check(), InvalidParameter);
    cfg.n_paths = 4;
    cfg.n_steps = 0;
    CHECK_THROWS_AS(cfg.check(), InvalidParameter);
}
