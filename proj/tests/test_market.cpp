#include <doctest.h>

#include "mmv/market.hpp"
#include "mmv/rng.hpp"
#include "test_helpers.hpp"

using namespace mmv;
using namespace mmv::testing;

TEST_CASE("desk market derives Sigma, B and xi") {
    const Market market = desk_market();
    CHECK(market.n() == 1);
    CHECK(market.d() == 1);
    CHECK(market.covariance()(0, 0) == doctest::Approx(0.04).epsilon(1e-14));
    CHECK(market.excess_return()[0] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(market.price_of_risk()[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("zero excess return gives zero xi") {
    MarketParams mp;
    mp.r = 0.02;
    mp.mu = Eigen::VectorXd::Constant(3, 0.02);
    mp.sigma = Eigen::MatrixXd::Identity(3, 3);
    mp.horizon_T = 1.0;
    const Market market = Market::validate(mp);
    CHECK(market.excess_return().norm() == 0.0);
    CHECK(market.price_of_risk().norm() == 0.0);
}

TEST_CASE("identity sigma passes B through to xi") {
    MarketParams mp;
    mp.r = 0.0;
    mp.mu.resize(2);
    mp.mu << 0.05, -0.02;
    mp.sigma = Eigen::MatrixXd::Identity(2, 2);
    mp.horizon_T = 2.0;
    const Market market = Market::validate(mp);
    CHECK(market.price_of_risk()[0] == doctest::Approx(0.05).epsilon(1e-14));
    CHECK(market.price_of_risk()[1] == doctest::Approx(-0.02).epsilon(1e-14));
}

TEST_CASE("shape and finiteness violations are rejected") {
    MarketParams mp = desk_params();
    mp.sigma = Eigen::MatrixXd::Ones(2, 1);  // n > d
    mp.mu = Eigen::VectorXd::Ones(2);
    CHECK_THROWS_AS(Market::validate(mp), DimensionMismatch);

    mp = desk_params();
    mp.mu = Eigen::VectorXd::Ones(3);
    CHECK_THROWS_AS(Market::validate(mp), DimensionMismatch);

    mp = desk_params();
    mp.r = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(Market::validate(mp), InvalidParameter);

    mp = desk_params();
    mp.horizon_T = 0.0;
    CHECK_THROWS_AS(Market::validate(mp), InvalidParameter);
}

TEST_CASE("rank-deficient sigma is a SingularCovariance") {
    MarketParams mp;
    mp.r = 0.01;
    mp.mu = Eigen::VectorXd::Constant(2, 0.05);
    mp.sigma.resize(2, 3);
    mp.sigma << 1.0, 2.0, 3.0,
                2.0, 4.0, 6.0;   // second row is a multiple of the first
    mp.horizon_T = 1.0;
    CHECK_THROWS_AS(Market::validate(mp), SingularCovariance);
}

TEST_CASE("xi lies in the row space of sigma and prices every portfolio") {
    CounterRng rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 1 + static_cast<int>(rng.uniform() * 4.0);
        const int d = n + static_cast<int>(rng.uniform() * (6.0 - n + 1.0));
        const Market market = random_market(rng, n, d);
        const Eigen::VectorXd xi = market.price_of_risk();

        // xi is sigma^T of something: least-squares fit onto sigma^T leaves no residual
        const Eigen::MatrixXd sigma_t = market.sigma().transpose();
        const Eigen::VectorXd fit = sigma_t.colPivHouseholderQr().solve(xi);
        CHECK((sigma_t * fit - xi).norm() <= 1e-10 * (1.0 + xi.norm()));

        // pi^T sigma xi == pi^T B for random portfolios
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd pi = Eigen::VectorXd::NullaryExpr(
                n, [&](Eigen::Index) { return rng.normal(); });
            const double lhs = pi.dot(market.sigma() * xi);
            const double rhs = pi.dot(market.excess_return());
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}
