#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "seqbf/bayes_factor.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace seqbf;

namespace {
const double kInf = std::numeric_limits<double>::infinity();
const double kLog3 = std::log(3.0);
const double kJzsTau = 0.7071067811865476;  // 1/sqrt(2)

InformedT jzs() { return InformedT{0.0, kJzsTau, 1.0, -kInf, kInf}; }
InformedT jzs_positive() { return InformedT{0.0, kJzsTau, 1.0, 0.0, kInf}; }
}  // namespace

TEST_CASE("posterior moments") {
    ZObservation obs{1.7, 0.5};
    PosteriorMoments p = posterior_moments(obs, 0.3, 0.2);
    CHECK(std::fabs(p.tau_star * p.tau_star - 1.0 / (1.0 / 0.25 + 1.0 / 0.04)) < 1e-15);
    CHECK(std::fabs(p.mu_star - (1.7 / 0.5 + 0.3 / 0.04) * p.tau_star * p.tau_star) < 1e-14);
    CHECK_THROWS_AS(posterior_moments(ZObservation{0.0, 0.0}, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("PointPoint matches the published odds-ratio Bayes factors") {
    // log OR thresholds observed at z = 2.23 (OR 5.1) and z = 2.60 (OR 3.5)
    {
        double sigma = std::log(5.1) / 2.23;
        double bf = bf01_z(ZObservation{2.23, sigma}, PointPoint{kLog3});
        CHECK(std::fabs(bf - 0.10831610077329606) < 1e-12);
        CHECK(std::fabs(1.0 / bf - 9.2) < 0.05);
    }
    {
        double sigma = std::log(3.5) / 2.60;
        double bf = bf01_z(ZObservation{2.60, sigma}, PointPoint{kLog3});
        CHECK(std::fabs(bf - 0.03583523703242936) < 1e-12);
        CHECK(std::fabs(1.0 / bf - 27.9) < 0.05);
    }
}

TEST_CASE("bf01_z trivial identities") {
    // PointPoint at z = mu/(2 sigma): exponent vanishes
    for (double mu : {0.4, -1.3, 2.0})
        for (double sigma : {0.3, 1.0, 2.5}) {
            double bf = bf01_z(ZObservation{mu / (2.0 * sigma), sigma}, PointPoint{mu});
            CHECK(std::fabs(bf - 1.0) < 1e-14);
        }
    // PointTwoSided at mu=0, z=0: sqrt(1 + tau^2/sigma^2)
    for (double tau : {0.2, 1.0, 3.0})
        for (double sigma : {0.5, 1.7}) {
            double bf = bf01_z(ZObservation{0.0, sigma}, PointTwoSided{0.0, tau});
            CHECK(std::fabs(bf - std::sqrt(1.0 + tau * tau / (sigma * sigma))) < 1e-14);
        }
}

TEST_CASE("PointPoint log BF is affine in z with slope -mu/sigma") {
    double mu = 0.8, sigma = 0.6;
    auto lbf = [&](double z) { return std::log(bf01_z(ZObservation{z, sigma}, PointPoint{mu})); };
    double slope = (lbf(1.0) - lbf(0.0));
    CHECK(std::fabs(slope + mu / sigma) < 1e-12);
    for (double z = -3.0; z <= 3.0; z += 0.5)
        CHECK(std::fabs(lbf(z) - (lbf(0.0) + slope * z)) < 1e-12);
}

TEST_CASE("critical_z PointPoint") {
    CriticalSet cs = critical_z(0.1, 0.4818, PointPoint{1.0986});
    REQUIRE(std::holds_alternative<Single>(cs));
    double zc = std::get<Single>(cs).z_crit;
    CHECK(std::fabs(zc - 2.1499171193962) < 1e-10);
    CHECK(std::fabs(zc - 2.150) < 1e-3);
    CHECK(std::fabs(bf01_z(ZObservation{zc, 0.4818}, PointPoint{1.0986}) - 0.1) < 1e-12);

    // negative mu flips the orientation but the round trip still holds
    CriticalSet neg = critical_z(6.0, 0.7, PointPoint{-0.9});
    double zn = std::get<Single>(neg).z_crit;
    CHECK(std::fabs(bf01_z(ZObservation{zn, 0.7}, PointPoint{-0.9}) - 6.0) < 1e-10);
}

TEST_CASE("critical_z PointTwoSided pair and unattainable") {
    PointTwoSided ts{0.3, 0.8};
    double sigma = 0.5;
    CriticalSet cs = critical_z(0.25, sigma, ts);
    REQUIRE(std::holds_alternative<Pair>(cs));
    const auto& b = std::get<Pair>(cs).boundary;
    CHECK(b.z_minus < b.z_plus);
    CHECK(b.z_minus <= b.M);
    CHECK(b.M <= b.z_plus);
    CHECK(std::fabs(b.M - (-ts.mu * sigma / (ts.tau * ts.tau))) < 1e-14);
    CHECK(std::fabs(bf01_z(ZObservation{b.z_minus, sigma}, ts) - 0.25) < 1e-10);
    CHECK(std::fabs(bf01_z(ZObservation{b.z_plus, sigma}, ts) - 0.25) < 1e-10);

    // BF maximized at M; below k outside [z_minus, z_plus]
    double bf_at_m = bf01_z(ZObservation{b.M, sigma}, ts);
    CHECK(bf_at_m > bf01_z(ZObservation{b.M + 0.4, sigma}, ts));
    CHECK(bf01_z(ZObservation{b.z_minus - 0.3, sigma}, ts) < 0.25);
    CHECK(bf01_z(ZObservation{b.z_plus + 0.3, sigma}, ts) < 0.25);

    CriticalSet un = critical_z(bf_at_m * 1.01, sigma, ts);
    CHECK(std::holds_alternative<Unattainable>(un));
}

TEST_CASE("critical_z DirectionalDirectional round trip, randomized") {
    std::mt19937_64 gen(4711);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int it = 0; it < 200; ++it) {
        double mu = -1.5 + 3.0 * u(gen);
        double tau = 0.1 + 2.0 * u(gen);
        double sigma = 0.1 + 2.0 * u(gen);
        double k = std::exp(-3.4 + 6.8 * u(gen));  // ~ 1/30 .. 30
        DirectionalDirectional dd{mu, tau};
        CriticalSet cs = critical_z(k, sigma, dd);
        REQUIRE(std::holds_alternative<Single>(cs));
        double zc = std::get<Single>(cs).z_crit;
        double bf = bf01_z(ZObservation{zc, sigma}, dd);
        CHECK(std::fabs(bf - k) < 1e-8 * std::max(1.0, k));
    }
}

TEST_CASE("PointDirectional monotone BF and Single critical value") {
    PointDirectional pd{0.4, 0.6};
    double sigma = 0.45;
    double prev = kInf;
    for (double z = -8.0; z <= 8.0; z += 0.25) {
        double bf = bf01_z(ZObservation{z, sigma}, pd);
        CHECK(bf < prev);
        prev = bf;
    }
    for (double k : {6.0, 1.0, 0.1}) {
        CriticalSet cs = critical_z(k, sigma, pd);
        REQUIRE(std::holds_alternative<Single>(cs));
        double zc = std::get<Single>(cs).z_crit;
        CHECK(std::fabs(bf01_z(ZObservation{zc, sigma}, pd) - k) < 1e-6 * std::max(1.0, k));
    }
    // mu = 0 edge: half-normal H1 prior
    PointDirectional half{0.0, 1.0};
    CriticalSet cs0 = critical_z(0.2, 1.0, half);
    REQUIRE(std::holds_alternative<Single>(cs0));
    CHECK(std::fabs(bf01_z(ZObservation{std::get<Single>(cs0).z_crit, 1.0}, half) - 0.2) < 1e-7);
}

TEST_CASE("bf01_t collapsing prior approaches 1") {
    InformedT tight{0.0, 1e-6, 1.0, -kInf, kInf};
    double bf = bf01_t(1.4, 15.0, 58.0, tight);
    CHECK(std::fabs(bf - 1.0) < 1e-3);
}

TEST_CASE("bf01_t JZS against trapezoid oracle and pinned value") {
    double t = 2.5, n_eff = 15.0, df = 58.0;
    double bf = bf01_t(t, n_eff, df, jzs());
    CHECK(std::fabs(bf / 0.29596844268150024 - 1.0) < 1e-6);

    // independent wide-grid trapezoid quadrature of the denominator
    double sn = std::sqrt(n_eff);
    double lo = -6.0, hi = 7.0;  // integrand support is well inside
    long n = 52000;
    double h = (hi - lo) / n, acc = 0.0;
    for (long i = 0; i <= n; ++i) {
        double theta = lo + i * h;
        double w = (i == 0 || i == (long)n) ? 0.5 : 1.0;
        acc += w * nct_pdf(t, df, theta * sn) * t_pdf(theta / kJzsTau, 1.0) / kJzsTau;
    }
    double oracle = t_pdf(t, df) / (acc * h);
    CHECK(std::fabs(bf / oracle - 1.0) < 1e-6);

    // symmetry of the untruncated symmetric prior
    CHECK(std::fabs(bf01_t(-t, n_eff, df, jzs()) / bf - 1.0) < 1e-9);
}

TEST_CASE("bf01_t one-sided truncation penalizes the wrong direction") {
    double bneg = bf01_t(-2.0, 15.0, 58.0, jzs_positive());
    double bpos = bf01_t(2.0, 15.0, 58.0, jzs_positive());
    CHECK(bneg > bpos);
    CHECK(std::fabs(bneg / 10.269057085975811 - 1.0) < 1e-6);
    CHECK(std::fabs(bpos / 0.37795421818853797 - 1.0) < 1e-6);
}

TEST_CASE("bf01_t rejects vanishing truncation mass") {
    InformedT bad{0.0, 0.01, 20.0, 1.0, 2.0};
    CHECK_THROWS_AS(bf01_t(1.0, 10.0, 20.0, bad), std::invalid_argument);
}

TEST_CASE("critical_t one-sided round trips") {
    double n_eff = 20.0, df = 38.0;
    for (double k : {6.0, 1.0, 0.1, 1.0 / 30.0}) {
        CriticalSet cs = critical_t(k, n_eff, df, jzs_positive());
        REQUIRE(std::holds_alternative<Single>(cs));
        double tc = std::get<Single>(cs).z_crit;
        CHECK(std::fabs(bf01_t(tc, n_eff, df, jzs_positive()) / k - 1.0) < 1e-6);
    }
    // constructed fixed point
    double t0 = 1.7;
    double k0 = bf01_t(t0, n_eff, df, jzs_positive());
    CriticalSet cs = critical_t(k0, n_eff, df, jzs_positive());
    CHECK(std::fabs(std::get<Single>(cs).z_crit - t0) < 1e-6);
}

TEST_CASE("critical_t symmetric prior: pair or unattainable") {
    double n_eff = 20.0, df = 38.0;
    double peak = bf01_t(0.0, n_eff, df, jzs());
    CHECK(peak > 1.0);

    CriticalSet un = critical_t(peak * 1.05, n_eff, df, jzs());
    REQUIRE(std::holds_alternative<Unattainable>(un));
    CHECK(!std::get<Unattainable>(un).reason.empty());

    CriticalSet cs = critical_t(peak * 0.5, n_eff, df, jzs());
    REQUIRE(std::holds_alternative<Pair>(cs));
    const auto& b = std::get<Pair>(cs).boundary;
    CHECK(std::fabs(b.z_minus + b.z_plus) < 1e-12);  // symmetric about 0
    CHECK(std::fabs(bf01_t(b.z_plus, n_eff, df, jzs()) / (peak * 0.5) - 1.0) < 1e-6);
}

TEST_CASE("validation errors") {
    CHECK_THROWS_AS(validate_prior(PointPoint{0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_prior(PointTwoSided{0.1, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS(validate_prior(InformedT{0.0, 1.0, -1.0, 0.0, kInf}), std::invalid_argument);
    CHECK_THROWS_AS(validate_prior(InformedT{0.0, 1.0, 1.0, 2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(critical_z(0.0, 1.0, PointPoint{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(critical_z(-2.0, 1.0, PointPoint{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(critical_z(1.0, 0.0, PointPoint{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(bf01_z(ZObservation{1.0, 1.0}, jzs()), std::invalid_argument);
    CHECK_THROWS_AS(critical_z(2.0, 1.0, AnalysisPriorSpec{jzs()}), std::invalid_argument);
    CHECK_THROWS_AS(bf01_t(1.0, 0.0, 10.0, jzs()), std::invalid_argument);
    CHECK_THROWS_AS(bf01_t(1.0, 10.0, -1.0, jzs()), std::invalid_argument);
    // asymmetric truncated prior covering both signs: shape is undeclared
    InformedT both{0.2, 1.0, 1.0, -1.0, kInf};
    CHECK_THROWS_AS(critical_t(2.0, 10.0, 20.0, both), std::invalid_argument);
}

TEST_CASE("bf_shape classification") {
    CHECK(bf_shape(DirectionalDirectional{0.3, 1.0}) == BfShape::DecreasingInZ);
    CHECK(bf_shape(PointPoint{1.2}) == BfShape::DecreasingInZ);
    CHECK(bf_shape(PointPoint{-1.2}) == BfShape::IncreasingInZ);
    CHECK(bf_shape(PointTwoSided{0.0, 1.0}) == BfShape::TwoSided);
    CHECK(bf_shape(PointDirectional{0.5, 1.0}) == BfShape::DecreasingInZ);
    CHECK(bf_shape(jzs()) == BfShape::TwoSided);
    CHECK(bf_shape(jzs_positive()) == BfShape::DecreasingInZ);
    CHECK(bf_shape(InformedT{0.0, 1.0, 1.0, -kInf, 0.0}) == BfShape::IncreasingInZ);
}
