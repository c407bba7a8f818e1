#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/zeta.hpp>
#include <gtest/gtest.h>

#include "spdepv/limits.hpp"
#include "spdepv/validation.hpp"

using namespace spdepv;
constexpr double kPi = std::numbers::pi;

namespace {

RegimeParams interval_params(double r, double gamma = 1.0) { return {r, gamma, DomainSpec::interval()}; }

// E|a(t) - a(t - Delta)|^2 per mode from Var a(s) = v(s) and Cov(a(t), a(t - D)) = e^{-rate D} v(t - D).
double increment_variance_by_covariance(const RegimeParams& p, double delta, double t, std::size_t k) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= k; ++i) {
        const double lam = std::pow(static_cast<double>(i), 2.0);
        const double rate = std::pow(lam, p.gamma);
        auto v = [&](double s) { return (1.0 - std::exp(-2.0 * rate * s)) / (2.0 * rate); };
        const double e = v(t) + v(t - delta) - 2.0 * std::exp(-rate * delta) * v(t - delta);
        acc += std::pow(lam, p.r) * e;
    }
    return acc;
}

}  // namespace

TEST(Regime, Classification) {
    EXPECT_EQ(classify_regime(-1.0, 1), Regime::Sub);
    EXPECT_EQ(classify_regime(-0.5, 1), Regime::Critical);
    EXPECT_EQ(classify_regime(-0.5 + 1e-13, 1), Regime::Critical);
    EXPECT_EQ(classify_regime(0.0, 1), Regime::Super);
    EXPECT_EQ(classify_regime(-1.0, 2), Regime::Critical);
    EXPECT_EQ(classify_regime(-1.5, 2), Regime::Sub);
}

TEST(Regime, UpperBoundaryRejected) {
    EXPECT_THROW(interval_params(0.5).validate(), RegimeError);
    EXPECT_THROW(interval_params(0.7).validate(), RegimeError);
    EXPECT_NO_THROW(interval_params(0.49).validate());
    EXPECT_THROW((RegimeParams{0.0, 1.0, DomainSpec::box({1.0, 1.0})}.validate()), RegimeError);
}

TEST(Tau, ThreeRegimes) {
    const double d = 1.0 / 1024;
    EXPECT_DOUBLE_EQ(tau_n(interval_params(-1.0), d), std::sqrt(d));
    EXPECT_NEAR(tau_n(interval_params(-0.5), d), std::sqrt(d * std::abs(std::log(d))), 1e-15);
    EXPECT_NEAR(tau_n(interval_params(0.0), d), std::pow(d, 0.25), 1e-15);
    EXPECT_NEAR(tau_n(interval_params(0.25), d), std::pow(d, 0.125), 1e-15);
    EXPECT_NEAR(tau_n(interval_params(0.25, 2.0), d), std::pow(d, 1.25 / 4.0), 1e-15);
    EXPECT_THROW(tau_n(interval_params(-1.0), 0.0), InvalidArgument);
    EXPECT_THROW(tau_n(interval_params(-1.0), 1.0), InvalidArgument);
}

TEST(KConstant, SubRegimeIsZeta) {
    for (double r : {-1.0, -2.0, -0.75}) {
        EXPECT_NEAR(k_r(interval_params(r)), boost::math::zeta(-2.0 * r), 1e-10) << r;
    }
}

TEST(KConstant, SuperRegimeMatchesIntervalClosedForm) {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    for (int i = 0; i < 20; ++i) {
        const double r = u(rng);
        if (r < -0.5 + 1e-6) continue;
        EXPECT_NEAR(k_r(interval_params(r)), oracle::interval_super_constant(r), 1e-10) << r;
    }
    EXPECT_NEAR(k_r(interval_params(0.0)), std::sqrt(kPi), 1e-14);
}

TEST(KConstant, CriticalValue) {
    EXPECT_NEAR(k_r(interval_params(-0.5)), 0.5, 1e-14);
    // gamma enters as 1 / gamma
    EXPECT_NEAR(k_r(interval_params(-0.5, 2.0)), 0.25, 1e-14);
}

TEST(KConstant, EvenPowerConstants) {
    const double z2 = boost::math::zeta(2.0), z4 = boost::math::zeta(4.0), z6 = boost::math::zeta(6.0);
    const auto sub = interval_params(-1.0);
    EXPECT_NEAR(limit_constant_even_power(sub, 1, 1.0), z2, 1e-10);
    const double x1 = z2 / 2.0, x2 = z4 / 2.0, x3 = z6;  // x3 = 2!/2 zeta(6)
    EXPECT_NEAR(limit_constant_even_power(sub, 2, 1.0), 4.0 * (x1 * x1 + x2), 1e-10);
    EXPECT_NEAR(limit_constant_even_power(sub, 2, 1.0), 4.87045, 5e-6);
    const std::vector<double> x{x1, x2, x3};
    EXPECT_NEAR(limit_constant_even_power(sub, 3, 1.0), 8.0 * oracle::bell_by_partitions(x), 1e-9);
    EXPECT_NEAR(limit_constant_even_power(sub, 2, 2.0), 16.0 * 4.0 * (x1 * x1 + x2), 1e-8);
    for (int p = 1; p <= 4; ++p) {
        EXPECT_NEAR(limit_constant_even_power(interval_params(-0.5), p, 1.0), std::pow(0.5, p), 1e-14);
        EXPECT_NEAR(limit_constant_even_power(interval_params(0.0), p, 1.0), std::pow(kPi, p / 2.0), 1e-12);
    }
    EXPECT_THROW(limit_constant_even_power(sub, 0, 1.0), InvalidArgument);
}

TEST(KConstant, SubConstantEqualsGaussianMomentOfTheLimitNorm) {
    // For p = 2, 2^2 B_2(x) = E ||H||^4 with independent N(0, lambda_k^{r}) coordinates
    // = (sum v_k)^2 + 2 sum v_k^2 with v_k = k^{-2}.
    const double z2 = boost::math::zeta(2.0), z4 = boost::math::zeta(4.0);
    EXPECT_NEAR(limit_constant_even_power(interval_params(-1.0), 2, 1.0), z2 * z2 + 2.0 * z4, 1e-10);
}

TEST(IncrementVariance, AgreesWithCovarianceRoute) {
    for (double r : {-1.5, -1.0, -0.5, 0.0, 0.3})
        for (double t : {1.0 / 64, 0.5}) {
            const auto p = interval_params(r);
            const double delta = 1.0 / 64;
            const auto v = increment_variance(p, delta, t, 300);
            EXPECT_NEAR(v.value, increment_variance_by_covariance(p, delta, t, 300), 1e-12 * std::abs(v.value) + 1e-15)
                << r << ' ' << t;
        }
}

TEST(IncrementVariance, TailBoundCoversTruncation) {
    const auto p = interval_params(0.0);
    const auto full = increment_variance(p, 1.0 / 256, 0.5, 200000);
    for (std::size_t k : {50u, 400u}) {
        const auto v = increment_variance(p, 1.0 / 256, 0.5, k);
        EXPECT_LE(full.value - v.value, v.tail_bound) << k;
        EXPECT_GE(full.value - v.value, 0.0);
    }
}

TEST(IncrementVariance, FirstIncrementIsTheSecondMoment) {
    const auto p = interval_params(-1.0);
    EXPECT_NEAR(increment_variance(p, 0.01, 0.01, 500).value, expected_hr_norm_sq(p, 0.01, 500).value, 1e-15);
    EXPECT_THROW(increment_variance(p, 0.01, 0.005, 500), InvalidArgument);
}

TEST(IncrementVariance, NormalizedLimitIsKr) {
    const double delta = std::ldexp(1.0, -14);
    for (double r : {-1.0, -2.0}) {
        const auto p = interval_params(r);
        const auto v = increment_variance(p, delta, 0.5, 4096);
        EXPECT_NEAR(v.value / (delta * k_r(p)), 1.0, 0.01) << r;
    }
    const auto p0 = interval_params(0.0);
    const auto v0 = increment_variance(p0, delta, 0.5, 1 << 20);
    EXPECT_NEAR(v0.value / (tau_n(p0, delta) * tau_n(p0, delta) * k_r(p0)), 1.0, 0.01);
}

TEST(SecondMoment, LargeTimeLimit) {
    const auto p = interval_params(-1.0);
    const auto v = expected_hr_norm_sq(p, 50.0, 20000);
    EXPECT_NEAR(v.value, 0.5 * boost::math::zeta(4.0), 1e-8);
    EXPECT_DOUBLE_EQ(expected_hr_norm_sq(p, 0.0, 10).value, 0.0);
}

TEST(Holder, Branches) {
    EXPECT_DOUBLE_EQ(holder_exponent(interval_params(-1.0)), 0.5);
    EXPECT_DOUBLE_EQ(holder_exponent(interval_params(-0.5)), 0.5);
    EXPECT_DOUBLE_EQ(holder_exponent(interval_params(0.0)), 0.25);
    EXPECT_DOUBLE_EQ(holder_exponent(interval_params(0.25)), 0.125);
    EXPECT_DOUBLE_EQ(holder_exponent(interval_params(0.0, 2.0)), 1.5 / 4.0);
}

TEST(GeneralSigmaLimit, ConstantFieldAndEdgeCases) {
    const auto p = interval_params(0.0);
    auto unit = limit_process_general_sigma(p, 4.0, [](double) { return kPi; });  // int sigma^2 = |D|
    EXPECT_NEAR(unit(1.0), kPi, 1e-12);
    EXPECT_NEAR(unit(0.5), 0.5 * kPi, 1e-12);
    auto zero_order = limit_process_general_sigma(p, 0.0, [](double) { return 1.0; });
    EXPECT_DOUBLE_EQ(zero_order(0.7), 0.7);
    // time-dependent sigma^2(s) = s on the whole domain: (K/|D|)^{1} int_0^t s pi ds
    auto lin = limit_process_general_sigma(p, 2.0, [](double s) { return s * kPi; });
    EXPECT_NEAR(lin(1.0), k_r(p) * 0.5, 1e-12);
    EXPECT_THROW(limit_process_general_sigma(interval_params(-1.0), 2.0, [](double) { return 1.0; }), RegimeError);
}

TEST(WeightedGram, IntervalMatchesQuadrature) {
    const auto dom = DomainSpec::interval();
    auto wfun = [](double x) { return 1.0 + x * x; };
    const auto g = weighted_gram(dom, Weight::function_1d(wfun), 12);
    const auto pairs = enumerate_eigenpairs(dom, 12);
    for (std::size_t k = 0; k < 12; ++k)
        for (std::size_t l = 0; l < 12; ++l) {
            const double q = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
                [&](double x) { return pairs[k].phi(x) * pairs[l].phi(x) * wfun(x); }, 0.0, kPi, 15, 1e-13);
            EXPECT_NEAR(g(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)), q, 1e-10);
        }
}

TEST(WeightedGram, BoxConstantWeightIsIdentity) {
    const auto dom = DomainSpec::box({1.0, 2.0});
    const auto g = weighted_gram(dom, Weight::function([](std::span<const double>) { return 1.0; }), 10);
    EXPECT_LT((g - Eigen::MatrixXd::Identity(10, 10)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(MuRF, SquaredNormTargetsZeta) {
    const auto p = interval_params(-1.0);
    const auto e = mu_rF_estimate(functionals::hr_norm_power(2.0), Weight::constant(1.0), p, 1000, 20000, 42);
    EXPECT_NEAR(e.mean, boost::math::zeta(2.0), 3.0 * e.std_error);
    EXPECT_GT(e.std_error, 0.0);
}

TEST(MuRF, FirstCoordinateSquaredHasUnitMean) {
    const auto p = interval_params(-1.0);
    const auto e = mu_rF_estimate(functionals::coordinate_squared(1), Weight::constant(1.0), p, 50, 20000, 3);
    EXPECT_NEAR(e.mean, 1.0, 3.0 * e.std_error);
    const auto lin = mu_rF_estimate(functionals::coordinate(1), Weight::constant(1.0), p, 50, 20000, 4);
    EXPECT_NEAR(lin.mean, 0.0, 3.0 * lin.std_error);
}

TEST(MuRF, NonConstantWeight) {
    // E||H||^2 = trace Q_r(w) = sum_k lambda_k^r int phi_k^2 w = zeta(2) pi / 2 for w(x) = x
    const auto p = interval_params(-1.0);
    const auto e = mu_rF_estimate(functionals::hr_norm_power(2.0),
                                  Weight::function_1d([](double x) { return x; }), p, 200, 20000, 8);
    EXPECT_NEAR(e.mean, boost::math::zeta(2.0) * kPi / 2.0, 3.0 * e.std_error);
}

TEST(MuRF, Preconditions) {
    EXPECT_THROW(mu_rF_estimate(functionals::constant(1.0), Weight::constant(1.0), interval_params(0.0), 10, 10, 1),
                 RegimeError);
    EXPECT_THROW(mu_rF_estimate(functionals::constant(1.0), Weight::constant(1.0), interval_params(-1.0), 2001, 10, 1),
                 InvalidArgument);
    const auto e = mu_rF_estimate(functionals::constant(2.0), Weight::constant(1.0), interval_params(-1.0), 10, 5, 1);
    EXPECT_DOUBLE_EQ(e.mean, 2.0);
    EXPECT_DOUBLE_EQ(e.std_error, 0.0);
}

TEST(MuRF, Reproducible) {
    const auto p = interval_params(-1.0);
    const auto a = mu_rF_estimate(functionals::hr_norm_power(4.0), Weight::constant(1.0), p, 100, 500, 77);
    const auto b = mu_rF_estimate(functionals::hr_norm_power(4.0), Weight::constant(1.0), p, 100, 500, 77);
    EXPECT_EQ(a.mean, b.mean);
}

TEST(Report, Examples) {
    const std::vector<int> orders{1, 2};
    const auto rep = make_limit_report(interval_params(-1.0), orders);
    EXPECT_NEAR(rep.k_r, 1.6449, 1e-4);
    EXPECT_NEAR(rep.constants_by_order.at(2), 4.8705, 1e-4);
    EXPECT_DOUBLE_EQ(rep.holder_alpha, 0.5);
    EXPECT_EQ(rep.zeta_values_used.size(), 2u);
    const auto crit = make_limit_report(interval_params(-0.5), orders);
    EXPECT_NEAR(crit.k_r, 0.5, 1e-14);
    EXPECT_NEAR(crit.constants_by_order.at(1), 0.5, 1e-14);
    EXPECT_NEAR(crit.constants_by_order.at(2), 0.25, 1e-14);
    const auto sup = make_limit_report(interval_params(0.0), orders);
    ASSERT_TRUE(sup.exact_variation_order.has_value());
    EXPECT_DOUBLE_EQ(*sup.exact_variation_order, 4.0);
    EXPECT_THROW(make_limit_report(interval_params(0.5), orders), RegimeError);
}
