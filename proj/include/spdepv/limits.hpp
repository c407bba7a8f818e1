#pragma once

// Theoretical targets for normalized power variations: normalizers tau_n(r),
// the constants K_r and K(r, p), increment-variance identities, Monte Carlo
// evaluation of mu_{r,F} and Hoelder exponents.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spdepv/combinatorics.hpp"
#include "spdepv/error.hpp"
#include "spdepv/functional.hpp"
#include "spdepv/quadrature.hpp"
#include "spdepv/random.hpp"
#include "spdepv/spectrum.hpp"

namespace spdepv {

enum class Regime { Sub, Critical, Super };

inline const char* to_string(Regime r) noexcept {
    switch (r) {
        case Regime::Sub: return "SUB";
        case Regime::Critical: return "CRITICAL";
        case Regime::Super: return "SUPER";
    }
    return "?";
}

/// Phase of the smoothness index relative to -d/2.
inline Regime classify_regime(double r, std::size_t d) noexcept {
    const double edge = -static_cast<double>(d) / 2.0;
    if (std::abs(r - edge) <= 1e-12) return Regime::Critical;
    return r < edge ? Regime::Sub : Regime::Super;
}

struct RegimeParams {
    double r = -1.0;
    double gamma = 1.0;
    DomainSpec domain = DomainSpec::interval();

    std::size_t d() const noexcept { return domain.dim(); }
    Regime regime() const noexcept { return classify_regime(r, d()); }

    /// Upper end gamma - d/2 of the admissible smoothness range.
    double r_max() const noexcept { return gamma - static_cast<double>(d()) / 2.0; }

    void validate() const {
        domain.validate();
        detail::require(std::isfinite(gamma) && gamma > 0.0, "RegimeParams: gamma must be > 0");
        if (!(std::isfinite(r) && r < r_max()))
            throw RegimeError("RegimeParams: r = " + std::to_string(r) +
                              " must satisfy r < gamma - d/2 = " + std::to_string(r_max()));
    }
};

inline constexpr std::size_t kDefaultZetaTruncation = 10000;

/// tau = Delta^{delta_power} |log Delta|^{log_power}.
struct TauExponent {
    double delta_power = 0.5;
    double log_power = 0.0;
};

inline TauExponent tau_exponent(const RegimeParams& params) {
    params.validate();
    switch (params.regime()) {
        case Regime::Sub: return {0.5, 0.0};
        case Regime::Critical: return {0.5, 0.5};
        case Regime::Super: return {params.r_max() - params.r, 0.0};
    }
    return {};
}

inline double tau_n(const RegimeParams& params, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw InvalidArgument("tau_n: delta must lie in (0, 1)");
    auto e = tau_exponent(params);
    if (params.regime() == Regime::Super) e.delta_power /= 2.0 * params.gamma;
    return std::pow(delta, e.delta_power) * std::pow(std::abs(std::log(delta)), e.log_power);
}

/// Truncated series together with a bound on the omitted part.
struct SeriesValue {
    double value = 0.0;
    double tail_bound = 0.0;
    std::size_t truncation = 0;
};

namespace detail {

inline double power_weight(double lambda, double exponent) { return std::pow(lambda, exponent); }

// Upper bound of sum_{k>K} f(lambda_k) for 0 <= f(lambda) <= coef * lambda^beta,
// beta < -d/2. Terms are added exactly while lambda^gamma * scale < 40; beyond
// that the power majorant is summed by integral comparison. Exact for
// intervals; the far tail of boxes uses the Weyl model anchored at the last
// enumerated eigenvalue.
template <class F>
double tail_majorant(const DomainSpec& domain, double gamma, std::size_t truncation, F&& f,
                     double coef, double beta, double scale) {
    const double d = static_cast<double>(domain.dim());
    const double s = -2.0 * beta / d;  // k-exponent of the majorant
    if (domain.dim() == 1) {
        const double w = std::numbers::pi / domain.side(0);
        const double lam_star = std::pow(40.0 / std::max(scale, 1e-300), 1.0 / gamma);
        const double k_star = std::sqrt(lam_star) / w;
        const std::size_t cap = truncation + (std::size_t{1} << 24);
        std::size_t n = truncation;
        if (k_star > static_cast<double>(truncation))
            n = std::min<std::size_t>(cap, static_cast<std::size_t>(std::ceil(k_star)));
        double acc = 0.0;
        for (std::size_t k = n; k > truncation; --k) {
            const double lam = (w * static_cast<double>(k)) * (w * static_cast<double>(k));
            acc += f(lam);
        }
        const double nn = static_cast<double>(n);
        // sum_{k>n} (w k)^{2 beta} <= w^{2 beta} n^{1-s} / (s - 1)
        acc += coef * std::pow(w, 2.0 * beta) * std::pow(nn, 1.0 - s) / (s - 1.0);
        return acc;
    }
    const std::size_t n = std::max<std::size_t>(4 * truncation, truncation + 64);
    const auto lam = eigenvalues(domain, n);
    double acc = 0.0;
    for (std::size_t k = n; k-- > truncation;) acc += f(lam[k]);
    acc += coef * std::pow(lam.back(), beta) * static_cast<double>(n) / (s - 1.0);
    return acc;
}

}  // namespace detail

/// E || u(t_i) - u(t_i - Delta) ||_{H_r}^2 for sigma = 1:
///   sum_k lambda_k^{r-gamma} (1 - e^{-lambda_k^gamma Delta})
///     - 1/2 sum_k lambda_k^{r-gamma} e^{-2 lambda_k^gamma t_i} (e^{lambda_k^gamma Delta} - 1)^2,
/// the second sum evaluated as (e^{-lambda^gamma (t_i - Delta)} - e^{-lambda^gamma t_i})^2.
inline SeriesValue increment_variance(const RegimeParams& params, double delta, double t_i,
                                      std::size_t truncation) {
    params.validate();
    detail::require(delta > 0.0, "increment_variance: delta must be > 0");
    if (t_i < delta * (1.0 - 1e-12))
        throw InvalidArgument("increment_variance: t_i must be >= delta");
    detail::require(truncation >= 1, "increment_variance: truncation must be >= 1");
    const auto lam = eigenvalues(params.domain, truncation);
    const double g = params.gamma;
    const double e = params.r - g;
    double acc = 0.0;
    for (std::size_t k = truncation; k-- > 0;) {
        const double rate = std::pow(lam[k], g);
        const double diff = std::exp(-rate * (t_i - delta)) - std::exp(-rate * t_i);
        acc += std::pow(lam[k], e) * (-std::expm1(-rate * delta) - 0.5 * diff * diff);
    }
    const double tail = detail::tail_majorant(
        params.domain, g, truncation,
        [&](double l) { return std::pow(l, e) * -std::expm1(-std::pow(l, g) * delta); }, 1.0, e,
        delta);
    return {acc, tail, truncation};
}

/// E || u(t) ||_{H_r}^2 = 1/2 sum_k lambda_k^{r-gamma} (1 - e^{-2 lambda_k^gamma t}) for sigma = 1.
inline SeriesValue expected_hr_norm_sq(const RegimeParams& params, double t,
                                       std::size_t truncation) {
    params.validate();
    detail::require(t >= 0.0, "expected_hr_norm_sq: t must be >= 0");
    detail::require(truncation >= 1, "expected_hr_norm_sq: truncation must be >= 1");
    if (t == 0.0) return {0.0, 0.0, truncation};
    const auto lam = eigenvalues(params.domain, truncation);
    const double g = params.gamma;
    const double e = params.r - g;
    double acc = 0.0;
    for (std::size_t k = truncation; k-- > 0;)
        acc += 0.5 * std::pow(lam[k], e) * -std::expm1(-2.0 * std::pow(lam[k], g) * t);
    const double tail = detail::tail_majorant(
        params.domain, g, truncation,
        [&](double l) { return 0.5 * std::pow(l, e) * -std::expm1(-2.0 * std::pow(l, g) * t); },
        0.5, e, 2.0 * t);
    return {acc, tail, truncation};
}

/// zeta_D(-l r) for the SUB regime, l = 1, 2, ...
inline ZetaValue sub_regime_zeta(const RegimeParams& params, int l,
                                 std::size_t truncation = kDefaultZetaTruncation) {
    return spectral_zeta(params.domain, -static_cast<double>(l) * params.r, truncation);
}

/// Limit of E||increment||^2 / tau_n^2:
///   SUB:      zeta_D(-r)
///   SUPER:    |D| Gamma((r + d/2)/gamma) / ((4 pi)^{d/2} Gamma(d/2) (gamma - d/2 - r))
///   CRITICAL: |D| / (gamma (4 pi)^{d/2} Gamma(d/2))
inline double k_r(const RegimeParams& params, std::size_t zeta_truncation = kDefaultZetaTruncation) {
    params.validate();
    const double d = static_cast<double>(params.d());
    const double vol = params.domain.volume();
    const double base = std::pow(4.0 * std::numbers::pi, d / 2.0) * std::tgamma(d / 2.0);
    switch (params.regime()) {
        case Regime::Sub: return sub_regime_zeta(params, 1, zeta_truncation).value;
        case Regime::Critical: return vol / (params.gamma * base);
        case Regime::Super:
            return vol * std::tgamma((params.r + d / 2.0) / params.gamma) /
                   (base * (params.r_max() - params.r));
    }
    return 0.0;
}

/// Per-unit-time limit of the normalized variation of order 2p for constant sigma:
///   SUB: sigma^{2p} 2^p B_p(x_1..x_p), x_l = (l-1)!/2 zeta_D(-l r);
///   otherwise sigma^{2p} K_r^p.
inline double limit_constant_even_power(const RegimeParams& params, int p, double sigma,
                                        std::size_t zeta_truncation = kDefaultZetaTruncation) {
    params.validate();
    if (p <= 0) throw InvalidArgument("limit_constant_even_power: p must be >= 1");
    const double s2p = std::pow(sigma * sigma, p);
    if (params.regime() != Regime::Sub) return s2p * std::pow(k_r(params, zeta_truncation), p);
    std::vector<double> x(static_cast<std::size_t>(p));
    double factorial = 1.0;  // (l-1)!
    for (int l = 1; l <= p; ++l) {
        if (l > 1) factorial *= l - 1;
        x[static_cast<std::size_t>(l - 1)] =
            factorial / 2.0 * sub_regime_zeta(params, l, zeta_truncation).value;
    }
    return s2p * std::ldexp(complete_bell(x), p);
}

/// t -> (K_r/|D|)^{p/2} int_0^t (int_D sigma^2(s, y) dy)^{p/2} ds for the CRITICAL
/// and SUPER regimes; the caller supplies s -> int_D sigma^2(s, y) dy.
inline std::function<double(double)> limit_process_general_sigma(
    const RegimeParams& params, double p, std::function<double(double)> sigma_sq_integral) {
    params.validate();
    if (params.regime() == Regime::Sub)
        throw RegimeError(
            "limit_process_general_sigma: SUB regime limits are given by mu_{r,F}, not by K_r");
    detail::require(p >= 0.0, "limit_process_general_sigma: p must be >= 0");
    const double scale = std::pow(k_r(params) / params.domain.volume(), p / 2.0);
    return [scale, p, f = std::move(sigma_sq_integral)](double t) {
        detail::require(t >= 0.0, "limit process evaluated at negative time");
        if (p == 0.0) return t;
        if (t == 0.0) return 0.0;
        auto integrand = [&](double s) { return std::pow(std::max(f(s), 0.0), p / 2.0); };
        double err = 0.0;
        const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            integrand, 0.0, t, 20, 1e-12, &err);
        if (!(err <= 1e-8 * std::max(1.0, std::abs(val))))
            throw NumericalError("limit_process_general_sigma: quadrature tolerance not met");
        return scale * val;
    };
}

/// Hoelder exponent in time: 1/2 up to -d/2, (gamma - d/2 - r)/(2 gamma) above.
inline double holder_exponent(const RegimeParams& params) {
    params.validate();
    if (params.regime() == Regime::Super) return (params.r_max() - params.r) / (2.0 * params.gamma);
    return 0.5;
}

/// Non-negative weight w on D, either constant or a function.
struct Weight {
    std::optional<double> constant_value;
    std::function<double(std::span<const double>)> fn;

    static Weight constant(double c) { return {c, {}}; }
    static Weight function(std::function<double(std::span<const double>)> f) {
        return {std::nullopt, std::move(f)};
    }
    static Weight function_1d(std::function<double(double)> f) {
        return {std::nullopt, [f = std::move(f)](std::span<const double> x) { return f(x[0]); }};
    }
};

struct MonteCarloEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t samples = 0;
};

/// Gram matrix G_kl = int_D phi_k phi_l w for the first n eigenpairs.
inline Eigen::MatrixXd weighted_gram(const DomainSpec& domain, const Weight& w, std::size_t n) {
    const auto nn = static_cast<Eigen::Index>(n);
    if (w.constant_value) return *w.constant_value * Eigen::MatrixXd::Identity(nn, nn);
    if (domain.dim() == 1) {
        // phi_k phi_l = (1/L) [cos((k-l) pi x/L) - cos((k+l) pi x/L)]
        const double len = domain.side(0);
        const auto rule = quadrature::composite_gauss_legendre(
            0.0, len, quadrature::panels_for_frequency(2 * n));
        std::vector<double> wq(rule.size());
        for (std::size_t i = 0; i < rule.size(); ++i) {
            const double x = rule.nodes[i];
            wq[i] = rule.weights[i] * w.fn(std::span<const double>(&x, 1));
        }
        std::vector<double> moment(2 * n + 1, 0.0);
        for (std::size_t m = 0; m <= 2 * n; ++m) {
            double acc = 0.0;
            const double freq = std::numbers::pi * static_cast<double>(m) / len;
            for (std::size_t i = 0; i < rule.size(); ++i)
                acc += wq[i] * std::cos(freq * rule.nodes[i]);
            moment[m] = acc;
        }
        Eigen::MatrixXd g(nn, nn);
        for (Eigen::Index k = 0; k < nn; ++k)
            for (Eigen::Index l = 0; l < nn; ++l)
                g(k, l) = (moment[static_cast<std::size_t>(std::abs(k - l))] -
                           moment[static_cast<std::size_t>(k + l + 2)]) / len;
        return g;
    }
    // Tensor Gauss-Legendre on the box.
    const auto pairs = enumerate_eigenpairs(domain, n);
    std::vector<quadrature::Rule> rules;
    for (std::size_t j = 0; j < domain.dim(); ++j) {
        int max_m = 1;
        for (const auto& e : pairs) max_m = std::max(max_m, e.multi_index[j]);
        rules.push_back(quadrature::composite_gauss_legendre(
            0.0, domain.side(j), quadrature::panels_for_frequency(2 * static_cast<std::size_t>(max_m))));
    }
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(nn, nn);
    std::vector<std::size_t> idx(domain.dim(), 0);
    std::vector<double> x(domain.dim());
    Eigen::VectorXd phi(nn);
    for (;;) {
        double weight = 1.0;
        for (std::size_t j = 0; j < domain.dim(); ++j) {
            x[j] = rules[j].nodes[idx[j]];
            weight *= rules[j].weights[idx[j]];
        }
        weight *= w.fn(x);
        if (weight != 0.0) {
            for (Eigen::Index k = 0; k < nn; ++k) phi(k) = pairs[static_cast<std::size_t>(k)].phi(x);
            g.selfadjointView<Eigen::Lower>().rankUpdate(phi, weight);
        }
        std::size_t j = 0;
        while (j < idx.size() && ++idx[j] == rules[j].size()) idx[j++] = 0;
        if (j == idx.size()) break;
    }
    return g.selfadjointView<Eigen::Lower>();
}

/// Monte Carlo estimate of mu_{r,F}(w) = E F(H), H ~ N_r(0, Q_r(w)), SUB regime.
///
/// H = sum_k X_k lambda_k^{-r/2} phi_k with Cov(X_k, X_l) = lambda_k^{r/2} lambda_l^{r/2}
/// int phi_k phi_l w, truncated to `truncation` modes. The covariance square
/// root comes from a symmetric eigendecomposition with eigenvalues clipped at 0.
inline MonteCarloEstimate mu_rF_estimate(const Functional& f, const Weight& w,
                                         const RegimeParams& params, std::size_t truncation,
                                         std::size_t samples, std::uint64_t seed) {
    params.validate();
    if (params.regime() != Regime::Sub)
        throw RegimeError("mu_rF_estimate: requires r < -d/2");
    detail::require(truncation >= 1 && truncation <= 2000,
                    "mu_rF_estimate: truncation must lie in [1, 2000]");
    detail::require(samples >= 1, "mu_rF_estimate: samples must be >= 1");
    if (w.constant_value)
        detail::require(*w.constant_value >= 0.0, "mu_rF_estimate: weight must be non-negative");

    const auto lam = eigenvalues(params.domain, truncation);
    const auto n = static_cast<Eigen::Index>(truncation);
    Eigen::VectorXd half_power(n);
    for (Eigen::Index k = 0; k < n; ++k)
        half_power(k) = std::pow(lam[static_cast<std::size_t>(k)], params.r / 2.0);

    // Square root factor S with X = S xi; diagonal when w is constant.
    const bool diagonal = w.constant_value.has_value();
    Eigen::VectorXd diag_sd;
    Eigen::MatrixXd factor;
    if (diagonal) {
        diag_sd = half_power * std::sqrt(*w.constant_value);
    } else {
        const Eigen::MatrixXd cov =
            half_power.asDiagonal() * weighted_gram(params.domain, w, truncation) *
            half_power.asDiagonal();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success)
            throw NumericalError("mu_rF_estimate: covariance eigendecomposition failed");
        const double top = std::max(eig.eigenvalues().maxCoeff(), 0.0);
        if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(top, 1e-300))
            throw NumericalError("mu_rF_estimate: truncated covariance is not positive semidefinite");
        factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }

    std::vector<double> coeffs(truncation);
    Eigen::VectorXd xi(n);
    Eigen::VectorXd x(n);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t j = 0; j < samples; ++j) {
        NormalStream normal(derive_seed(seed, j));
        for (Eigen::Index k = 0; k < n; ++k) xi(k) = normal();
        if (diagonal)
            x = diag_sd.cwiseProduct(xi);
        else
            x.noalias() = factor * xi;
        for (Eigen::Index k = 0; k < n; ++k)
            coeffs[static_cast<std::size_t>(k)] = x(k) / half_power(k);
        const double v = f(CoefficientView{coeffs, lam, params.r});
        const double delta = v - mean;
        mean += delta / static_cast<double>(j + 1);
        m2 += delta * (v - mean);
    }
    const double var = samples > 1 ? m2 / static_cast<double>(samples - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

/// int_0^t mu_{r,F}(sigma^2(s, .)) ds for a deterministic sigma, by Gauss-Legendre
/// in s (10 nodes) over Monte Carlo estimates of mu_{r,F}.
inline MonteCarloEstimate limit_sub_deterministic_sigma(
    const Functional& f, std::function<double(double, std::span<const double>)> sigma,
    const RegimeParams& params, double t, std::size_t truncation, std::size_t samples,
    std::uint64_t seed) {
    detail::require(t > 0.0, "limit_sub_deterministic_sigma: t must be > 0");
    using G = boost::math::quadrature::gauss<double, 10>;
    const auto& xs = G::abscissa();
    const auto& ws = G::weights();
    double total = 0.0;
    double var = 0.0;
    std::uint64_t stream = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (double sign : {-1.0, 1.0}) {
            if (xs[i] == 0.0 && sign > 0.0) continue;
            const double s = 0.5 * t * (1.0 + sign * xs[i]);
            const double wq = 0.5 * t * ws[i];
            const auto w = Weight::function([&sigma, s](std::span<const double> y) {
                const double v = sigma(s, y);
                return v * v;
            });
            const auto est =
                mu_rF_estimate(f, w, params, truncation, samples, derive_seed(seed, stream++));
            total += wq * est.mean;
            var += wq * wq * est.std_error * est.std_error;
        }
    }
    return {total, std::sqrt(var), samples};
}

/// All theoretical constants of one (r, gamma, D) configuration.
struct LimitReport {
    RegimeParams params;
    Regime regime = Regime::Sub;
    TauExponent tau;              // tau = Delta^{delta_power} |log Delta|^{log_power}
    double k_r = 0.0;
    std::map<int, double> constants_by_order;  // p -> K(r, p), limit of the order-2p variation
    double holder_alpha = 0.0;
    std::optional<double> exact_variation_order;  // 2 gamma / (gamma - d/2 - r), SUPER only
    double sigma = 1.0;
    std::vector<ZetaValue> zeta_values_used;
};

inline LimitReport make_limit_report(const RegimeParams& params, std::span<const int> orders,
                                     double sigma = 1.0,
                                     std::size_t zeta_truncation = kDefaultZetaTruncation) {
    params.validate();
    LimitReport rep;
    rep.params = params;
    rep.regime = params.regime();
    rep.tau = tau_exponent(params);
    if (rep.regime == Regime::Super) rep.tau.delta_power /= 2.0 * params.gamma;
    rep.k_r = k_r(params, zeta_truncation);
    rep.holder_alpha = holder_exponent(params);
    rep.sigma = sigma;
    int max_p = 0;
    for (int p : orders) {
        rep.constants_by_order[p] = limit_constant_even_power(params, p, sigma, zeta_truncation);
        max_p = std::max(max_p, p);
    }
    if (rep.regime == Regime::Sub)
        for (int l = 1; l <= std::max(max_p, 1); ++l)
            rep.zeta_values_used.push_back(sub_regime_zeta(params, l, zeta_truncation));
    if (rep.regime == Regime::Super)
        rep.exact_variation_order = 2.0 * params.gamma / (params.r_max() - params.r);
    return rep;
}

}  // namespace spdepv
