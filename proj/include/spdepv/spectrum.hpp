#pragma once

// Dirichlet Laplacian on intervals and boxes: closed-form eigenpairs, Weyl
// asymptotics, spectral zeta function, fractional heat kernel and partial
// inner products of eigenfunctions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "spdepv/error.hpp"
#include "spdepv/quadrature.hpp"

namespace spdepv {

/// Bounded box prod_j (0, L_j); an interval when dim == 1.
class DomainSpec {
public:
    DomainSpec() = default;

    explicit DomainSpec(std::vector<double> sides) : sides_(std::move(sides)) { validate(); }

    static DomainSpec interval(double length = std::numbers::pi) { return DomainSpec({length}); }
    static DomainSpec box(std::vector<double> sides) { return DomainSpec(std::move(sides)); }

    std::size_t dim() const noexcept { return sides_.size(); }
    std::span<const double> sides() const noexcept { return sides_; }
    double side(std::size_t j) const { return sides_.at(j); }

    double volume() const noexcept {
        double v = 1.0;
        for (double l : sides_) v *= l;
        return v;
    }

    /// True when x lies in the closure of the box.
    bool contains_closure(std::span<const double> x) const noexcept {
        if (x.size() != dim()) return false;
        for (std::size_t j = 0; j < dim(); ++j)
            if (!(x[j] >= 0.0 && x[j] <= sides_[j])) return false;
        return true;
    }

    bool on_boundary(std::span<const double> x) const noexcept {
        for (std::size_t j = 0; j < dim(); ++j)
            if (x[j] == 0.0 || x[j] == sides_[j]) return true;
        return false;
    }

    void validate() const {
        detail::require(!sides_.empty(), "DomainSpec: dimension must be >= 1");
        for (double l : sides_)
            detail::require(std::isfinite(l) && l > 0.0,
                            "DomainSpec: side lengths must be positive and finite");
    }

    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;

private:
    std::vector<double> sides_;
};

/// One Dirichlet eigenpair of -Laplace on a box:
///   lambda = sum_j (pi m_j / L_j)^2,  phi(x) = prod_j sqrt(2/L_j) sin(pi m_j x_j / L_j).
struct EigenPair {
    std::size_t index = 0;            // 1-based position in the sorted spectrum
    double lambda = 0.0;
    std::vector<int> multi_index;     // m_j >= 1
    std::vector<double> sides;        // copy of the domain sides, needed by phi

    double phi(std::span<const double> x) const {
        double v = 1.0;
        for (std::size_t j = 0; j < sides.size(); ++j) {
            const double l = sides[j];
            v *= std::sqrt(2.0 / l) *
                 std::sin(std::numbers::pi * multi_index[j] * x[j] / l);
        }
        return v;
    }

    double phi(double x) const { return phi(std::span<const double>(&x, 1)); }

    /// Sup-norm bound (2 e lambda / (pi d))^{d/4}.
    double sup_bound() const {
        const double d = static_cast<double>(sides.size());
        return std::pow(2.0 * std::numbers::e * lambda / (std::numbers::pi * d), d / 4.0);
    }
};

/// A spectral zeta value: partial sum plus analytic tail estimate, with a bound
/// on the error of the tail estimate.
struct ZetaValue {
    double z = 0.0;
    double value = 0.0;
    std::size_t truncation_index = 0;
    double tail_bound = 0.0;
};

namespace detail {

inline double box_eigenvalue(std::span<const double> sides, std::span<const int> m) {
    double lam = 0.0;
    for (std::size_t j = 0; j < sides.size(); ++j) {
        const double w = std::numbers::pi * m[j] / sides[j];
        lam += w * w;
    }
    return lam;
}

// All multi-indices with eigenvalue <= cut, appended to out.
inline void sweep_multi_indices(std::span<const double> sides, double cut, std::size_t j,
                                std::vector<int>& current, double partial,
                                std::vector<std::pair<double, std::vector<int>>>& out) {
    const double step = std::numbers::pi / sides[j];
    for (int m = 1;; ++m) {
        const double lam = partial + (step * m) * (step * m);
        if (lam > cut) break;
        current[j] = m;
        if (j + 1 == sides.size())
            out.emplace_back(lam, current);
        else
            sweep_multi_indices(sides, cut, j + 1, current, lam, out);
    }
}

inline bool near_tie(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace detail

/// The `count` smallest Dirichlet eigenpairs, sorted by eigenvalue; ties are
/// ordered lexicographically by multi-index.
inline std::vector<EigenPair> enumerate_eigenpairs(const DomainSpec& domain, std::size_t count) {
    domain.validate();
    detail::require(count >= 1, "enumerate_eigenpairs: count must be >= 1");
    const auto sides = domain.sides();
    const std::vector<double> side_copy(sides.begin(), sides.end());
    std::vector<EigenPair> pairs;
    pairs.reserve(count);

    if (domain.dim() == 1) {
        for (std::size_t k = 1; k <= count; ++k) {
            std::vector<int> m{static_cast<int>(k)};
            pairs.push_back({k, detail::box_eigenvalue(sides, m), std::move(m), side_copy});
        }
        return pairs;
    }

    // Bounded sweep: all m with lambda(m) <= cut, doubling cut until enough.
    double cut = detail::box_eigenvalue(sides, std::vector<int>(domain.dim(), 1)) * 2.0;
    std::vector<std::pair<double, std::vector<int>>> found;
    for (;;) {
        found.clear();
        std::vector<int> current(domain.dim(), 1);
        detail::sweep_multi_indices(sides, cut, 0, current, 0.0, found);
        if (found.size() >= count) break;
        cut *= 2.0;
    }
    std::sort(found.begin(), found.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    // Groups of floating-point ties share one value and are ordered lexicographically.
    for (std::size_t i = 0; i < found.size();) {
        std::size_t j = i + 1;
        while (j < found.size() && detail::near_tie(found[i].first, found[j].first)) ++j;
        const double shared = found[i].first;
        for (std::size_t k = i; k < j; ++k) found[k].first = shared;
        std::sort(found.begin() + static_cast<std::ptrdiff_t>(i),
                  found.begin() + static_cast<std::ptrdiff_t>(j),
                  [](const auto& a, const auto& b) { return a.second < b.second; });
        i = j;
    }
    for (std::size_t k = 0; k < count; ++k)
        pairs.push_back({k + 1, found[k].first, std::move(found[k].second), side_copy});
    return pairs;
}

/// Eigenvalues only; closed form for intervals.
inline std::vector<double> eigenvalues(const DomainSpec& domain, std::size_t count) {
    domain.validate();
    detail::require(count >= 1, "eigenvalues: count must be >= 1");
    std::vector<double> lam(count);
    if (domain.dim() == 1) {
        const double step = std::numbers::pi / domain.side(0);
        for (std::size_t k = 0; k < count; ++k) {
            const double w = step * static_cast<double>(k + 1);
            lam[k] = w * w;
        }
        return lam;
    }
    const auto pairs = enumerate_eigenpairs(domain, count);
    for (std::size_t k = 0; k < count; ++k) lam[k] = pairs[k].lambda;
    return lam;
}

/// Weyl constant C_D = 4 pi Gamma(1 + d/2)^{2/d} / |D|^{2/d}.
inline double weyl_constant(const DomainSpec& domain) {
    domain.validate();
    const double d = static_cast<double>(domain.dim());
    return 4.0 * std::numbers::pi * std::pow(std::tgamma(1.0 + d / 2.0), 2.0 / d) /
           std::pow(domain.volume(), 2.0 / d);
}

namespace detail {

// Bracket for sum_{k>n} f(k) with f(x) = A (x/n)^{-s}, s > 1, convex decreasing:
//   int_n^inf f - f(n)/2  <=  sum_{k>n} f(k)  <=  int_{n+1/2}^inf f.
struct TailBracket {
    double lower;
    double upper;
    double mid() const { return 0.5 * (lower + upper); }
    double half_width() const { return 0.5 * (upper - lower); }
};

inline TailBracket power_law_tail(double anchor_value, double n, double s) {
    const double lower = anchor_value * (n / (s - 1.0) - 0.5);
    const double upper = anchor_value * std::pow(n, s) * std::pow(n + 0.5, 1.0 - s) / (s - 1.0);
    return {lower, upper};
}

}  // namespace detail

/// zeta_D(z) = sum_k lambda_k^{-z}, convergent for z > d/2.
///
/// The first `truncation` terms are summed exactly. The remainder is estimated
/// by modelling lambda_k = lambda_N (k/N)^{2/d} beyond the last computed
/// eigenvalue; tail_bound is the half-width of the convex integral-comparison
/// bracket for that model (exact for intervals, Weyl-model based for boxes).
inline ZetaValue spectral_zeta(const DomainSpec& domain, double z, std::size_t truncation) {
    domain.validate();
    const double d = static_cast<double>(domain.dim());
    if (!(z > d / 2.0))
        throw DivergenceError("spectral_zeta: z = " + std::to_string(z) +
                              " is outside the convergence region z > d/2 = " +
                              std::to_string(d / 2.0));
    detail::require(truncation >= 1, "spectral_zeta: truncation must be >= 1");

    const auto lam = eigenvalues(domain, truncation);
    double partial = 0.0;
    for (std::size_t k = truncation; k-- > 0;) partial += std::pow(lam[k], -z);

    const double n = static_cast<double>(truncation);
    const double s = 2.0 * z / d;
    const auto bracket = detail::power_law_tail(std::pow(lam.back(), -z), n, s);
    return {z, partial + bracket.mid(), truncation, bracket.half_width()};
}

/// Fractional heat kernel g(t; x, y) = sum_k phi_k(x) phi_k(y) exp(-lambda_k^gamma t),
/// truncated to the first `truncation` modes.
inline double greens_kernel(const DomainSpec& domain, double gamma, double t,
                            std::span<const double> x, std::span<const double> y,
                            std::size_t truncation) {
    domain.validate();
    if (!(t > 0.0)) throw InvalidArgument("greens_kernel: t must be > 0");
    detail::require(gamma > 0.0, "greens_kernel: gamma must be > 0");
    detail::require(domain.contains_closure(x) && domain.contains_closure(y),
                    "greens_kernel: points must lie in the domain");
    const auto pairs = enumerate_eigenpairs(domain, truncation);
    double acc = 0.0;
    for (std::size_t k = truncation; k-- > 0;) {
        const auto& e = pairs[k];
        acc += e.phi(x) * e.phi(y) * std::exp(-std::pow(e.lambda, gamma) * t);
    }
    return acc;
}

inline double greens_kernel(const DomainSpec& domain, double gamma, double t, double x,
                            double y, std::size_t truncation) {
    return greens_kernel(domain, gamma, t, std::span<const double>(&x, 1),
                         std::span<const double>(&y, 1), truncation);
}

/// Upper bound on |g - g_truncated| from the eigenfunction sup bound:
///   sum_{k > K} ||phi_k||_inf^2 exp(-lambda_k^gamma t).
/// Intervals use ||phi_k||_inf^2 = 2/L exactly and an integral majorant; boxes
/// sum the bound over enumerated modes until the terms become negligible.
inline double greens_kernel_tail_bound(const DomainSpec& domain, double gamma, double t,
                                       std::size_t truncation) {
    domain.validate();
    if (!(t > 0.0)) throw InvalidArgument("greens_kernel_tail_bound: t must be > 0");
    if (domain.dim() == 1) {
        const double l = domain.side(0);
        const double step = std::numbers::pi / l;
        // terms decrease in k, so sum_{k>K} f(k) <= int_K^inf f(x) dx, computed on
        // a geometric grid until the integrand underflows.
        auto f = [&](double k) { return std::exp(-std::pow(step * k, 2.0 * gamma) * t); };
        double acc = 0.0;
        double a = static_cast<double>(truncation);
        double width = 1.0;
        while (f(a) > 1e-300 && width < 1e12) {
            const auto rule = quadrature::composite_gauss_legendre(a, a + width, 1);
            acc += rule.integrate(f);
            a += width;
            width *= 2.0;
        }
        return 2.0 / l * acc;
    }
    std::size_t count = std::max<std::size_t>(4 * truncation, truncation + 64);
    for (;;) {
        const auto pairs = enumerate_eigenpairs(domain, count);
        double acc = 0.0;
        for (std::size_t k = truncation; k < count; ++k) {
            const double b = pairs[k].sup_bound();
            acc += b * b * std::exp(-std::pow(pairs[k].lambda, gamma) * t);
        }
        const double b = pairs.back().sup_bound();
        const double last_term = b * b * std::exp(-std::pow(pairs.back().lambda, gamma) * t);
        if (last_term * static_cast<double>(count) <= 1e-16 * acc || last_term < 1e-300 ||
            count > (std::size_t{1} << 20))
            return acc;
        count *= 2;
    }
}

/// int_a^b phi_k phi_l for the interval (0, L), k != l, exact.
inline double cross_inner_product(const DomainSpec& domain, int k, int l, double a, double b) {
    domain.validate();
    detail::require(domain.dim() == 1, "cross_inner_product: only intervals (d = 1)");
    detail::require(k >= 1 && l >= 1, "cross_inner_product: indices must be >= 1");
    if (k == l)
        throw InvalidArgument("cross_inner_product: k == l, use orthonormality instead");
    const double len = domain.side(0);
    detail::require(0.0 <= a && a <= b && b <= len,
                    "cross_inner_product: subinterval must lie inside the domain");
    const double w = std::numbers::pi / len;
    // d/dy [l sin(ky) cos(ly) - k sin(ly) cos(ky)] = (k^2 - l^2) sin(ky) sin(ly), frequencies scaled by w
    auto antiderivative = [&](double y) {
        const double ky = k * w * y;
        const double ly = l * w * y;
        return (l * std::sin(ky) * std::cos(ly) - k * std::sin(ly) * std::cos(ky)) /
               (w * (static_cast<double>(k) * k - static_cast<double>(l) * l));
    };
    return 2.0 / len * (antiderivative(b) - antiderivative(a));
}

}  // namespace spdepv
