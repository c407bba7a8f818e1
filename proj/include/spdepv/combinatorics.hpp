#pragma once

// Alpha-permanents, complete Bell polynomials, cycle counts and Gaussian
// even-moment identities.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdepv/error.hpp"

namespace spdepv {

/// Dense symmetric p x p matrix. Symmetry is checked on construction.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(Eigen::MatrixXd m) : m_(std::move(m)) {
        detail::require(m_.rows() == m_.cols() && m_.rows() >= 1,
                        "SymMatrix: matrix must be square and non-empty");
        const double scale = std::max(1.0, m_.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < m_.rows(); ++i)
            for (Eigen::Index j = i + 1; j < m_.cols(); ++j)
                if (std::abs(m_(i, j) - m_(j, i)) > 1e-12 * scale)
                    throw InvalidArgument("SymMatrix: matrix is not symmetric");
    }

    SymMatrix(std::initializer_list<std::initializer_list<double>> rows)
        : SymMatrix(from_rows(rows)) {}

    static SymMatrix identity(std::size_t p) {
        return SymMatrix(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(p),
                                                   static_cast<Eigen::Index>(p)));
    }

    std::size_t size() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    double operator()(std::size_t i, std::size_t j) const {
        return m_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    }
    const Eigen::MatrixXd& matrix() const noexcept { return m_; }

private:
    static Eigen::MatrixXd from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        const auto p = static_cast<Eigen::Index>(rows.size());
        Eigen::MatrixXd m(p, p);
        Eigen::Index i = 0;
        for (const auto& row : rows) {
            detail::require(static_cast<Eigen::Index>(row.size()) == p,
                            "SymMatrix: ragged initializer");
            Eigen::Index j = 0;
            for (double v : row) m(i, j++) = v;
            ++i;
        }
        return m;
    }

    Eigen::MatrixXd m_;
};

inline constexpr std::size_t kMaxPermanentSize = 10;

namespace detail {

// Cycle count of a known-valid permutation with at most 32 points.
inline std::size_t cycles_unchecked(std::span<const std::size_t> perm) noexcept {
    std::uint32_t seen = 0;
    std::size_t cycles = 0;
    for (std::size_t i = 0; i < perm.size(); ++i) {
        if (seen & (1u << i)) continue;
        ++cycles;
        for (std::size_t j = i; !(seen & (1u << j)); j = perm[j]) seen |= 1u << j;
    }
    return cycles;
}

}  // namespace detail

/// Number of disjoint cycles (fixed points included) of a permutation of
/// {0, ..., p-1} given in one-line notation perm[i] = image of i.
inline std::size_t cycle_count(std::span<const std::size_t> perm) {
    const std::size_t p = perm.size();
    detail::require(p >= 1, "cycle_count: empty permutation");
    std::vector<char> seen(p, 0);
    for (std::size_t v : perm) {
        if (v >= p || seen[v]) throw InvalidArgument("cycle_count: input is not a bijection");
        seen[v] = 1;
    }
    std::fill(seen.begin(), seen.end(), 0);
    std::size_t cycles = 0;
    for (std::size_t i = 0; i < p; ++i) {
        if (seen[i]) continue;
        ++cycles;
        for (std::size_t j = i; !seen[j]; j = perm[j]) seen[j] = 1;
    }
    return cycles;
}

/// per_alpha(A) = sum over permutations S of alpha^{#cycles(S)} prod_i A[i][S(i)].
///
/// Explicit enumeration with Heap's algorithm; the cycle structure of every
/// permutation is needed for the alpha weight, so Ryser-type formulas do not apply.
inline double alpha_permanent(const SymMatrix& a, double alpha) {
    const std::size_t p = a.size();
    if (p > kMaxPermanentSize)
        throw InvalidArgument("alpha_permanent: size " + std::to_string(p) +
                              " exceeds the enumeration limit of " +
                              std::to_string(kMaxPermanentSize));

    std::vector<double> alpha_pow(p + 1, 1.0);
    for (std::size_t c = 1; c <= p; ++c) alpha_pow[c] = alpha_pow[c - 1] * alpha;

    std::vector<std::size_t> perm(p);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto term = [&] {
        double prod = 1.0;
        for (std::size_t i = 0; i < p; ++i) prod *= a(i, perm[i]);
        return prod == 0.0 ? 0.0 : alpha_pow[detail::cycles_unchecked(perm)] * prod;
    };

    double total = term();
    std::vector<std::size_t> c(p, 0);
    for (std::size_t i = 1; i < p;) {
        if (c[i] < i) {
            std::swap(perm[i % 2 == 0 ? 0 : c[i]], perm[i]);
            total += term();
            ++c[i];
            i = 1;
        } else {
            c[i] = 0;
            ++i;
        }
    }
    return total;
}

/// E[X_1^2 ... X_p^2] = 2^p per_{1/2}(C) for X ~ N(0, C).
inline double gaussian_even_moment(const SymMatrix& cov) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.matrix(), Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success)
        throw NumericalError("gaussian_even_moment: eigenvalue computation failed");
    if (eig.eigenvalues().minCoeff() < -1e-10)
        throw InvalidArgument("gaussian_even_moment: covariance is not positive semidefinite");
    return std::ldexp(alpha_permanent(cov, 0.5), static_cast<int>(cov.size()));
}

/// Complete Bell polynomial B_p(x_1, ..., x_p), p = x.size(), via
///   B_{n+1} = sum_{i=0}^{n} C(n, i) B_{n-i} x_{i+1},  B_0 = 1.
inline double complete_bell(std::span<const double> x) {
    const std::size_t p = x.size();
    detail::require(p >= 1, "complete_bell: need at least one variable");
    std::vector<double> b(p + 1, 0.0);
    b[0] = 1.0;
    for (std::size_t n = 0; n < p; ++n) {
        double binom = 1.0;  // C(n, i)
        double acc = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            acc += binom * b[n - i] * x[i];
            binom = binom * static_cast<double>(n - i) / static_cast<double>(i + 1);
        }
        b[n + 1] = acc;
    }
    return b[p];
}

inline double complete_bell(std::initializer_list<double> x) {
    return complete_bell(std::span<const double>(x.begin(), x.size()));
}

}  // namespace spdepv
