#pragma once

// Reference implementations used as oracles, and the constant-table check run
// by `spdepv validate`. The oracles deliberately take different routes from
// the library code: lexicographic permutation enumeration for permanents,
// set-partition enumeration for Bell polynomials, perfect matchings for
// Gaussian moments and Boost's Riemann zeta for spectral constants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iomanip>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/zeta.hpp>
#include <nlohmann/json.hpp>

#include "spdepv/combinatorics.hpp"
#include "spdepv/error.hpp"
#include "spdepv/io.hpp"
#include "spdepv/limits.hpp"

namespace spdepv::oracle {

/// per_alpha by std::next_permutation over Sym_p with an independent cycle count.
inline double permanent_bruteforce(const Eigen::MatrixXd& a, double alpha) {
    const auto p = static_cast<std::size_t>(a.rows());
    std::vector<std::size_t> s(p);
    std::iota(s.begin(), s.end(), std::size_t{0});
    double total = 0.0;
    do {
        std::vector<bool> seen(p, false);
        int cycles = 0;
        for (std::size_t i = 0; i < p; ++i) {
            if (seen[i]) continue;
            ++cycles;
            std::size_t j = i;
            while (!seen[j]) {
                seen[j] = true;
                j = s[j];
            }
        }
        double prod = std::pow(alpha, cycles);
        for (std::size_t i = 0; i < p; ++i)
            prod *= a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(s[i]));
        total += prod;
    } while (std::next_permutation(s.begin(), s.end()));
    return total;
}

/// Visits every set partition of {0..n-1} as a list of block sizes.
inline void for_each_partition(std::size_t n, const std::function<void(const std::vector<std::size_t>&)>& visit) {
    std::vector<std::size_t> label(n, 0);  // restricted growth string
    std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t i, std::size_t blocks) {
        if (i == n) {
            std::vector<std::size_t> sizes(blocks, 0);
            for (std::size_t v : label) ++sizes[v];
            visit(sizes);
            return;
        }
        for (std::size_t b = 0; b <= blocks; ++b) {
            label[i] = b;
            rec(i + 1, std::max(blocks, b + 1));
        }
    };
    rec(0, 0);
}

/// B_p(x) = sum over set partitions pi of {1..p} of prod_{B in pi} x_{|B|}.
inline double bell_by_partitions(std::span<const double> x) {
    double total = 0.0;
    for_each_partition(x.size(), [&](const std::vector<std::size_t>& sizes) {
        double prod = 1.0;
        for (std::size_t s : sizes) prod *= x[s - 1];
        total += prod;
    });
    return total;
}

/// E[prod_i X_i^2] for X ~ N(0, C) by Isserlis: sum over perfect matchings of the
/// multiset {0, 0, 1, 1, ..., p-1, p-1}.
inline double gaussian_moment_wick(const Eigen::MatrixXd& c) {
    const auto p = static_cast<std::size_t>(c.rows());
    std::vector<std::size_t> item(2 * p);
    for (std::size_t i = 0; i < 2 * p; ++i) item[i] = i / 2;
    std::vector<bool> used(2 * p, false);
    std::function<double()> rec = [&]() -> double {
        std::size_t first = 0;
        while (first < used.size() && used[first]) ++first;
        if (first == used.size()) return 1.0;
        used[first] = true;
        double acc = 0.0;
        for (std::size_t j = first + 1; j < used.size(); ++j) {
            if (used[j]) continue;
            used[j] = true;
            acc += c(static_cast<Eigen::Index>(item[first]), static_cast<Eigen::Index>(item[j])) * rec();
            used[j] = false;
        }
        used[first] = false;
        return acc;
    };
    return rec();
}

/// Random symmetric matrix with entries uniform in [-1, 1].
inline Eigen::MatrixXd random_symmetric(std::size_t p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd a(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = i; j < a.cols(); ++j) a(i, j) = a(j, i) = u(rng);
    return a;
}

/// Random covariance B B^T.
inline Eigen::MatrixXd random_covariance(std::size_t p, std::mt19937_64& rng) {
    std::normal_distribution<double> n;
    Eigen::MatrixXd b(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (Eigen::Index i = 0; i < b.rows(); ++i)
        for (Eigen::Index j = 0; j < b.cols(); ++j) b(i, j) = n(rng);
    return b * b.transpose() / static_cast<double>(p);
}

/// Gamma(r + 1/2) / (2 (1/2 - r)): the constant of the one-dimensional interval (0, pi), gamma = 1.
inline double interval_super_constant(double r) {
    return std::tgamma(r + 0.5) / (2.0 * (0.5 - r));
}

}  // namespace spdepv::oracle

namespace spdepv {

namespace detail {
inline std::string sci(double x) {
    std::ostringstream os;
    os << std::setprecision(12) << x;
    return os.str();
}
}  // namespace detail

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
    }
};

/// Built-in table of constants on (0, pi), gamma = 1, with oracle values.
inline json default_constant_table() {
    const double z2 = boost::math::zeta(2.0);
    const double z4 = boost::math::zeta(4.0);
    const double x1 = z2 / 2.0;
    const double x2 = z4 / 2.0;
    json entries = json::array();
    auto add = [&](double r, int p, double expected) {
        entries.push_back({{"r", r}, {"gamma", 1.0}, {"sides", {std::numbers::pi}}, {"p", p},
                           {"expected", expected}, {"tol", 1e-8}});
    };
    add(-1.0, 1, z2);
    add(-1.0, 2, 4.0 * (x1 * x1 + x2));
    add(-2.0, 1, z4);
    add(-0.5, 1, 0.5);
    add(-0.5, 2, 0.25);
    add(-0.5, 3, 0.125);
    add(0.0, 1, std::sqrt(std::numbers::pi));
    add(0.0, 2, std::numbers::pi);
    add(0.25, 1, oracle::interval_super_constant(0.25));
    return json{{"entries", entries}};
}

/// Compares K(r, p) from the library against every entry of `table`.
inline void check_constant_table(const json& table, ValidationReport& rep) {
    if (!table.contains("entries") || !table.at("entries").is_array())
        throw ConfigError("constant table: expected an \"entries\" array");
    for (const auto& e : table.at("entries")) {
        ValidationCheck c;
        try {
            RegimeParams params;
            params.r = e.at("r").get<double>();
            params.gamma = e.value("gamma", 1.0);
            params.domain = DomainSpec::box(e.value("sides", std::vector<double>{std::numbers::pi}));
            const int p = e.value("p", 1);
            const double expected = e.at("expected").get<double>();
            const double tol = e.value("tol", 1e-8);
            const double got = limit_constant_even_power(params, p, 1.0);
            c.name = "K(r=" + std::to_string(params.r) + ", p=" + std::to_string(p) + ")";
            c.passed = std::abs(got - expected) <= tol * std::max(1.0, std::abs(expected));
            c.detail = "library " + detail::sci(got) + " vs table " + detail::sci(expected);
        } catch (const json::exception& ex) {
            throw ConfigError(std::string("constant table entry: ") + ex.what());
        } catch (const Error& ex) {
            c.name = "constant table entry";
            c.passed = false;
            c.detail = ex.what();
        }
        rep.checks.push_back(c);
    }
}

/// Oracle suite: combinatorics identities, consistency of K_r and the constant table.
inline ValidationReport run_validation(const json& table = default_constant_table(), std::uint64_t seed = 1) {
    ValidationReport rep;
    std::mt19937_64 rng(seed);
    double worst_perm = 0.0, worst_det = 0.0, worst_wick = 0.0, worst_bell = 0.0;
    for (std::size_t p = 1; p <= 6; ++p) {
        const auto a = oracle::random_symmetric(p, rng);
        const SymMatrix sa(a);
        for (double alpha : {-1.0, 0.5, 1.0, 2.5}) {
            const double lib = alpha_permanent(sa, alpha);
            worst_perm = std::max(worst_perm, std::abs(lib - oracle::permanent_bruteforce(a, alpha)));
        }
        const double sign = p % 2 == 0 ? 1.0 : -1.0;
        worst_det = std::max(worst_det, std::abs(alpha_permanent(sa, -1.0) - sign * a.determinant()));
        const auto c = oracle::random_covariance(p, rng);
        worst_wick = std::max(worst_wick,
                              std::abs(gaussian_even_moment(SymMatrix(c)) - oracle::gaussian_moment_wick(c)));
        std::uniform_real_distribution<double> u(-2.0, 2.0);
        std::vector<double> x(p);
        for (double& v : x) v = u(rng);
        worst_bell = std::max(worst_bell, std::abs(complete_bell(x) - oracle::bell_by_partitions(x)));
    }
    auto add = [&](std::string name, double err, double tol) {
        rep.checks.push_back({std::move(name), err <= tol, "max abs error " + detail::sci(err)});
    };
    add("alpha-permanent vs brute force (p<=6)", worst_perm, 1e-10);
    add("per_{-1} = (-1)^p det (p<=6)", worst_det, 1e-10);
    add("Gaussian even moment vs Wick pairings (p<=6)", worst_wick, 1e-10);
    add("complete Bell vs partition enumeration (p<=6)", worst_bell, 1e-10);

    double worst_k = 0.0;
    std::uniform_real_distribution<double> ur(-0.5, 0.5);
    for (int i = 0; i < 20; ++i) {
        double r = ur(rng);
        if (r <= -0.5 + 1e-9) r = 0.0;
        RegimeParams params{r, 1.0, DomainSpec::interval()};
        worst_k = std::max(worst_k, std::abs(k_r(params) - oracle::interval_super_constant(r)));
    }
    add("K_r (general formula) vs interval closed form, 20 random r", worst_k, 1e-10);
    check_constant_table(table, rep);
    return rep;
}

inline json validation_json(const ValidationReport& rep) {
    json checks = json::array();
    for (const auto& c : rep.checks)
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return json{{"all_passed", rep.all_passed()}, {"checks", checks}};
}

}  // namespace spdepv
