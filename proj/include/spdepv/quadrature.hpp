#pragma once

#include <cstddef>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "spdepv/error.hpp"

namespace spdepv::quadrature {

struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;

    std::size_t size() const noexcept { return nodes.size(); }

    template <class F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

/// 20-point Gauss-Legendre on each of `panels` equal sub-intervals of [a, b].
inline Rule composite_gauss_legendre(double a, double b, std::size_t panels) {
    detail::require(panels >= 1, "composite_gauss_legendre: panels must be >= 1");
    detail::require(b > a, "composite_gauss_legendre: empty interval");
    using G = boost::math::quadrature::gauss<double, 20>;
    const auto& x = G::abscissa();  // non-negative half, 10 entries for N = 20
    const auto& w = G::weights();

    Rule rule;
    rule.nodes.reserve(panels * 20);
    rule.weights.reserve(panels * 20);
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double mid = a + (static_cast<double>(p) + 0.5) * h;
        const double half = 0.5 * h;
        for (std::size_t i = 0; i < x.size(); ++i) {
            rule.nodes.push_back(mid - half * x[i]);
            rule.weights.push_back(half * w[i]);
            if (x[i] != 0.0) {
                rule.nodes.push_back(mid + half * x[i]);
                rule.weights.push_back(half * w[i]);
            }
        }
    }
    return rule;
}

/// Panel count for trigonometric integrands of frequency up to `max_frequency`
/// (in half-periods over the interval): linear in the frequency.
inline std::size_t panels_for_frequency(std::size_t max_frequency) {
    return 2 + max_frequency / 4;
}

}  // namespace spdepv::quadrature
