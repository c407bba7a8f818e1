#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "spdepv/error.hpp"

namespace spdepv {

/// An element h of H_r seen through its eigenbasis coefficients a_k(h),
/// together with the eigenvalues and the smoothness index r.
struct CoefficientView {
    std::span<const double> coeffs;
    std::span<const double> lambda;
    double r = 0.0;

    double hr_norm_sq() const {
        double acc = 0.0;
        for (std::size_t k = 0; k < coeffs.size(); ++k)
            acc += std::pow(lambda[k], r) * coeffs[k] * coeffs[k];
        return acc;
    }

    /// <h, b_k>_{H_r} for the orthonormal basis b_k = lambda_k^{-r/2} phi_k (k is 1-based).
    double coordinate(std::size_t k) const {
        detail::require(k >= 1 && k <= coeffs.size(), "CoefficientView: coordinate out of range");
        return std::pow(lambda[k - 1], r / 2.0) * coeffs[k - 1];
    }
};

/// Real functional on H_r. Continuity and polynomial growth are the caller's obligation.
using Functional = std::function<double(const CoefficientView&)>;

namespace functionals {

inline Functional hr_norm_power(double q) {
    return [q](const CoefficientView& h) { return std::pow(h.hr_norm_sq(), q / 2.0); };
}

inline Functional coordinate(std::size_t k) {
    return [k](const CoefficientView& h) { return h.coordinate(k); };
}

inline Functional coordinate_squared(std::size_t k) {
    return [k](const CoefficientView& h) {
        const double c = h.coordinate(k);
        return c * c;
    };
}

inline Functional constant(double c) {
    return [c](const CoefficientView&) { return c; };
}

}  // namespace functionals
}  // namespace spdepv
