#pragma once

// Normalized variations of a path along the equidistant partition t_i = i Delta:
//   power:   V_p(t) = Delta sum_{i <= [t/Delta]} (||u(t_i) - u(t_{i-1})||_{H_r} / tau)^p
//   scalar:  V_f(t) = Delta sum f(||u(t_i) - u(t_{i-1})||_{H_r} / tau)
//   general: V_F(t) = Delta sum F((u(t_i) - u(t_{i-1})) / tau)

#include <cmath>
#include <cstddef>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "spdepv/error.hpp"
#include "spdepv/functional.hpp"
#include "spdepv/limits.hpp"
#include "spdepv/simulator.hpp"

namespace spdepv {

struct PowerOrder {
    double p = 2.0;
};
struct ScalarFunction {
    std::function<double(double)> f;
    std::string label = "f";
};
struct GeneralFunctional {
    Functional F;
    std::string label = "F";
};

struct VariationRequest {
    double r = -1.0;
    std::variant<PowerOrder, ScalarFunction, GeneralFunctional> kind = PowerOrder{};
    std::optional<double> tau;  // explicit normalizer; tau_n(r) of the path's Delta when empty

    static VariationRequest power(double r, double p, std::optional<double> tau = std::nullopt) {
        return {r, PowerOrder{p}, tau};
    }
    static VariationRequest scalar(double r, std::function<double(double)> f, std::string label,
                                   std::optional<double> tau = std::nullopt) {
        return {r, ScalarFunction{std::move(f), std::move(label)}, tau};
    }
    static VariationRequest general(double r, Functional F, std::string label,
                                    std::optional<double> tau = std::nullopt) {
        return {r, GeneralFunctional{std::move(F), std::move(label)}, tau};
    }
};

struct VariationSeries {
    std::vector<double> times;   // t_1 = Delta, ..., t_N
    std::vector<double> values;  // V(t_i)

    /// V(t) with [t / Delta] taken as floor(t / Delta + 1e-12).
    double at(double t) const {
        if (times.empty() || t < 0.0) return 0.0;
        const double delta = times.front();
        const auto i = static_cast<std::size_t>(std::floor(t / delta + 1e-12));
        if (i == 0) return 0.0;
        detail::require(i <= values.size(), "VariationSeries: time beyond the horizon");
        return values[i - 1];
    }
};

/// Normalizer of a request on a path: the override if present, otherwise tau_n(r).
inline double resolve_tau(const VariationRequest& req, const CoefficientPath& path) {
    if (req.tau) {
        detail::require(std::isfinite(*req.tau) && *req.tau > 0.0,
                        "variation: normalizer tau must be > 0");
        return *req.tau;
    }
    RegimeParams params = path.config.params;
    params.r = req.r;
    return tau_n(params, path.config.delta);
}

namespace detail {

template <class Term>
VariationSeries cumulative_series(const CoefficientPath& path, Term&& term) {
    const std::size_t n = path.rows() - 1;
    const double delta = path.config.delta;
    VariationSeries out;
    out.times.resize(n);
    out.values.resize(n);
    double acc = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        acc += delta * term(i);
        out.times[i - 1] = static_cast<double>(i) * delta;
        out.values[i - 1] = acc;
    }
    return out;
}

inline void check_non_decreasing(const VariationSeries& s) {
    for (std::size_t i = 0; i < s.values.size(); ++i) {
        if (!std::isfinite(s.values[i]))
            throw NumericalError("variation: non-finite value at index " + std::to_string(i + 1));
        if (i > 0 && s.values[i] < s.values[i - 1])
            throw NumericalError("variation: series of a non-negative integrand decreased at index " +
                                 std::to_string(i + 1));
    }
}

}  // namespace detail

inline VariationSeries power_variation(const CoefficientPath& path, const VariationRequest& req) {
    const auto* order = std::get_if<PowerOrder>(&req.kind);
    detail::require(order != nullptr, "power_variation: request does not carry an order p");
    if (!(order->p > 0.0)) throw InvalidArgument("power_variation: order p must be > 0");
    const double tau = resolve_tau(req, path);
    const auto w = detail::hr_weights(path.lambda, req.r);
    const double p = order->p;
    auto series = detail::cumulative_series(path, [&](std::size_t i) {
        const double x = std::sqrt(detail::weighted_diff_sq(path.row(i), path.row(i - 1), w)) / tau;
        return std::pow(x, p);
    });
    detail::check_non_decreasing(series);
    return series;
}

inline VariationSeries f_variation(const CoefficientPath& path, const VariationRequest& req) {
    const auto* fn = std::get_if<ScalarFunction>(&req.kind);
    detail::require(fn != nullptr && static_cast<bool>(fn->f),
                    "f_variation: request does not carry a function f");
    const double tau = resolve_tau(req, path);
    const auto w = detail::hr_weights(path.lambda, req.r);
    bool non_negative = true;
    auto series = detail::cumulative_series(path, [&](std::size_t i) {
        const double x = std::sqrt(detail::weighted_diff_sq(path.row(i), path.row(i - 1), w)) / tau;
        double v;
        try {
            v = fn->f(x);
        } catch (const std::exception& e) {
            throw Error("f_variation: " + fn->label + " failed at increment " + std::to_string(i) +
                        ": " + e.what());
        }
        if (!std::isfinite(v))
            throw NumericalError("f_variation: " + fn->label + " is not finite at increment " +
                                 std::to_string(i));
        non_negative = non_negative && v >= 0.0;
        return v;
    });
    if (non_negative) detail::check_non_decreasing(series);
    return series;
}

inline VariationSeries general_F_variation(const CoefficientPath& path,
                                           const VariationRequest& req) {
    const auto* fn = std::get_if<GeneralFunctional>(&req.kind);
    detail::require(fn != nullptr && static_cast<bool>(fn->F),
                    "general_F_variation: request does not carry a functional F");
    if (classify_regime(req.r, path.config.params.d()) != Regime::Sub)
        throw RegimeError(
            "general_F_variation: requires r < -d/2; above that threshold the normalized "
            "increments are not tight in H_r and no non-degenerate normalization exists");
    const double tau = resolve_tau(req, path);
    std::vector<double> incr(path.modes());
    return detail::cumulative_series(path, [&](std::size_t i) {
        const auto a = path.row(i);
        const auto b = path.row(i - 1);
        for (std::size_t k = 0; k < incr.size(); ++k) incr[k] = (a[k] - b[k]) / tau;
        try {
            return fn->F(CoefficientView{incr, path.lambda, req.r});
        } catch (const std::exception& e) {
            throw Error("general_F_variation: " + fn->label + " failed at increment " +
                        std::to_string(i) + ": " + e.what());
        }
    });
}

/// Dispatches on the request kind.
inline VariationSeries variation(const CoefficientPath& path, const VariationRequest& req) {
    if (std::holds_alternative<PowerOrder>(req.kind)) return power_variation(path, req);
    if (std::holds_alternative<ScalarFunction>(req.kind)) return f_variation(path, req);
    return general_F_variation(path, req);
}

inline void write_csv(const VariationSeries& s, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file + " for writing");
    out << "t,value\n" << std::setprecision(17);
    for (std::size_t i = 0; i < s.values.size(); ++i) out << s.times[i] << ',' << s.values[i] << '\n';
}

}  // namespace spdepv
