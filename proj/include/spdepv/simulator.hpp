#pragma once

// Solution paths u(t) = sum_k a_k(t) phi_k stored as coefficient matrices.
// Additive noise uses the exact Ornstein-Uhlenbeck transition of every mode;
// field and state-dependent noise use an exponential-Euler spectral-Galerkin
// scheme with one Gaussian per space-time cell.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spdepv/error.hpp"
#include "spdepv/limits.hpp"
#include "spdepv/random.hpp"
#include "spdepv/spectrum.hpp"

namespace spdepv {

enum class SigmaKind { Constant, DeterministicField, StateDependent };

inline const char* to_string(SigmaKind k) noexcept {
    switch (k) {
        case SigmaKind::Constant: return "CONSTANT";
        case SigmaKind::DeterministicField: return "DETERMINISTIC_FIELD";
        case SigmaKind::StateDependent: return "STATE_DEPENDENT";
    }
    return "?";
}

/// Noise coefficient sigma: a constant c, a field sigma(t, x) or a function sigma(u).
struct Sigma {
    SigmaKind kind = SigmaKind::Constant;
    double c = 1.0;
    std::function<double(double, std::span<const double>)> field;
    std::function<double(double)> state;
    std::string label = "constant";

    static Sigma constant(double value) {
        Sigma s;
        s.c = value;
        s.label = "constant(" + std::to_string(value) + ")";
        return s;
    }
    static Sigma deterministic_field(std::function<double(double, std::span<const double>)> f,
                                     std::string label) {
        Sigma s;
        s.kind = SigmaKind::DeterministicField;
        s.field = std::move(f);
        s.label = std::move(label);
        return s;
    }
    static Sigma state_dependent(std::function<double(double)> f, std::string label) {
        Sigma s;
        s.kind = SigmaKind::StateDependent;
        s.state = std::move(f);
        s.label = std::move(label);
        return s;
    }
};

struct SimConfig {
    RegimeParams params;  // domain and gamma; r is irrelevant for simulation
    std::size_t truncation = 256;
    double delta = 1.0 / 256;
    double horizon = 1.0;
    Sigma sigma;
    std::size_t spatial_grid = 0;  // quadrature nodes M, needed when sigma is not constant
    std::uint64_t seed = 0;

    /// Number of steps N = [T / Delta].
    std::size_t steps() const {
        return static_cast<std::size_t>(std::floor(horizon / delta + 1e-9));
    }

    void validate() const {
        params.domain.validate();
        detail::require(std::isfinite(params.gamma) && params.gamma > 0.0,
                        "SimConfig: gamma must be > 0");
        detail::require(truncation >= 1, "SimConfig: truncation K must be >= 1");
        detail::require(std::isfinite(delta) && delta > 0.0, "SimConfig: delta must be > 0");
        detail::require(std::isfinite(horizon) && horizon > delta,
                        "SimConfig: horizon T must exceed delta");
        if (sigma.kind == SigmaKind::Constant) {
            detail::require(std::isfinite(sigma.c), "SimConfig: sigma constant must be finite");
        } else {
            detail::require(spatial_grid >= 2 * truncation,
                            "SimConfig: spatial grid M must be >= 2K for non-constant sigma");
            if (sigma.kind == SigmaKind::DeterministicField)
                detail::require(static_cast<bool>(sigma.field), "SimConfig: sigma field is empty");
            else
                detail::require(static_cast<bool>(sigma.state), "SimConfig: sigma(u) is empty");
        }
    }
};

/// Coefficients a_k(t_i), i = 0..N, k = 1..K, row-major.
struct CoefficientPath {
    std::vector<double> times;
    std::vector<double> coeffs;
    std::vector<double> lambda;
    SimConfig config;

    std::size_t rows() const noexcept { return times.size(); }
    std::size_t modes() const noexcept { return lambda.size(); }
    std::span<const double> row(std::size_t i) const {
        detail::require(i < rows(), "CoefficientPath: time index out of range");
        return {coeffs.data() + i * modes(), modes()};
    }
};

namespace detail {

inline std::vector<double> hr_weights(std::span<const double> lambda, double r) {
    std::vector<double> w(lambda.size());
    for (std::size_t k = 0; k < lambda.size(); ++k) w[k] = std::pow(lambda[k], r);
    return w;
}

inline double weighted_sq(std::span<const double> a, std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) acc += w[k] * a[k] * a[k];
    return acc;
}

inline double weighted_diff_sq(std::span<const double> a, std::span<const double> b,
                               std::span<const double> w) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += w[k] * d * d;
    }
    return acc;
}

}  // namespace detail

/// Exact OU transition for all modes. Step i draws its K normals from the
/// stream derive_seed(seed, i), so any step can be regenerated on its own.
class AdditiveStepper {
public:
    AdditiveStepper(std::span<const double> lambda, double gamma, double delta, double c,
                    std::uint64_t seed)
        : decay_(lambda.size()), sd_(lambda.size()), state_(lambda.size(), 0.0), seed_(seed) {
        for (std::size_t k = 0; k < lambda.size(); ++k) {
            const double rate = std::pow(lambda[k], gamma);
            decay_[k] = std::exp(-rate * delta);
            sd_[k] = c * std::sqrt(-std::expm1(-2.0 * rate * delta) / (2.0 * rate));
        }
    }

    /// Advance from t_i to t_{i+1}.
    void step() {
        NormalStream normal(derive_seed(seed_, step_));
        for (std::size_t k = 0; k < state_.size(); ++k)
            state_[k] = decay_[k] * state_[k] + sd_[k] * normal();
        ++step_;
    }

    std::span<const double> state() const noexcept { return state_; }
    std::size_t steps_taken() const noexcept { return step_; }

private:
    std::vector<double> decay_;
    std::vector<double> sd_;
    std::vector<double> state_;
    std::uint64_t seed_;
    std::size_t step_ = 0;
};

/// Exact joint draw of (a(t - Delta), a(t)) for additive noise sigma = c, mode by
/// mode: a(t - Delta) from its marginal law, then one OU transition. Writes the
/// increment a(t) - a(t - Delta) into `incr` and a(t) into `end`.
inline void sample_two_point(std::span<const double> lambda, double gamma, double c, double t,
                             double delta, NormalStream& normal, std::span<double> incr,
                             std::span<double> end) {
    detail::require(delta > 0.0 && t >= delta * (1.0 - 1e-12),
                    "sample_two_point: need 0 < delta <= t");
    const double t0 = std::max(t - delta, 0.0);
    for (std::size_t k = 0; k < lambda.size(); ++k) {
        const double rate = std::pow(lambda[k], gamma);
        const double start = c * std::sqrt(-std::expm1(-2.0 * rate * t0) / (2.0 * rate)) * normal();
        const double next = std::exp(-rate * delta) * start +
                            c * std::sqrt(-std::expm1(-2.0 * rate * delta) / (2.0 * rate)) * normal();
        incr[k] = next - start;
        end[k] = next;
    }
}

inline CoefficientPath simulate_additive(const SimConfig& config) {
    config.validate();
    if (config.sigma.kind != SigmaKind::Constant)
        throw InvalidArgument("simulate_additive: sigma must be constant");
    CoefficientPath path;
    path.config = config;
    path.lambda = eigenvalues(config.params.domain, config.truncation);
    const std::size_t n = config.steps();
    const std::size_t k = config.truncation;
    path.times.resize(n + 1);
    path.coeffs.assign((n + 1) * k, 0.0);
    AdditiveStepper stepper(path.lambda, config.params.gamma, config.delta, config.sigma.c,
                            config.seed);
    for (std::size_t i = 0; i <= n; ++i) {
        path.times[i] = static_cast<double>(i) * config.delta;
        if (i == 0) continue;
        stepper.step();
        std::copy(stepper.state().begin(), stepper.state().end(), path.coeffs.begin() + i * k);
    }
    return path;
}

/// Exponential-Euler scheme for d = 1 with sigma frozen at the left end of each step:
///   a_k(t_{i+1}) = e^{-lambda_k^gamma Delta} (a_k(t_i)
///                  + sum_m phi_k(y_m) sigma_m sqrt(Delta w_m) xi_{m,i})
/// on the midpoint grid y_m = (m + 1/2) L / M, w_m = L / M.
inline CoefficientPath simulate_field_sigma(const SimConfig& config) {
    config.validate();
    if (config.sigma.kind == SigmaKind::Constant)
        throw InvalidArgument("simulate_field_sigma: sigma must be a field or state-dependent");
    if (config.params.d() != 1)
        throw InvalidArgument("simulate_field_sigma: only d = 1 is supported");
    if (config.sigma.kind == SigmaKind::StateDependent && !(config.params.gamma > 0.5))
        throw RegimeError("simulate_field_sigma: state-dependent sigma requires gamma > d/2");

    const std::size_t k_modes = config.truncation;
    const std::size_t m_cells = config.spatial_grid;
    const double len = config.params.domain.side(0);
    const double cell = len / static_cast<double>(m_cells);
    const auto mk = static_cast<Eigen::Index>(k_modes);
    const auto mm = static_cast<Eigen::Index>(m_cells);

    CoefficientPath path;
    path.config = config;
    path.lambda = eigenvalues(config.params.domain, k_modes);

    std::vector<double> y(m_cells);
    for (std::size_t m = 0; m < m_cells; ++m) y[m] = (static_cast<double>(m) + 0.5) * cell;
    // basis(k, m) = phi_k(y_m)
    Eigen::MatrixXd basis(mk, mm);
    const double norm = std::sqrt(2.0 / len);
    for (Eigen::Index k = 0; k < mk; ++k)
        for (Eigen::Index m = 0; m < mm; ++m)
            basis(k, m) = norm * std::sin(std::numbers::pi * static_cast<double>(k + 1) *
                                          y[static_cast<std::size_t>(m)] / len);

    Eigen::VectorXd decay(mk);
    for (Eigen::Index k = 0; k < mk; ++k)
        decay(k) = std::exp(-std::pow(path.lambda[static_cast<std::size_t>(k)],
                                      config.params.gamma) * config.delta);

    const std::size_t n = config.steps();
    path.times.resize(n + 1);
    path.coeffs.assign((n + 1) * k_modes, 0.0);
    Eigen::VectorXd a = Eigen::VectorXd::Zero(mk);
    Eigen::VectorXd u(mm);
    Eigen::VectorXd noise(mm);
    const double scale = std::sqrt(config.delta * cell);
    for (std::size_t i = 0; i <= n; ++i) {
        path.times[i] = static_cast<double>(i) * config.delta;
        if (i == 0) continue;
        const double t_left = static_cast<double>(i - 1) * config.delta;
        if (config.sigma.kind == SigmaKind::StateDependent) u.noalias() = basis.transpose() * a;
        NormalStream normal(derive_seed(config.seed, i - 1));
        for (Eigen::Index m = 0; m < mm; ++m) {
            double s;
            if (config.sigma.kind == SigmaKind::DeterministicField) {
                const double ym = y[static_cast<std::size_t>(m)];
                s = config.sigma.field(t_left, std::span<const double>(&ym, 1));
            } else {
                s = config.sigma.state(u(m));
            }
            noise(m) = s * scale * normal();
        }
        a = decay.cwiseProduct(a + basis * noise);
        if (!a.allFinite())
            throw NumericalError("simulate_field_sigma: non-finite coefficients at step " +
                                 std::to_string(i));
        std::copy(a.data(), a.data() + mk, path.coeffs.begin() + static_cast<std::ptrdiff_t>(i * k_modes));
    }
    return path;
}

/// Dispatches on the sigma kind.
inline CoefficientPath simulate(const SimConfig& config) {
    return config.sigma.kind == SigmaKind::Constant ? simulate_additive(config)
                                                    : simulate_field_sigma(config);
}

/// ||u(t_i)||_{H_r} = (sum_k lambda_k^r a_k(t_i)^2)^{1/2}.
inline double hr_norm(const CoefficientPath& path, std::size_t i, double r) {
    const auto w = detail::hr_weights(path.lambda, r);
    return std::sqrt(detail::weighted_sq(path.row(i), w));
}

/// ||u(t_i) - u(t_{i-1})||_{H_r}.
inline double increment_hr_norm(const CoefficientPath& path, std::size_t i, double r) {
    if (i == 0) throw InvalidArgument("increment_hr_norm: i must be >= 1");
    const auto w = detail::hr_weights(path.lambda, r);
    return std::sqrt(detail::weighted_diff_sq(path.row(i), path.row(i - 1), w));
}

/// u(t_i, x) = sum_k a_k(t_i) phi_k(x); zero on the boundary.
inline double evaluate_field(const CoefficientPath& path, std::size_t i,
                             std::span<const double> x) {
    const auto& domain = path.config.params.domain;
    detail::require(x.size() == domain.dim(), "evaluate_field: point has the wrong dimension");
    if (!domain.contains_closure(x))
        throw InvalidArgument("evaluate_field: point lies outside the closed domain");
    if (domain.on_boundary(x)) return 0.0;
    const auto a = path.row(i);
    if (domain.dim() == 1) {
        const double len = domain.side(0);
        const double norm = std::sqrt(2.0 / len);
        double acc = 0.0;
        for (std::size_t k = a.size(); k-- > 0;)
            acc += a[k] * norm * std::sin(std::numbers::pi * static_cast<double>(k + 1) * x[0] / len);
        return acc;
    }
    const auto pairs = enumerate_eigenpairs(domain, a.size());
    double acc = 0.0;
    for (std::size_t k = a.size(); k-- > 0;) acc += a[k] * pairs[k].phi(x);
    return acc;
}

inline double evaluate_field(const CoefficientPath& path, std::size_t i, double x) {
    return evaluate_field(path, i, std::span<const double>(&x, 1));
}

}  // namespace spdepv
