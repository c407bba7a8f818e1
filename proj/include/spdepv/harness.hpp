#pragma once

// Experiment engine: JSON experiment specs, Monte Carlo convergence tables
// over dyadic step sizes, Hoelder regressions, constant reports and the
// oracle-based validation used by the CLI.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <nlohmann/json.hpp>

#include "spdepv/error.hpp"
#include "spdepv/io.hpp"
#include "spdepv/limits.hpp"
#include "spdepv/random.hpp"
#include "spdepv/simulator.hpp"
#include "spdepv/spectrum.hpp"
#include "spdepv/variations.hpp"

namespace spdepv {

// ---------------------------------------------------------------------------
// Parallel helpers

/// Thread count: explicit value if > 0, else SPDE_PV_THREADS, else hardware concurrency.
inline std::size_t resolve_threads(std::size_t requested = 0) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SPDE_PV_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
    }
    return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs task(j) for j = 0..count-1 on a small work pool. Results must be written
/// to per-index slots; the first failure (lowest index) is rethrown with its index.
inline void parallel_for(std::size_t count, std::size_t threads,
                         const std::function<void(std::size_t)>& task,
                         const std::function<std::string(std::size_t)>& describe = {}) {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::mutex mu;
    std::size_t failed_index = std::numeric_limits<std::size_t>::max();
    std::string failed_what;
    auto worker = [&] {
        for (;;) {
            const std::size_t j = next.fetch_add(1);
            if (j >= count || failed.load()) return;
            try {
                task(j);
            } catch (const std::exception& e) {
                std::lock_guard lock(mu);
                if (j < failed_index) {
                    failed_index = j;
                    failed_what = e.what();
                }
                failed = true;
            }
        }
    };
    const std::size_t n = std::min(std::max<std::size_t>(threads, 1), std::max<std::size_t>(count, 1));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
    }
    if (failed) {
        const std::string who = describe ? describe(failed_index) : "task " + std::to_string(failed_index);
        std::cerr << "spdepv: " << who << " failed: " << failed_what << '\n';
        throw Error(who + " failed: " + failed_what);
    }
}

/// Pairwise summation; the result depends only on the order of `v`.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 8) {
        double acc = 0.0;
        for (double x : v) acc += x;
        return acc;
    }
    const std::size_t h = v.size() / 2;
    return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

struct SampleSummary {
    double mean = 0.0;
    double std_error = std::numeric_limits<double>::quiet_NaN();
    bool se_available = false;
};

inline SampleSummary summarize(std::span<const double> v) {
    SampleSummary s;
    if (v.empty()) return s;
    const double n = static_cast<double>(v.size());
    s.mean = pairwise_sum(v) / n;
    if (v.size() >= 2) {
        std::vector<double> dev(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - s.mean) * (v[i] - s.mean);
        s.std_error = std::sqrt(pairwise_sum(dev) / (n - 1.0) / n);
        s.se_available = true;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Experiment specification

enum class NormalizerRule { TauN, SqrtDelta, Fixed };

/// A variation request together with the rule that produces its normalizer on each grid level.
struct VariationPlan {
    VariationRequest request;
    NormalizerRule rule = NormalizerRule::TauN;
    double fixed_tau = 1.0;
    std::string label;

    double tau(const RegimeParams& base, double delta) const {
        switch (rule) {
            case NormalizerRule::TauN: {
                RegimeParams p = base;
                p.r = request.r;
                return tau_n(p, delta);
            }
            case NormalizerRule::SqrtDelta: return std::sqrt(delta);
            case NormalizerRule::Fixed: return fixed_tau;
        }
        return 1.0;
    }
};

struct HolderSpec {
    std::vector<double> r_values;
    std::size_t replicates = 0;  // 0 -> use the experiment's replicate count
};

struct ExperimentSpec {
    std::string name = "experiment";
    SimConfig sim;  // sim.delta is replaced by each grid value
    std::vector<VariationPlan> variations;
    std::vector<double> delta_grid;
    std::size_t replicates = 1;
    std::string output_dir;
    std::optional<HolderSpec> holder;
    json source = json::object();  // normalized config, hashed into every sidecar

    std::string spec_hash() const { return fnv1a_hex(source.dump()); }

    void validate() const {
        detail::require(!delta_grid.empty(), "ExperimentSpec: delta grid is empty");
        detail::require(replicates >= 1, "ExperimentSpec: replicates M must be >= 1");
        for (std::size_t i = 0; i < delta_grid.size(); ++i) {
            const double d = delta_grid[i];
            detail::require(d > 0.0 && d < sim.horizon, "ExperimentSpec: delta must lie in (0, T)");
            if (i > 0)
                detail::require(d < delta_grid[i - 1], "ExperimentSpec: delta grid must strictly decrease");
            const double n = sim.horizon / d;
            if (std::abs(n - std::round(n)) > 1e-12 * n)
                throw InvalidArgument("ExperimentSpec: delta " + std::to_string(d) +
                                      " does not divide T");
            const double ratio = d / delta_grid.back();
            if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio)
                throw InvalidArgument("ExperimentSpec: every delta must be a multiple of the finest");
        }
        SimConfig probe = sim;
        probe.delta = delta_grid.back();
        probe.validate();
    }
};

namespace detail {

inline Sigma sigma_from_json(const json& j) {
    const auto kind = j.value("kind", std::string("constant"));
    if (kind == "constant") return Sigma::constant(j.value("c", 1.0));
    const auto name = j.value("name", std::string());
    if (kind == "field") {
        if (name == "sin_x")
            return Sigma::deterministic_field(
                [](double, std::span<const double> x) { return std::sin(x[0]); }, "sin(x)");
        if (name == "constant") {
            const double c = j.value("c", 1.0);
            return Sigma::deterministic_field([c](double, std::span<const double>) { return c; },
                                              "field_constant(" + std::to_string(c) + ")");
        }
        if (name == "affine_t") {
            const double a = j.value("a", 1.0);
            const double b = j.value("b", 0.0);
            return Sigma::deterministic_field(
                [a, b](double t, std::span<const double>) { return a + b * t; },
                "affine_t(" + std::to_string(a) + "," + std::to_string(b) + ")");
        }
        throw ConfigError("sigma: unknown field \"" + name + "\" (known: sin_x, constant, affine_t)");
    }
    if (kind == "state") {
        const double a = j.value("a", 1.0);
        const double b = j.value("b", 0.0);
        if (name == "affine")
            return Sigma::state_dependent([a, b](double u) { return a + b * u; },
                                          "affine_u(" + std::to_string(a) + "," + std::to_string(b) + ")");
        if (name == "sin")
            return Sigma::state_dependent([a, b](double u) { return a + b * std::sin(u); },
                                          "sin_u(" + std::to_string(a) + "," + std::to_string(b) + ")");
        throw ConfigError("sigma: unknown state function \"" + name + "\" (known: affine, sin)");
    }
    throw ConfigError("sigma: unknown kind \"" + kind + "\" (known: constant, field, state)");
}

inline VariationPlan plan_from_json(const json& j) {
    VariationPlan plan;
    if (!j.contains("r")) throw ConfigError("variation: missing \"r\"");
    const double r = j.at("r").get<double>();
    if (j.contains("order")) {
        plan.request = VariationRequest::power(r, j.at("order").get<double>());
    } else if (j.contains("f")) {
        const auto f = j.at("f").get<std::string>();
        if (f != "min_sq_1") throw ConfigError("variation: unknown f \"" + f + "\" (known: min_sq_1)");
        plan.request = VariationRequest::scalar(r, [](double x) { return std::min(x * x, 1.0); }, f);
    } else {
        throw ConfigError("variation: need \"order\" or \"f\"");
    }
    const auto& n = j.contains("normalizer") ? j.at("normalizer") : json("tau_n");
    if (n.is_number()) {
        plan.rule = NormalizerRule::Fixed;
        plan.fixed_tau = n.get<double>();
    } else {
        const auto s = n.get<std::string>();
        if (s == "tau_n") plan.rule = NormalizerRule::TauN;
        else if (s == "sqrt_delta") plan.rule = NormalizerRule::SqrtDelta;
        else throw ConfigError("variation: unknown normalizer \"" + s + "\"");
    }
    if (j.contains("label")) {
        plan.label = j.at("label").get<std::string>();
    } else {
        std::ostringstream os;
        os << "r=" << r;
        if (const auto* p = std::get_if<PowerOrder>(&plan.request.kind)) os << ",p=" << p->p;
        else os << ",f=" << j.at("f").get<std::string>();
        if (plan.rule == NormalizerRule::SqrtDelta) os << ",tau=sqrt";
        if (plan.rule == NormalizerRule::Fixed) os << ",tau=" << plan.fixed_tau;
        plan.label = os.str();
    }
    return plan;
}

}  // namespace detail

/// Sum_{k > K} lambda_k^{r - gamma}, bounded from above.
inline double truncation_tail(const DomainSpec& domain, double gamma, double r, std::size_t k) {
    const double beta = r - gamma;
    return detail::tail_majorant(domain, gamma, k, [beta](double l) { return std::pow(l, beta); },
                                 1.0, beta, 1e300);
}

/// Smallest power-of-two K <= cap with tail < 1e-4 K_r Delta for the most demanding r.
inline std::size_t default_truncation(const RegimeParams& base, std::span<const double> r_values,
                                      double delta, std::size_t cap = std::size_t{1} << 16) {
    std::size_t k = 64;
    for (; k < cap; k *= 2) {
        bool ok = true;
        for (double r : r_values) {
            RegimeParams p = base;
            p.r = r;
            if (truncation_tail(base.domain, base.gamma, r, k) >= 1e-4 * k_r(p) * delta) ok = false;
        }
        if (ok) break;
    }
    return std::min(k, cap);
}

/// Parses an experiment config. `seed_override` replaces the "seed" entry.
inline ExperimentSpec experiment_from_json(json j, std::optional<std::uint64_t> seed_override = {}) {
    try {
        ExperimentSpec spec;
        spec.name = j.value("name", std::string("experiment"));
        spec.sim.params.domain =
            j.contains("domain") ? j.at("domain").get<DomainSpec>() : DomainSpec::interval();
        spec.sim.params.gamma = j.value("gamma", 1.0);
        spec.sim.horizon = j.value("horizon", 1.0);
        spec.sim.sigma = detail::sigma_from_json(j.value("sigma", json::object()));
        spec.sim.spatial_grid = j.value("spatial_grid", std::size_t{0});
        if (seed_override) j["seed"] = *seed_override;
        spec.sim.seed = j.value("seed", std::uint64_t{0});
        spec.replicates = j.value("replicates", std::size_t{1});
        spec.output_dir = j.value("output_dir", std::string());

        if (!j.contains("delta_grid")) throw ConfigError("missing \"delta_grid\"");
        const auto& g = j.at("delta_grid");
        if (g.is_object()) {
            const auto levels = g.at("dyadic").get<std::vector<int>>();
            if (levels.size() != 2 || levels[0] > levels[1])
                throw ConfigError("delta_grid.dyadic must be [coarsest_exponent, finest_exponent]");
            for (int e = levels[0]; e <= levels[1]; ++e) spec.delta_grid.push_back(std::ldexp(1.0, -e));
        } else {
            spec.delta_grid = g.get<std::vector<double>>();
        }
        for (const auto& v : j.value("variations", json::array()))
            spec.variations.push_back(detail::plan_from_json(v));
        if (j.contains("holder")) {
            HolderSpec h;
            h.r_values = j.at("holder").at("r").get<std::vector<double>>();
            h.replicates = j.at("holder").value("replicates", std::size_t{0});
            spec.holder = h;
        }
        if (j.contains("truncation")) {
            spec.sim.truncation = j.at("truncation").get<std::size_t>();
        } else {
            std::vector<double> rs;
            for (const auto& v : spec.variations) rs.push_back(v.request.r);
            if (rs.empty()) rs.push_back(-1.0);
            spec.sim.truncation =
                default_truncation(spec.sim.params, rs, spec.delta_grid.empty() ? 1e-3 : spec.delta_grid.back());
            j["truncation"] = spec.sim.truncation;
        }
        spec.sim.delta = spec.delta_grid.empty() ? 0.0 : spec.delta_grid.back();
        spec.source = j;
        spec.validate();
        return spec;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("experiment config: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
}

inline ExperimentSpec load_experiment(const std::filesystem::path& file,
                                      std::optional<std::uint64_t> seed_override = {}) {
    if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
    return experiment_from_json(read_json(file), seed_override);
}

// ---------------------------------------------------------------------------
// Theoretical targets

/// t -> limit of V(t) for a plan, or NaN when no closed form is available.
inline std::function<double(double)> theoretical_limit(const VariationPlan& plan, const SimConfig& sim) {
    const auto nan = [](double) { return std::numeric_limits<double>::quiet_NaN(); };
    RegimeParams params = sim.params;
    params.r = plan.request.r;
    params.validate();
    const Regime regime = params.regime();
    const bool tau_matches =
        plan.rule == NormalizerRule::TauN ||
        (plan.rule == NormalizerRule::SqrtDelta && regime == Regime::Sub);
    if (!tau_matches) return nan;

    // Scalar f, CRITICAL / SUPER, constant sigma c: V_f(t) = f(|c| sqrt(K_r)) t.
    if (const auto* fn = std::get_if<ScalarFunction>(&plan.request.kind)) {
        if (regime == Regime::Sub || sim.sigma.kind != SigmaKind::Constant) return nan;
        const double rate = fn->f(std::abs(sim.sigma.c) * std::sqrt(k_r(params)));
        return [rate](double t) { return rate * t; };
    }
    const auto* order = std::get_if<PowerOrder>(&plan.request.kind);
    if (order == nullptr) return nan;
    const double q = order->p;

    if (regime == Regime::Sub) {
        if (sim.sigma.kind != SigmaKind::Constant) return nan;
        const double half = q / 2.0;
        if (std::abs(half - std::round(half)) > 1e-12 || half < 1.0) return nan;
        const double rate = limit_constant_even_power(params, static_cast<int>(std::round(half)), sim.sigma.c);
        return [rate](double t) { return rate * t; };
    }
    if (sim.sigma.kind == SigmaKind::Constant) {
        const double rate = std::pow(std::abs(sim.sigma.c), q) * std::pow(k_r(params), q / 2.0);
        return [rate](double t) { return rate * t; };
    }
    if (sim.sigma.kind == SigmaKind::DeterministicField && params.d() == 1) {
        const double len = params.domain.side(0);
        const auto rule = quadrature::composite_gauss_legendre(0.0, len, 8);
        auto field = sim.sigma.field;
        auto sigma_sq = [rule, field](double s) {
            return rule.integrate([&](double y) {
                const double v = field(s, std::span<const double>(&y, 1));
                return v * v;
            });
        };
        return limit_process_general_sigma(params, q, sigma_sq);
    }
    return nan;
}

// ---------------------------------------------------------------------------
// Convergence study

struct ConvergenceRow {
    std::string variation;
    double r = 0.0;
    double delta = 0.0;
    double mean_V_at_T = 0.0;
    double std_error = 0.0;
    bool se_available = false;  // false when M = 1
    double theoretical_limit = 0.0;
    double abs_error = 0.0;
    double rel_error = 0.0;
    double sup_error_over_grid = 0.0;  // replicate mean of sup_t |V(t) - target(t)| on the level's own grid
    double sup_error_se = 0.0;
};

struct ConvergenceTable {
    std::string name;
    std::string spec_hash;
    std::size_t truncation = 0;
    std::size_t replicates = 0;
    std::vector<double> truncation_tail;  // per variation, sum_{k>K} lambda_k^{r-gamma}
    std::vector<ConvergenceRow> rows;

    /// Rows of variation `v` ordered from coarse to fine.
    std::vector<ConvergenceRow> rows_for(const std::string& v) const {
        std::vector<ConvergenceRow> out;
        for (const auto& row : rows)
            if (row.variation == v) out.push_back(row);
        return out;
    }
};

namespace detail {

// Per-replicate outputs, indexed [level * plans + plan].
struct ReplicateOutcome {
    std::vector<double> v_at_T;
    std::vector<double> sup_dev;
};

// Feeds the rows a(t_i), i = 1..N of one replicate at the finest step to `sink`.
template <class Sink>
void for_each_row(const SimConfig& sim, std::span<const double> lambda, Sink&& sink) {
    const std::size_t n = sim.steps();
    if (sim.sigma.kind == SigmaKind::Constant) {
        AdditiveStepper stepper(lambda, sim.params.gamma, sim.delta, sim.sigma.c, sim.seed);
        for (std::size_t i = 1; i <= n; ++i) {
            stepper.step();
            sink(i, stepper.state());
        }
        return;
    }
    const auto path = simulate_field_sigma(sim);
    for (std::size_t i = 1; i <= n; ++i) sink(i, path.row(i));
}

inline ReplicateOutcome run_replicate(const ExperimentSpec& spec, std::span<const double> lambda,
                                      const std::vector<std::vector<double>>& weights,
                                      const std::vector<std::size_t>& weight_of_plan,
                                      const std::vector<std::function<double(double)>>& targets,
                                      std::uint64_t seed) {
    const std::size_t levels = spec.delta_grid.size();
    const std::size_t plans = spec.variations.size();
    const std::size_t modes = lambda.size();
    const double finest = spec.delta_grid.back();
    SimConfig sim = spec.sim;
    sim.delta = finest;
    sim.seed = seed;

    std::vector<std::size_t> stride(levels);
    std::vector<std::vector<double>> tau(levels, std::vector<double>(plans));
    for (std::size_t l = 0; l < levels; ++l) {
        stride[l] = static_cast<std::size_t>(std::llround(spec.delta_grid[l] / finest));
        for (std::size_t v = 0; v < plans; ++v)
            tau[l][v] = spec.variations[v].tau(spec.sim.params, spec.delta_grid[l]);
    }

    std::vector<std::vector<double>> prev(levels, std::vector<double>(modes, 0.0));
    std::vector<double> acc(levels * plans, 0.0);
    ReplicateOutcome out;
    out.sup_dev.assign(levels * plans, 0.0);
    std::vector<double> sq(weights.size());
    std::vector<double> incr(modes);

    for_each_row(sim, lambda, [&](std::size_t i, std::span<const double> row) {
        for (std::size_t l = 0; l < levels; ++l) {
            if (i % stride[l] != 0) continue;
            const double dl = spec.delta_grid[l];
            for (std::size_t w = 0; w < weights.size(); ++w)
                sq[w] = weighted_diff_sq(row, prev[l], weights[w]);
            for (std::size_t v = 0; v < plans; ++v) {
                const auto& req = spec.variations[v].request;
                double term;
                if (const auto* p = std::get_if<PowerOrder>(&req.kind)) {
                    term = std::pow(std::sqrt(sq[weight_of_plan[v]]) / tau[l][v], p->p);
                } else if (const auto* f = std::get_if<ScalarFunction>(&req.kind)) {
                    term = f->f(std::sqrt(sq[weight_of_plan[v]]) / tau[l][v]);
                } else {
                    const auto& g = std::get<GeneralFunctional>(req.kind);
                    for (std::size_t k = 0; k < modes; ++k) incr[k] = (row[k] - prev[l][k]) / tau[l][v];
                    term = g.F(CoefficientView{incr, lambda, req.r});
                }
                if (!std::isfinite(term))
                    throw NumericalError("non-finite variation term at step " + std::to_string(i));
                acc[l * plans + v] += dl * term;
            }
            std::copy(row.begin(), row.end(), prev[l].begin());
            // sup over this level's own time points
            const double t = static_cast<double>(i) * finest;
            for (std::size_t v = 0; v < plans; ++v) {
                const double dev = std::abs(acc[l * plans + v] - targets[v](t));
                auto& s = out.sup_dev[l * plans + v];
                s = std::isnan(dev) ? dev : std::max(s, dev);
            }
        }
    });
    out.v_at_T = std::move(acc);
    return out;
}

}  // namespace detail

struct RunOptions {
    std::size_t threads = 0;  // 0 -> SPDE_PV_THREADS or hardware concurrency
    bool write_outputs = true;
};

inline void write_convergence_outputs(const ExperimentSpec& spec, const ConvergenceTable& table);

/// Simulates M replicates once at the finest step; coarser dyadic levels are
/// exact sub-samples of the same paths (the OU transition composes).
inline ConvergenceTable run_convergence(const ExperimentSpec& spec, const RunOptions& opts = {}) {
    spec.validate();
    detail::require(!spec.variations.empty(), "run_convergence: no variations requested");
    const std::size_t levels = spec.delta_grid.size();
    const std::size_t plans = spec.variations.size();
    const auto lambda = eigenvalues(spec.sim.params.domain, spec.sim.truncation);

    // One weight vector lambda^r per distinct r.
    std::vector<double> rs;
    std::vector<std::size_t> weight_of_plan(plans);
    std::vector<std::vector<double>> weights;
    for (std::size_t v = 0; v < plans; ++v) {
        const double r = spec.variations[v].request.r;
        auto it = std::find(rs.begin(), rs.end(), r);
        if (it == rs.end()) {
            rs.push_back(r);
            weights.push_back(detail::hr_weights(lambda, r));
            it = rs.end() - 1;
        }
        weight_of_plan[v] = static_cast<std::size_t>(it - rs.begin());
        if (std::holds_alternative<GeneralFunctional>(spec.variations[v].request.kind) &&
            classify_regime(r, spec.sim.params.d()) != Regime::Sub)
            throw RegimeError("run_convergence: general F-variations require r < -d/2");
    }
    std::vector<std::function<double(double)>> targets;
    for (const auto& v : spec.variations) targets.push_back(theoretical_limit(v, spec.sim));

    std::vector<detail::ReplicateOutcome> outcomes(spec.replicates);
    const auto seed_of = [&](std::size_t j) { return derive_seed(spec.sim.seed, j); };
    parallel_for(
        spec.replicates, resolve_threads(opts.threads),
        [&](std::size_t j) {
            outcomes[j] = detail::run_replicate(spec, lambda, weights, weight_of_plan, targets, seed_of(j));
        },
        [&](std::size_t j) {
            return "experiment " + spec.name + ": replicate " + std::to_string(j) + " (seed " +
                   std::to_string(seed_of(j)) + ")";
        });

    ConvergenceTable table;
    table.name = spec.name;
    table.spec_hash = spec.spec_hash();
    table.truncation = spec.sim.truncation;
    table.replicates = spec.replicates;
    for (const auto& v : spec.variations)
        table.truncation_tail.push_back(
            truncation_tail(spec.sim.params.domain, spec.sim.params.gamma, v.request.r, spec.sim.truncation));

    std::vector<double> vals(spec.replicates);
    std::vector<double> sups(spec.replicates);
    for (std::size_t v = 0; v < plans; ++v) {
        const double target = targets[v](spec.sim.horizon);
        for (std::size_t l = 0; l < levels; ++l) {
            for (std::size_t j = 0; j < spec.replicates; ++j) {
                vals[j] = outcomes[j].v_at_T[l * plans + v];
                sups[j] = outcomes[j].sup_dev[l * plans + v];
            }
            const auto s = summarize(vals);
            const auto sup = summarize(sups);
            ConvergenceRow row;
            row.variation = spec.variations[v].label;
            row.r = spec.variations[v].request.r;
            row.delta = spec.delta_grid[l];
            row.mean_V_at_T = s.mean;
            row.std_error = s.std_error;
            row.se_available = s.se_available;
            row.theoretical_limit = target;
            row.abs_error = std::abs(s.mean - target);
            row.rel_error = row.abs_error / std::abs(target);
            row.sup_error_over_grid = sup.mean;
            row.sup_error_se = sup.std_error;
            table.rows.push_back(row);
        }
    }
    if (opts.write_outputs && !spec.output_dir.empty()) write_convergence_outputs(spec, table);
    return table;
}

inline json convergence_json(const ConvergenceTable& t) {
    json rows = json::array();
    for (const auto& r : t.rows)
        rows.push_back({{"variation", r.variation},
                        {"r", r.r},
                        {"delta", r.delta},
                        {"mean_V_at_T", r.mean_V_at_T},
                        {"std_error", number_or_null(r.std_error)},
                        {"se_available", r.se_available},
                        {"theoretical_limit", number_or_null(r.theoretical_limit)},
                        {"abs_error", number_or_null(r.abs_error)},
                        {"rel_error", number_or_null(r.rel_error)},
                        {"sup_error_over_grid", number_or_null(r.sup_error_over_grid)},
                        {"sup_error_se", number_or_null(r.sup_error_se)}});
    return json{{"name", t.name},
                {"truncation", t.truncation},
                {"replicates", t.replicates},
                {"truncation_tail", t.truncation_tail},
                {"rows", rows}};
}

inline void write_convergence_csv(const ConvergenceTable& t, std::ostream& out) {
    out << "variation,r,delta,mean_V_at_T,std_error,se_available,theoretical_limit,abs_error,"
           "rel_error,sup_error_over_grid,sup_error_se\n"
        << std::setprecision(17);
    for (const auto& r : t.rows)
        out << '"' << r.variation << "\"," << r.r << ',' << r.delta << ',' << r.mean_V_at_T << ','
            << r.std_error << ',' << (r.se_available ? 1 : 0) << ',' << r.theoretical_limit << ','
            << r.abs_error << ',' << r.rel_error << ',' << r.sup_error_over_grid << ','
            << r.sup_error_se << '\n';
}

inline void write_convergence_outputs(const ExperimentSpec& spec, const ConvergenceTable& table) {
    const std::filesystem::path dir(spec.output_dir);
    std::filesystem::create_directories(dir);
    const auto csv = dir / (spec.name + "_convergence.csv");
    {
        std::ofstream out(csv);
        if (!out) throw Error("cannot open " + csv.string() + " for writing");
        write_convergence_csv(table, out);
    }
    json side = provenance_stamp(table.spec_hash);
    side["spec"] = spec.source;
    side["table"] = convergence_json(table);
    write_json(side, csv.string() + ".json");
}

// ---------------------------------------------------------------------------
// Exact two-point Monte Carlo

/// Samples of ||u(t) - u(t - Delta)||^2_{H_r} for additive noise sigma = c, drawn
/// exactly (no time stepping); sample j uses the stream derive_seed(seed, j).
inline std::vector<double> sample_increment_sq_norms(const RegimeParams& params, double c,
                                                     std::size_t truncation, double delta, double t,
                                                     std::size_t samples, std::uint64_t seed,
                                                     std::size_t threads = 0) {
    params.validate();
    const auto lambda = eigenvalues(params.domain, truncation);
    const auto w = detail::hr_weights(lambda, params.r);
    std::vector<double> out(samples);
    const std::size_t n_threads = resolve_threads(threads);
    const std::size_t chunk = 64;
    const std::size_t chunks = (samples + chunk - 1) / chunk;
    parallel_for(chunks, n_threads, [&](std::size_t ch) {
        std::vector<double> incr(truncation);
        std::vector<double> end(truncation);
        for (std::size_t j = ch * chunk; j < std::min(samples, (ch + 1) * chunk); ++j) {
            NormalStream normal(derive_seed(seed, j));
            sample_two_point(lambda, params.gamma, c, t, delta, normal, incr, end);
            out[j] = detail::weighted_sq(incr, w);
        }
    });
    return out;
}

// ---------------------------------------------------------------------------
// Hoelder regression

struct HolderEstimate {
    double r = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    double ci_low = 0.0;   // 95% OLS interval
    double ci_high = 0.0;
    double alpha_theory = 0.0;
    std::vector<double> deltas;
    std::vector<double> mean_norms;  // E ||u(t) - u(t - Delta)||_{H_r}
    std::vector<double> std_errors;
};

/// Regresses log E||u(t) - u(t - Delta)||_{H_r} on log Delta at t = T/2.
inline HolderEstimate estimate_holder(const ExperimentSpec& spec, double r, const RunOptions& opts = {}) {
    spec.validate();
    if (spec.sim.sigma.kind != SigmaKind::Constant)
        throw InvalidArgument("estimate_holder: requires additive (constant sigma) noise");
    const std::size_t n = spec.delta_grid.size();
    if (n < 4) throw InvalidArgument("estimate_holder: need at least 4 grid points");
    RegimeParams params = spec.sim.params;
    params.r = r;
    params.validate();
    const std::size_t m = spec.holder && spec.holder->replicates > 0 ? spec.holder->replicates
                                                                     : spec.replicates;
    const double t = spec.sim.horizon / 2.0;

    HolderEstimate est;
    est.r = r;
    est.alpha_theory = holder_exponent(params);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t l = 0; l < n; ++l) {
        const double d = spec.delta_grid[l];
        auto sq = sample_increment_sq_norms(params, spec.sim.sigma.c, spec.sim.truncation, d, t, m,
                                            derive_seed(spec.sim.seed, 0x401de5ULL, l), opts.threads);
        for (double& v : sq) v = std::sqrt(v);
        const auto s = summarize(sq);
        est.deltas.push_back(d);
        est.mean_norms.push_back(s.mean);
        est.std_errors.push_back(s.std_error);
        x[l] = std::log(d);
        y[l] = std::log(s.mean);
    }
    const double nn = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        mx += x[l];
        my += y[l];
    }
    mx /= nn;
    my /= nn;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        sxx += (x[l] - mx) * (x[l] - mx);
        sxy += (x[l] - mx) * (y[l] - my);
    }
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    double rss = 0.0;
    for (std::size_t l = 0; l < n; ++l) {
        const double e = y[l] - est.intercept - est.slope * x[l];
        rss += e * e;
    }
    const double se = std::sqrt(rss / (nn - 2.0) / sxx);
    const boost::math::students_t dist(nn - 2.0);
    const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
    est.ci_low = est.slope - q * se;
    est.ci_high = est.slope + q * se;
    return est;
}

inline json holder_json(const HolderEstimate& h) {
    return json{{"r", h.r},
                {"slope", h.slope},
                {"intercept", h.intercept},
                {"ci95", {h.ci_low, h.ci_high}},
                {"alpha_theory", h.alpha_theory},
                {"deltas", h.deltas},
                {"mean_norms", h.mean_norms},
                {"std_errors", h.std_errors}};
}

// ---------------------------------------------------------------------------
// Constants

inline LimitReport report_constants(const RegimeParams& params, std::span<const int> orders,
                                    double sigma = 1.0) {
    return make_limit_report(params, orders, sigma);
}

}  // namespace spdepv
