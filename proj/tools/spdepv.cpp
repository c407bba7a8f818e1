// spdepv: command-line front end.
//
// Exit codes: 0 success, 1 validation or run failure, 2 configuration or usage error.

#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spdepv/spdepv.hpp"

namespace fs = std::filesystem;
using spdepv::json;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t threads = 0;
};

fs::path output_dir(const Globals& g, const std::string& fallback) {
    fs::path dir = !g.out.empty() ? fs::path(g.out) : fs::path(fallback.empty() ? "." : fallback);
    fs::create_directories(dir);
    return dir;
}

spdepv::ExperimentSpec require_experiment(const Globals& g) {
    if (g.config.empty()) throw spdepv::ConfigError("--config <json> is required");
    auto spec = spdepv::load_experiment(g.config, g.seed);
    if (!g.out.empty()) spec.output_dir = g.out;
    return spec;
}

int cmd_constants(const Globals& g, double r, double gamma, std::vector<double> sides,
                  std::vector<int> orders, double sigma) {
    if (!g.config.empty()) {
        const json j = spdepv::read_json(g.config);
        try {
            r = j.value("r", r);
            gamma = j.value("gamma", gamma);
            if (j.contains("domain")) sides = j.at("domain").at("sides").get<std::vector<double>>();
            orders = j.value("orders", orders);
            sigma = j.value("sigma_constant", sigma);
        } catch (const json::exception& e) {
            throw spdepv::ConfigError(std::string("constants config: ") + e.what());
        }
    }
    spdepv::RegimeParams params{r, gamma, spdepv::DomainSpec::box(sides)};
    json out = spdepv::report_constants(params, orders, sigma);
    json stamped = spdepv::provenance_stamp(spdepv::fnv1a_hex(json(params).dump()));
    stamped["report"] = out;
    std::cout << stamped.dump(2) << '\n';
    if (!g.out.empty()) spdepv::write_json(stamped, output_dir(g, "") / "constants.json");
    return 0;
}

int cmd_simulate(const Globals& g) {
    auto spec = require_experiment(g);
    const auto dir = output_dir(g, spec.output_dir);
    auto sim = spec.sim;
    sim.delta = spec.delta_grid.back();
    const auto path = spdepv::simulate(sim);
    const auto file = dir / (spec.name + "_path.bin");
    spdepv::save_path(path, file, spec.spec_hash());
    std::set<double> rs;
    for (const auto& v : spec.variations) rs.insert(v.request.r);
    if (rs.empty()) rs.insert(0.0);
    for (double r : rs) {
        std::ostringstream name;
        name << spec.name << "_norm_r" << r << ".csv";
        spdepv::write_norm_csv(path, r, dir / name.str());
    }
    std::cout << "wrote " << file.string() << " (" << path.rows() << " x " << path.modes() << ")\n";
    return 0;
}

int cmd_variation(const Globals& g) {
    auto spec = require_experiment(g);
    const auto dir = output_dir(g, spec.output_dir);
    auto sim = spec.sim;
    sim.delta = spec.delta_grid.back();
    const auto path = spdepv::simulate(sim);
    json summary = spdepv::provenance_stamp(spec.spec_hash());
    summary["delta"] = sim.delta;
    summary["variations"] = json::array();
    std::cout << std::setprecision(8);
    for (std::size_t v = 0; v < spec.variations.size(); ++v) {
        auto req = spec.variations[v].request;
        req.tau = spec.variations[v].tau(sim.params, sim.delta);
        const auto series = spdepv::variation(path, req);
        const auto file = dir / (spec.name + "_variation_" + std::to_string(v) + ".csv");
        spdepv::write_csv(series, file.string());
        const double target = spdepv::theoretical_limit(spec.variations[v], sim)(sim.horizon);
        const double value = series.values.back();
        std::cout << spec.variations[v].label << ": V(T) = " << value << ", limit = " << target << '\n';
        summary["variations"].push_back({{"label", spec.variations[v].label},
                                         {"file", file.filename().string()},
                                         {"value_at_T", value},
                                         {"theoretical_limit", spdepv::number_or_null(target)}});
    }
    spdepv::write_json(summary, dir / (spec.name + "_variation.json"));
    return 0;
}

int cmd_converge(const Globals& g) {
    const auto spec = require_experiment(g);
    const auto table = spdepv::run_convergence(spec, {g.threads, true});
    std::cout << std::left << std::setw(24) << "variation" << std::right << std::setw(12) << "delta"
              << std::setw(14) << "mean_V(T)" << std::setw(12) << "SE" << std::setw(12) << "limit"
              << std::setw(12) << "abs_err" << std::setw(12) << "sup_err" << '\n';
    std::cout << std::setprecision(6);
    for (const auto& r : table.rows) {
        std::cout << std::left << std::setw(24) << r.variation << std::right << std::setw(12) << r.delta
                  << std::setw(14) << r.mean_V_at_T << std::setw(12);
        if (r.se_available) std::cout << r.std_error;
        else std::cout << "n/a(M=1)";
        std::cout << std::setw(12) << r.theoretical_limit << std::setw(12) << r.abs_error << std::setw(12)
                  << r.sup_error_over_grid << '\n';
    }
    if (!spec.output_dir.empty())
        std::cout << "wrote " << (fs::path(spec.output_dir) / (spec.name + "_convergence.csv")).string() << '\n';
    return 0;
}

int cmd_holder(const Globals& g, std::vector<double> rs) {
    const auto spec = require_experiment(g);
    if (rs.empty() && spec.holder) rs = spec.holder->r_values;
    if (rs.empty()) throw spdepv::ConfigError("holder: no r values (use --r or \"holder\": {\"r\": [...]})");
    json out = spdepv::provenance_stamp(spec.spec_hash());
    out["estimates"] = json::array();
    std::cout << std::setprecision(5);
    for (double r : rs) {
        const auto h = spdepv::estimate_holder(spec, r, {g.threads, false});
        std::cout << "r = " << r << ": slope " << h.slope << "  95% CI [" << h.ci_low << ", " << h.ci_high
                  << "]  alpha(r) = " << h.alpha_theory << '\n';
        out["estimates"].push_back(spdepv::holder_json(h));
    }
    if (!spec.output_dir.empty())
        spdepv::write_json(out, output_dir(g, spec.output_dir) / (spec.name + "_holder.json"));
    return 0;
}

int cmd_validate(const Globals& g) {
    const json table = g.config.empty() ? spdepv::default_constant_table() : [&] {
        if (!fs::exists(g.config)) throw spdepv::ConfigError("config file not found: " + g.config);
        return spdepv::read_json(g.config);
    }();
    const auto rep = spdepv::run_validation(table, g.seed.value_or(1));
    for (const auto& c : rep.checks)
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  (" << c.detail << ")\n";
    if (!g.out.empty()) spdepv::write_json(spdepv::validation_json(rep), output_dir(g, "") / "validation.json");
    return rep.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Power variations of fractional stochastic heat equations"};
    app.set_version_flag("--version", std::string(spdepv::version()));
    app.require_subcommand(1);

    Globals g;
    app.add_option("--config", g.config, "JSON config file");
    app.add_option("--seed", g.seed, "master seed (overrides the config)");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--threads", g.threads, "worker threads (default: SPDE_PV_THREADS or all cores)");

    double r = -1.0, gamma = 1.0, sigma = 1.0;
    std::vector<double> sides{std::numbers::pi};
    std::vector<int> orders{1, 2};
    auto* constants = app.add_subcommand("constants", "print tau exponent, K_r, K(r,p), alpha(r) as JSON");
    constants->add_option("--r", r, "smoothness index r");
    constants->add_option("--gamma", gamma, "fractional power gamma");
    constants->add_option("--sides", sides, "box side lengths");
    constants->add_option("--orders", orders, "orders p (variation order 2p)");
    constants->add_option("--sigma", sigma, "constant noise coefficient");

    auto* simulate = app.add_subcommand("simulate", "simulate one path at the finest step and save it");
    auto* variation = app.add_subcommand("variation", "variation series of one simulated path");
    auto* converge = app.add_subcommand("converge", "Monte Carlo convergence table over the step grid");
    std::vector<double> holder_r;
    auto* holder = app.add_subcommand("holder", "Hoelder exponent regression");
    holder->add_option("--r", holder_r, "smoothness indices");
    auto* validate = app.add_subcommand("validate", "run the oracle suite against a constant table");

    // Global flags are accepted after the subcommand as well.
    for (auto* sub : {constants, simulate, variation, converge, holder, validate}) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    try {
        if (*constants) return cmd_constants(g, r, gamma, sides, orders, sigma);
        if (*simulate) return cmd_simulate(g);
        if (*variation) return cmd_variation(g);
        if (*converge) return cmd_converge(g);
        if (*holder) return cmd_holder(g, holder_r);
        if (*validate) return cmd_validate(g);
    } catch (const spdepv::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const spdepv::RegimeError& e) {
        std::cerr << "regime error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
