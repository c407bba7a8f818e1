// Acceptance suite. One PASS/FAIL line per criterion; usage: acceptance <group>
// with group in {variations, holder, increment, combinatorics, mu, consistency, all}.

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <boost/math/special_functions/zeta.hpp>

#include "spdepv/spdepv.hpp"

#ifndef SPDEPV_CONFIG_DIR
#define SPDEPV_CONFIG_DIR "configs"
#endif

using namespace spdepv;

namespace {

int failures = 0;

void report(bool ok, const std::string& id, const std::string& what) {
    std::printf("%s [%s] %s\n", ok ? "PASS" : "FAIL", id.c_str(), what.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c, d);
    return buf;
}

ExperimentSpec acceptance_spec() {
    return load_experiment(std::string(SPDEPV_CONFIG_DIR) + "/acceptance.json");
}

void print_table(const ConvergenceTable& t) {
    std::printf("%-22s %12s %12s %10s %10s %9s %9s\n", "variation", "delta", "mean_V(T)", "SE", "limit", "rel_err",
                "sup_err");
    for (const auto& r : t.rows)
        std::printf("%-22s %12.4g %12.6f %10.2e %10.6f %9.4f %9.4f\n", r.variation.c_str(), r.delta, r.mean_V_at_T,
                    r.std_error, r.theoretical_limit, r.rel_error, r.sup_error_over_grid);
}

// Criteria 1-4 and 10 share one run: K = 4096, Delta = 2^-4..2^-12, T = 1, M = 200.
void group_variations() {
    const auto spec = acceptance_spec();
    const auto table = run_convergence(spec, {0, false});
    print_table(table);

    const auto quad = table.rows_for("sub_quadratic");
    const auto quart = table.rows_for("sub_quartic");
    const auto super4 = table.rows_for("super_exact_order4");
    const auto crit = table.rows_for("critical_quadratic");
    const auto sqrt_norm = table.rows_for("super_quadratic_sqrt");

    const auto& q = quad.back();
    report(q.rel_error <= 0.025, "1",
           fmt("quadratic variation, r=-1: mean V(1) = %.5f vs zeta(2) = %.5f, rel err %.4f (tol 0.025)",
               q.mean_V_at_T, q.theoretical_limit, q.rel_error));
    report(q.sup_error_over_grid < 0.06, "1",
           fmt("quadratic variation, r=-1: E sup_t |V(t) - zeta(2) t| = %.4f (tol < 0.06)", q.sup_error_over_grid));
    const auto& f = quart.back();
    report(f.rel_error <= 0.06, "2",
           fmt("fourth-order variation, r=-1: mean V(1) = %.5f vs 4(x1^2+x2) = %.5f, rel err %.4f (tol 0.06)",
               f.mean_V_at_T, f.theoretical_limit, f.rel_error));
    const auto& s = super4.back();
    report(s.rel_error <= 0.06, "3",
           fmt("exact-variation order 4, r=0: mean V(1) = %.5f vs K_0^2 = pi, rel err %.4f (tol 0.06)", s.mean_V_at_T,
               s.rel_error));
    const auto& c = crit.back();
    report(c.rel_error <= 0.10, "4",
           fmt("critical r=-1/2, order 2: mean V(1) = %.5f vs 1/2, rel err %.4f (tol 0.10)", c.mean_V_at_T,
               c.rel_error));

    auto monotone_run = [](const std::vector<ConvergenceRow>& rows) {
        std::size_t best = 1, run = 1;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            run = rows[i].abs_error < rows[i - 1].abs_error ? run + 1 : 1;
            best = std::max(best, run);
        }
        return best;
    };
    for (const auto* rows : {&quad, &quart, &super4, &crit}) {
        std::string errs;
        for (const auto& r : *rows) errs += fmt(" %.4f", r.abs_error);
        const std::size_t run = monotone_run(*rows);
        report(run >= 3, "10",
               rows->front().variation + ": longest run of decreasing abs error = " + std::to_string(run) +
                   " levels (need >= 3); errors coarse->fine:" + errs);
    }

    bool diverges = true;
    std::string ratios;
    for (std::size_t i = 0; i + 2 < sqrt_norm.size(); ++i) {
        const double ratio = sqrt_norm[i + 2].mean_V_at_T / sqrt_norm[i].mean_V_at_T;
        ratios += fmt(" %.3f", ratio);
        diverges = diverges && ratio >= 1.8;
    }
    report(diverges, "phase",
           "r=0 with tau=sqrt(Delta): V(Delta/4)/V(Delta) >= 1.8 on every grid pair; ratios:" + ratios);
}

// Criterion 5: OLS slope of log E||u(t) - u(t - Delta)||_{H_r} against log Delta at t = 1/2.
void group_holder() {
    const auto spec = acceptance_spec();
    const std::vector<double> rs{-1.0, 0.0, 0.25};
    for (double r : rs) {
        const auto h = estimate_holder(spec, r, {0, false});
        report(std::abs(h.slope - h.alpha_theory) <= 0.03, "5",
               fmt("Hoelder slope r=%.2f: %.4f vs alpha(r) = %.4f (tol 0.03), 95%% CI [%.4f, ", r, h.slope,
                   h.alpha_theory, h.ci_low) +
                   fmt("%.4f]", h.ci_high));
    }
}

// Criterion 6: Monte Carlo E||Delta u||^2 vs the series, and the normalized limit.
void group_increment() {
    std::mt19937_64 rng(606);
    std::uniform_real_distribution<double> ur(-2.0, 0.45);
    std::uniform_int_distribution<int> uj(6, 12);
    const std::size_t k = 1024, samples = 10000;
    for (int trial = 0; trial < 10; ++trial) {
        const double r = ur(rng);
        const double delta = std::ldexp(1.0, -uj(rng));
        const auto steps = static_cast<int>(std::llround(1.0 / delta));
        const int i = std::uniform_int_distribution<int>(1, steps)(rng);
        const double t = i * delta;
        const RegimeParams p{r, 1.0, DomainSpec::interval()};
        const auto sq = sample_increment_sq_norms(p, 1.0, k, delta, t, samples, derive_seed(6, trial));
        const auto s = summarize(sq);
        const double series = increment_variance(p, delta, t, k).value;
        report(std::abs(s.mean - series) <= 3.0 * s.std_error, "6",
               fmt("E||incr||^2 at r=%.3f, Delta=%.3g, t_i=%.4f: MC %.6g", r, delta, t, s.mean) +
                   fmt(" vs series %.6g, |diff|/SE = %.2f (tol 3)", series, std::abs(s.mean - series) / s.std_error));
    }
    const double delta = std::ldexp(1.0, -14);
    for (double r : {-1.0, 0.0, 0.25}) {
        const RegimeParams p{r, 1.0, DomainSpec::interval()};
        const double tau = tau_n(p, delta);
        const auto v = increment_variance(p, delta, 0.5, std::size_t{1} << 22);
        const double ratio = v.value / (tau * tau * k_r(p));
        report(std::abs(ratio - 1.0) <= 0.01, "6",
               fmt("increment_variance/tau^2 at Delta=2^-14, t=1/2, r=%.2f: ratio to K_r = %.5f (tol 0.01)", r, ratio));
    }
}

// Criterion 7: combinatorial identities against independent oracles, p <= 6.
void group_combinatorics() {
    std::mt19937_64 rng(707);
    double e_perm = 0.0, e_det = 0.0, e_wick = 0.0, e_bell = 0.0;
    for (int rep = 0; rep < 5; ++rep)
        for (std::size_t p = 1; p <= 6; ++p) {
            const auto a = oracle::random_symmetric(p, rng);
            for (double alpha : {-1.0, -0.5, 0.5, 1.0, 2.0})
                e_perm = std::max(e_perm, std::abs(alpha_permanent(SymMatrix(a), alpha) -
                                                   oracle::permanent_bruteforce(a, alpha)));
            const double sign = p % 2 == 0 ? 1.0 : -1.0;
            e_det = std::max(e_det, std::abs(alpha_permanent(SymMatrix(a), -1.0) - sign * a.determinant()));
            const auto c = oracle::random_covariance(p, rng);
            e_wick = std::max(e_wick, std::abs(gaussian_even_moment(SymMatrix(c)) - oracle::gaussian_moment_wick(c)));
            std::uniform_real_distribution<double> u(-2.0, 2.0);
            std::vector<double> x(p);
            for (double& v : x) v = u(rng);
            e_bell = std::max(e_bell, std::abs(complete_bell(x) - oracle::bell_by_partitions(x)));
        }
    report(e_perm <= 1e-10, "7", fmt("per_alpha (Heap) vs lexicographic Sym_p enumeration: max err %.2e (tol 1e-10)", e_perm));
    report(e_det <= 1e-10, "7", fmt("per_{-1} = (-1)^p det: max err %.2e (tol 1e-10)", e_det));
    report(e_wick <= 1e-10, "7", fmt("Gaussian even moment vs Wick pairings: max err %.2e (tol 1e-10)", e_wick));
    report(e_bell <= 1e-10, "7", fmt("complete Bell recurrence vs set partitions: max err %.2e (tol 1e-10)", e_bell));
}

// Criterion 8: mu_{r,F} sampler with 10^5 samples.
void group_mu() {
    const RegimeParams p{-1.0, 1.0, DomainSpec::interval()};
    const double z2 = boost::math::zeta(2.0), z4 = boost::math::zeta(4.0);
    const double target4 = 4.0 * (z2 * z2 / 4.0 + z4 / 2.0);
    const auto e2 = mu_rF_estimate(functionals::hr_norm_power(2.0), Weight::constant(1.0), p, 2000, 100000, 801);
    report(std::abs(e2.mean - z2) <= 3.0 * e2.std_error, "8",
           fmt("mu_{-1,||.||^2} = %.5f +- %.5f vs zeta(2) = %.5f (tol 3 SE)", e2.mean, e2.std_error, z2));
    const auto e4 = mu_rF_estimate(functionals::hr_norm_power(4.0), Weight::constant(1.0), p, 2000, 100000, 802);
    report(std::abs(e4.mean - target4) <= 3.0 * e4.std_error, "8",
           fmt("mu_{-1,||.||^4} = %.5f +- %.5f vs 4(x1^2+x2) = %.5f (tol 3 SE)", e4.mean, e4.std_error, target4));
}

// Criterion 9: general SUPER-regime K_r vs the interval closed form, 20 random r.
void group_consistency() {
    std::mt19937_64 rng(909);
    std::uniform_real_distribution<double> u(-0.5, 0.5);
    double worst = 0.0;
    for (int i = 0; i < 20;) {
        const double r = u(rng);
        if (r <= -0.5) continue;
        ++i;
        const double lib = k_r({r, 1.0, DomainSpec::interval()});
        worst = std::max(worst, std::abs(lib - oracle::interval_super_constant(r)));
    }
    report(worst <= 1e-10, "9", fmt("K_r vs Gamma(r+1/2)/(2(1/2-r)) for 20 random r: max err %.2e (tol 1e-10)", worst));
}

}  // namespace

int main(int argc, char** argv) {
    const std::string group = argc > 1 ? argv[1] : "all";
    try {
        if (group == "variations" || group == "all") group_variations();
        if (group == "holder" || group == "all") group_holder();
        if (group == "increment" || group == "all") group_increment();
        if (group == "combinatorics" || group == "all") group_combinatorics();
        if (group == "mu" || group == "all") group_mu();
        if (group == "consistency" || group == "all") group_consistency();
    } catch (const std::exception& e) {
        std::printf("FAIL [%s] aborted: %s\n", group.c_str(), e.what());
        return 1;
    }
    return failures == 0 ? 0 : 1;
}
