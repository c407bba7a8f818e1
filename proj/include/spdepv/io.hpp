#pragma once

// JSON views of the library types, binary path files with JSON sidecars,
// CSV exports and the version / hash stamps carried by every output.

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "spdepv/error.hpp"
#include "spdepv/limits.hpp"
#include "spdepv/simulator.hpp"
#include "spdepv/spectrum.hpp"

#ifndef SPDEPV_VERSION
#define SPDEPV_VERSION "0.1.0"
#endif

namespace spdepv {

using json = nlohmann::json;

inline const char* version() noexcept { return SPDEPV_VERSION; }

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

/// Non-finite doubles become null.
inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline void to_json(json& j, const DomainSpec& d) {
    j = json{{"dim", d.dim()}, {"sides", std::vector<double>(d.sides().begin(), d.sides().end())}};
}

inline void from_json(const json& j, DomainSpec& d) {
    if (!j.contains("sides")) throw ConfigError("domain: missing \"sides\"");
    auto sides = j.at("sides").get<std::vector<double>>();
    if (j.contains("dim") && j.at("dim").get<std::size_t>() != sides.size())
        throw ConfigError("domain: \"dim\" does not match the number of sides");
    d = DomainSpec::box(std::move(sides));
}

inline void to_json(json& j, const RegimeParams& p) {
    j = json{{"r", p.r}, {"gamma", p.gamma}, {"domain", p.domain}};
}

inline void to_json(json& j, const ZetaValue& z) {
    j = json{{"z", z.z},
             {"value", z.value},
             {"truncation_index", z.truncation_index},
             {"tail_bound", z.tail_bound}};
}

inline void to_json(json& j, const LimitReport& rep) {
    json orders = json::object();
    for (const auto& [p, v] : rep.constants_by_order) orders[std::to_string(p)] = v;
    j = json{{"params", rep.params},
             {"regime", to_string(rep.regime)},
             {"tau_exponent", {{"delta_power", rep.tau.delta_power}, {"log_power", rep.tau.log_power}}},
             {"K_r", rep.k_r},
             {"K_r_p", orders},
             {"holder_alpha", rep.holder_alpha},
             {"sigma", rep.sigma},
             {"zeta_values", rep.zeta_values_used}};
    if (rep.exact_variation_order) j["exact_variation_order"] = *rep.exact_variation_order;
}

inline void to_json(json& j, const SimConfig& c) {
    j = json{{"domain", c.params.domain},
             {"gamma", c.params.gamma},
             {"truncation", c.truncation},
             {"delta", c.delta},
             {"horizon", c.horizon},
             {"sigma", {{"kind", to_string(c.sigma.kind)}, {"c", c.sigma.c}, {"label", c.sigma.label}}},
             {"spatial_grid", c.spatial_grid},
             {"seed", c.seed}};
}

/// Restores everything but the sigma callables, which are not serializable.
inline SimConfig sim_config_from_sidecar(const json& j) {
    SimConfig c;
    c.params.domain = j.at("domain").get<DomainSpec>();
    c.params.gamma = j.at("gamma").get<double>();
    c.truncation = j.at("truncation").get<std::size_t>();
    c.delta = j.at("delta").get<double>();
    c.horizon = j.at("horizon").get<double>();
    const auto& s = j.at("sigma");
    const auto kind = s.at("kind").get<std::string>();
    c.sigma.kind = kind == "CONSTANT"              ? SigmaKind::Constant
                   : kind == "DETERMINISTIC_FIELD" ? SigmaKind::DeterministicField
                                                   : SigmaKind::StateDependent;
    c.sigma.c = s.at("c").get<double>();
    c.sigma.label = s.at("label").get<std::string>();
    c.spatial_grid = j.at("spatial_grid").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

/// Sidecar stamp shared by every output file.
inline json provenance_stamp(const std::string& spec_hash) {
    return json{{"version", version()}, {"spec_hash", spec_hash}};
}

inline void write_json(const json& j, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file.string() + " for writing");
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open " + file.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + file.string() + ": " + e.what());
    }
}

// Binary path layout (little-endian): magic "SPDEPATH", u64 rows, u64 modes,
// then rows x modes doubles, row-major. Times and eigenvalues are rebuilt from
// the sidecar.
inline constexpr char kPathMagic[8] = {'S', 'P', 'D', 'E', 'P', 'A', 'T', 'H'};

inline void save_path(const CoefficientPath& path, const std::filesystem::path& file,
                      const std::string& spec_hash = "") {
    {
        std::ofstream out(file, std::ios::binary);
        if (!out) throw Error("cannot open " + file.string() + " for writing");
        const std::uint64_t rows = path.rows();
        const std::uint64_t modes = path.modes();
        out.write(kPathMagic, sizeof kPathMagic);
        out.write(reinterpret_cast<const char*>(&rows), sizeof rows);
        out.write(reinterpret_cast<const char*>(&modes), sizeof modes);
        out.write(reinterpret_cast<const char*>(path.coeffs.data()),
                  static_cast<std::streamsize>(path.coeffs.size() * sizeof(double)));
        if (!out) throw Error("write failed for " + file.string());
    }
    json side = provenance_stamp(spec_hash);
    side["config"] = path.config;
    side["rows"] = path.rows();
    side["modes"] = path.modes();
    write_json(side, file.string() + ".json");
}

inline CoefficientPath load_path(const std::filesystem::path& file) {
    const json side = read_json(file.string() + ".json");
    CoefficientPath path;
    path.config = sim_config_from_sidecar(side.at("config"));
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + file.string());
    char magic[8];
    std::uint64_t rows = 0;
    std::uint64_t modes = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&rows), sizeof rows);
    in.read(reinterpret_cast<char*>(&modes), sizeof modes);
    if (!in || std::memcmp(magic, kPathMagic, sizeof magic) != 0)
        throw ConfigError(file.string() + " is not a path file");
    if (modes != path.config.truncation)
        throw ConfigError(file.string() + ": mode count disagrees with its sidecar");
    path.coeffs.resize(rows * modes);
    in.read(reinterpret_cast<char*>(path.coeffs.data()),
            static_cast<std::streamsize>(path.coeffs.size() * sizeof(double)));
    if (!in) throw ConfigError(file.string() + " is truncated");
    path.times.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) path.times[i] = static_cast<double>(i) * path.config.delta;
    path.lambda = eigenvalues(path.config.params.domain, modes);
    return path;
}

/// CSV (t, ||u(t)||_{H_r}).
inline void write_norm_csv(const CoefficientPath& path, double r, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw Error("cannot open " + file.string() + " for writing");
    out << "t,hr_norm\n" << std::setprecision(17);
    const auto w = detail::hr_weights(path.lambda, r);
    for (std::size_t i = 0; i < path.rows(); ++i)
        out << path.times[i] << ',' << std::sqrt(detail::weighted_sq(path.row(i), w)) << '\n';
}

}  // namespace spdepv
