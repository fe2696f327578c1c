// Experiment configuration parsing. One JSON file per experiment; errors
// carry the offending field so CLI users get line/field context.

#include <fstream>
#include <sstream>

#include "gwel/errors.hpp"
#include "gwel/harness.hpp"

namespace gwel {

namespace {

const nlohmann::json& require(const nlohmann::json& j, const char* field,
                              const std::string& where) {
    auto it = j.find(field);
    if (it == j.end())
        throw InvalidConfig(where + ": missing required field '" + field + "'");
    return *it;
}

double number(const nlohmann::json& j, const char* field, const std::string& where) {
    const auto& v = require(j, field, where);
    if (!v.is_number())
        throw InvalidConfig(where + ": field '" + field + "' must be a number");
    return v.get<double>();
}

std::uint64_t unsigned_int(const nlohmann::json& j, const char* field,
                           const std::string& where) {
    const auto& v = require(j, field, where);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<long long>() >= 0) return v.get<std::uint64_t>();
    throw InvalidConfig(where + ": field '" + field + "' must be a non-negative integer");
}

} // namespace

OffspringLaw offspring_from_json(const nlohmann::json& j) {
    const std::string where = "offspring";
    const auto& support = require(j, "support", where);
    const auto& probs = require(j, "probs", where);
    if (!support.is_array() || !probs.is_array())
        throw InvalidConfig(where + ": 'support' and 'probs' must be arrays");
    std::vector<int> sup;
    std::vector<double> pr;
    for (const auto& v : support) {
        if (!v.is_number_integer())
            throw InvalidConfig(where + ": support entries must be integers");
        sup.push_back(v.get<int>());
    }
    for (const auto& v : probs) {
        if (!v.is_number())
            throw InvalidConfig(where + ": probs entries must be numbers");
        pr.push_back(v.get<double>());
    }
    return OffspringLaw::create(std::move(sup), std::move(pr));
}

ResistanceLaw resistance_from_json(const nlohmann::json& j) {
    const std::string where = "resistance";
    const auto& fam = require(j, "family", where);
    if (!fam.is_string()) throw InvalidConfig(where + ": 'family' must be a string");
    const std::string name = fam.get<std::string>();
    if (name == "point_mass") return ResistanceLaw::point_mass(number(j, "value", where));
    if (name == "uniform")
        return ResistanceLaw::uniform(number(j, "a", where), number(j, "b", where));
    if (name == "two_point")
        return ResistanceLaw::two_point(number(j, "v1", where), number(j, "q", where),
                                        number(j, "v2", where));
    if (name == "lognormal")
        return ResistanceLaw::lognormal(number(j, "mu", where), number(j, "sigma", where));
    throw InvalidConfig(where + ": unknown family '" + name +
                        "' (expected point_mass, uniform, two_point or lognormal)");
}

ExperimentConfig parse_config(const nlohmann::json& j) {
    ExperimentConfig cfg;
    cfg.raw = j;

    const auto& mode = require(j, "mode", "config");
    if (!mode.is_string()) throw InvalidConfig("config: 'mode' must be a string");
    cfg.mode = mode.get<std::string>();
    if (cfg.mode != "tree" && cfg.mode != "pool" && cfg.mode != "oracle" && cfg.mode != "lambda")
        throw InvalidConfig("config: mode '" + cfg.mode +
                            "' is not one of tree, pool, oracle, lambda");

    cfg.offspring = offspring_from_json(require(j, "offspring", "config"));
    cfg.resistance = resistance_from_json(require(j, "resistance", "config"));
    cfg.seed = unsigned_int(j, "seed", "config"); // wall-clock seeding is not a thing here

    if (j.contains("out")) cfg.out_dir = j.at("out").get<std::string>();
    if (j.contains("node_budget")) cfg.node_budget = unsigned_int(j, "node_budget", "config");

    if (cfg.mode == "tree" || cfg.mode == "oracle") {
        const auto& depths = require(j, "depths", "config");
        if (!depths.is_array() || depths.empty())
            throw InvalidConfig("config: 'depths' must be a non-empty array");
        for (const auto& d : depths) {
            if (!d.is_number_integer() || d.get<int>() < 1)
                throw InvalidConfig("config: depths must be integers >= 1");
            cfg.depths.push_back(d.get<int>());
        }
        cfg.trees = unsigned_int(j, "trees", "config");
        if (cfg.trees == 0) throw InvalidConfig("config: 'trees' must be positive");
        if (j.contains("fluct_L")) {
            const long long L = j.at("fluct_L").get<long long>();
            if (L < 0) throw InvalidConfig("config: fluct_L must be >= 0");
            cfg.fluct_L = static_cast<int>(L);
        }
        if (j.contains("walk")) {
            const auto& w = j.at("walk");
            cfg.walk_trials = unsigned_int(w, "trials", "walk");
            cfg.walk_trees = unsigned_int(w, "trees", "walk");
        }
    }

    if (cfg.mode == "pool" || cfg.mode == "lambda") {
        const auto& p = require(j, "pool", "config");
        cfg.pool.n_particles = static_cast<std::uint32_t>(unsigned_int(p, "N", "pool"));
        cfg.pool.replicates = static_cast<int>(unsigned_int(p, "replicates", "pool"));
        cfg.pool.n_max = static_cast<int>(unsigned_int(p, "n_max", "pool"));
        if (p.contains("lambda")) cfg.pool.lambda = number(p, "lambda", "pool");
        if (p.contains("budget")) cfg.pool.budget = number(p, "budget", "pool");
        if (cfg.mode == "lambda" && !(cfg.pool.lambda > cfg.offspring.mean()))
            throw InvalidConfig("pool: lambda mode requires lambda > offspring mean");
        if (j.contains("c0_cutoff"))
            cfg.c0_cutoff = static_cast<int>(unsigned_int(j, "c0_cutoff", "config"));
        if (j.contains("fit_range")) {
            const auto& fr = j.at("fit_range");
            if (!fr.is_array() || fr.size() != 2)
                throw InvalidConfig("config: fit_range must be [n_lo, n_hi]");
            cfg.fit_lo = fr[0].get<int>();
            cfg.fit_hi = fr[1].get<int>();
        }
    }

    if (j.contains("inverse_w")) {
        const auto& iw = j.at("inverse_w");
        InverseWSection s;
        s.depth = static_cast<int>(unsigned_int(iw, "K", "inverse_w"));
        s.trees = unsigned_int(iw, "trees", "inverse_w");
        cfg.inverse_w = s;
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidConfig("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidConfig("config '" + path + "': " + e.what());
    }
    return parse_config(j);
}

std::string config_hash(const nlohmann::json& raw) {
    // FNV-1a over the canonical dump (nlohmann objects iterate sorted keys).
    const std::string dump = raw.dump();
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    std::ostringstream hex;
    hex << std::hex;
    for (int shift = 60; shift >= 0; shift -= 4) hex << ((h >> shift) & 0xF);
    return hex.str();
}

} // namespace gwel
