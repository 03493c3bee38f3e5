#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fungen/errors.hpp"

namespace fungen::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || it.key() == a;
        if (!ok) bad(path + "." + it.key(), "unknown field");
    }
}

double number(const json& obj, const char* key, const std::string& path, double fallback) {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_number()) bad(path + "." + key, "expected a number");
    return v.get<double>();
}

std::uint64_t count(const json& v, const std::string& path) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(path, "expected a non-negative integer");
    return v.get<std::uint64_t>();
}

const json& object_at(const json& obj, const char* key, const std::string& path) {
    const json& v = obj.at(key);
    if (!v.is_object()) bad(path + "." + key, "expected an object");
    return v;
}

/// Scalar broadcast to d entries, or an explicit list of d numbers.
std::vector<double> per_asset(const json& v, std::size_t d, const std::string& path) {
    if (v.is_number()) return std::vector<double>(d, v.get<double>());
    if (!v.is_array()) bad(path, "expected a number or an array");
    if (v.size() != d) bad(path, "expected " + std::to_string(d) + " entries");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) bad(path + "[" + std::to_string(i) + "]", "expected a number");
        out.push_back(v[i].get<double>());
    }
    return out;
}

SimConfig parse_simulator(const json& j, const std::string& path) {
    reject_unknown(j, path, {"d", "n_days", "seed", "drift", "vol", "corr", "div_yield", "init_mv", "start_date"});
    const std::size_t d = j.contains("d") ? count(j.at("d"), path + ".d") : 2;
    const std::size_t n = j.contains("n_days") ? count(j.at("n_days"), path + ".n_days") : 250;
    const std::uint64_t seed = j.contains("seed") ? count(j.at("seed"), path + ".seed") : 1;
    SimConfig s = SimConfig::defaults(d, n, seed);
    if (j.contains("drift")) s.drift = per_asset(j.at("drift"), d, path + ".drift");
    if (j.contains("vol")) s.vol = per_asset(j.at("vol"), d, path + ".vol");
    if (j.contains("div_yield")) s.div_yield = per_asset(j.at("div_yield"), d, path + ".div_yield");
    if (j.contains("init_mv")) s.init_mv = per_asset(j.at("init_mv"), d, path + ".init_mv");
    if (j.contains("start_date")) {
        if (!j.at("start_date").is_string()) bad(path + ".start_date", "expected a string");
        s.start_date = j.at("start_date").get<std::string>();
    }
    if (j.contains("corr")) {
        const json& c = j.at("corr");
        const std::string cp = path + ".corr";
        if (!c.is_array() || c.size() != d) bad(cp, "expected a " + std::to_string(d) + "x" + std::to_string(d) + " array");
        s.corr = Matrix(d, d);
        for (std::size_t r = 0; r < d; ++r) {
            if (!c[r].is_array()) bad(cp + "[" + std::to_string(r) + "]", "expected an array");
            const auto row = per_asset(c[r], d, cp + "[" + std::to_string(r) + "]");
            for (std::size_t k = 0; k < d; ++k) s.corr(r, k) = row[k];
        }
    }
    try {
        s.validate();
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
    return s;
}

LambdaSpec parse_lambda(const json& j, const std::string& path) {
    reject_unknown(j, path, {"kind", "value", "rate", "scale", "gamma", "offset", "window", "xi_lo", "xi_hi", "inner"});
    if (!j.contains("kind") || !j.at("kind").is_string()) bad(path + ".kind", "expected a string");
    LambdaSpec s;
    try {
        s.kind = parse_lambda_kind(j.at("kind").get<std::string>());
    } catch (const ConfigError& e) {
        bad(path + ".kind", e.what());
    }
    s.value = number(j, "value", path, s.value);
    s.rate = number(j, "rate", path, s.rate);
    s.scale = number(j, "scale", path, s.scale);
    s.gamma = number(j, "gamma", path, s.gamma);
    s.offset = number(j, "offset", path, s.offset);
    s.xi_lo = number(j, "xi_lo", path, s.xi_lo);
    s.xi_hi = number(j, "xi_hi", path, s.xi_hi);
    if (j.contains("window")) s.window = count(j.at("window"), path + ".window");
    if (j.contains("inner")) s.inner = std::make_shared<LambdaSpec>(parse_lambda(object_at(j, "inner", path), path + ".inner"));
    try {
        s.validate();
    } catch (const ConfigError& e) {
        bad(path, e.what());
    }
    return s;
}

json lambda_json(const LambdaSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["value"] = s.value;
    j["rate"] = s.rate;
    j["scale"] = s.scale;
    j["gamma"] = s.gamma;
    j["offset"] = s.offset;
    j["window"] = s.window;
    j["xi_lo"] = s.xi_lo;
    j["xi_hi"] = s.xi_hi;
    j["inner"] = s.inner ? lambda_json(*s.inner) : json(nullptr);
    return j;
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (std::size_t r = 0; r < m.rows(); ++r) {
        auto row = m.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return rows;
}

const char* mode_name(ModeSelection m) {
    switch (m) {
        case ModeSelection::additive: return "additive";
        case ModeSelection::multiplicative: return "multiplicative";
        case ModeSelection::both: return "both";
    }
    return "both";
}

}  // namespace

GenFunctionPtr GenSpec::build() const {
    GenFunctionPtr g = make_genfun(name, params);
    return negate ? negated(g) : g;
}

void RunConfig::validate() const {
    if (market.csv.has_value() == market.simulator.has_value())
        throw ConfigError("market: exactly one of csv or simulator is required");
    if (market.scenario && !market.simulator) throw ConfigError("market.scenario: requires a simulator source");
    if (!(c >= 0.0)) throw ConfigError("c: must be >= 0");
    if (!(epsilon >= 0.0)) throw ConfigError("epsilon: must be >= 0");
    if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
    (void)genfun.build();
    lambda.validate();
}

bool RunConfig::wants(StrategyMode m) const {
    if (mode == ModeSelection::both) return true;
    return (mode == ModeSelection::additive) == (m == StrategyMode::additive);
}

RunConfig parse_run_config(const std::string& text, const fs::path& base_dir) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) bad("$", "expected an object");
    reject_unknown(root, "$", {"market", "genfun", "lambda", "mode", "c", "epsilon", "output_dir", "seeds", "verify"});

    RunConfig cfg;
    if (!root.contains("market")) bad("$.market", "missing");
    const json& m = object_at(root, "market", "$");
    reject_unknown(m, "$.market", {"csv", "simulator", "scenario", "scenario_strength", "scenario_attempts"});
    if (m.contains("csv")) {
        if (!m.at("csv").is_string()) bad("$.market.csv", "expected a path string");
        fs::path p = m.at("csv").get<std::string>();
        cfg.market.csv = p.is_absolute() ? p : base_dir / p;
    }
    if (m.contains("simulator")) cfg.market.simulator = parse_simulator(object_at(m, "simulator", "$.market"), "$.market.simulator");
    if (m.contains("scenario")) {
        if (!m.at("scenario").is_string()) bad("$.market.scenario", "expected a string");
        try {
            cfg.market.scenario = parse_diversity_trend(m.at("scenario").get<std::string>());
        } catch (const ConfigError& e) {
            bad("$.market.scenario", e.what());
        }
    }
    cfg.market.scenario_options.strength = number(m, "scenario_strength", "$.market", cfg.market.scenario_options.strength);
    if (m.contains("scenario_attempts"))
        cfg.market.scenario_options.max_attempts = count(m.at("scenario_attempts"), "$.market.scenario_attempts");

    if (root.contains("genfun")) {
        const json& g = object_at(root, "genfun", "$");
        reject_unknown(g, "$.genfun", {"name", "params", "negate"});
        if (!g.contains("name") || !g.at("name").is_string()) bad("$.genfun.name", "expected a string");
        cfg.genfun.name = g.at("name").get<std::string>();
        if (g.contains("params")) {
            const json& p = object_at(g, "params", "$.genfun");
            for (auto it = p.begin(); it != p.end(); ++it) {
                if (!it->is_number()) bad("$.genfun.params." + it.key(), "expected a number");
                cfg.genfun.params[it.key()] = it->get<double>();
            }
        }
        if (g.contains("negate")) {
            if (!g.at("negate").is_boolean()) bad("$.genfun.negate", "expected a boolean");
            cfg.genfun.negate = g.at("negate").get<bool>();
        }
        try {
            (void)cfg.genfun.build();
        } catch (const ConfigError& e) {
            bad("$.genfun", e.what());
        }
    }
    if (root.contains("lambda")) cfg.lambda = parse_lambda(object_at(root, "lambda", "$"), "$.lambda");
    if (root.contains("mode")) {
        const json& v = root.at("mode");
        const std::string s = v.is_string() ? v.get<std::string>() : "";
        if (s == "additive") cfg.mode = ModeSelection::additive;
        else if (s == "multiplicative") cfg.mode = ModeSelection::multiplicative;
        else if (s == "both") cfg.mode = ModeSelection::both;
        else bad("$.mode", "expected additive, multiplicative or both");
    }
    cfg.c = number(root, "c", "$", cfg.c);
    cfg.epsilon = number(root, "epsilon", "$", cfg.epsilon);
    if (root.contains("output_dir")) {
        if (!root.at("output_dir").is_string()) bad("$.output_dir", "expected a path string");
        cfg.output_dir = root.at("output_dir").get<std::string>();
    }
    if (root.contains("seeds")) {
        const json& s = root.at("seeds");
        cfg.seeds.clear();
        if (s.is_array()) {
            for (std::size_t i = 0; i < s.size(); ++i) cfg.seeds.push_back(count(s[i], "$.seeds[" + std::to_string(i) + "]"));
        } else {
            cfg.seeds.push_back(count(s, "$.seeds"));
        }
    }
    if (root.contains("verify")) {
        const json& v = object_at(root, "verify", "$");
        reject_unknown(v, "$.verify", {"samples", "route_tolerance", "inject_dg_sign_error"});
        if (v.contains("samples")) cfg.verify.samples = count(v.at("samples"), "$.verify.samples");
        cfg.verify.route_tolerance = number(v, "route_tolerance", "$.verify", cfg.verify.route_tolerance);
        if (v.contains("inject_dg_sign_error")) {
            if (!v.at("inject_dg_sign_error").is_boolean()) bad("$.verify.inject_dg_sign_error", "expected a boolean");
            cfg.verify.inject_dg_sign_error = v.at("inject_dg_sign_error").get<bool>();
        }
    }
    try {
        cfg.validate();
    } catch (const ConfigError& e) {
        const std::string msg = e.what();
        throw ConfigError(msg.rfind("$", 0) == 0 ? msg : "$." + msg);
    }
    return cfg;
}

RunConfig load_run_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config " + file.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_run_config(ss.str(), file.has_parent_path() ? file.parent_path() : fs::path("."));
}

std::string canonical_json(const RunConfig& cfg) {
    json j;
    json market;
    if (cfg.market.csv) market["csv"] = cfg.market.csv->lexically_normal().generic_string();
    if (const auto& s = cfg.market.simulator) {
        market["simulator"] = {{"d", s->d},
                               {"n_days", s->n_days},
                               {"drift", s->drift},
                               {"vol", s->vol},
                               {"corr", matrix_json(s->corr)},
                               {"div_yield", s->div_yield},
                               {"init_mv", s->init_mv},
                               {"start_date", s->start_date}};
    }
    if (cfg.market.scenario) {
        market["scenario"] = to_string(*cfg.market.scenario);
        market["scenario_strength"] = cfg.market.scenario_options.strength;
        market["scenario_attempts"] = cfg.market.scenario_options.max_attempts;
    }
    j["market"] = market;
    j["genfun"] = {{"name", cfg.genfun.name}, {"params", cfg.genfun.params}, {"negate", cfg.genfun.negate}};
    j["lambda"] = lambda_json(cfg.lambda);
    j["mode"] = mode_name(cfg.mode);
    j["c"] = cfg.c;
    j["epsilon"] = cfg.epsilon;
    return j.dump();
}

namespace {

std::string short_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    // FNV-1a diffuses trailing bytes poorly; finish with a 64-bit mixer.
    h ^= h >> 33;
    h *= 0xff51afd7ed558ccdULL;
    h ^= h >> 33;
    char buf[24];
    std::snprintf(buf, sizeof buf, "%012llx", static_cast<unsigned long long>(h >> 16));
    return buf;
}

}  // namespace

std::string make_run_id(const RunConfig& cfg, std::uint64_t seed) {
    return short_hash(canonical_json(cfg) + "#" + std::to_string(seed));
}

std::string config_hash(const RunConfig& cfg) { return short_hash(canonical_json(cfg)); }

}  // namespace fungen::cli
