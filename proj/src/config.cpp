#include "exdiff/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace exdiff {

namespace {

using nlohmann::json;

void only_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

double number(const json& j, const std::string& key) {
    if (!j.contains(key)) throw ConfigError("missing field '" + key + "'");
    const json& v = j.at(key);
    if (!v.is_number()) throw ConfigError("field '" + key + "' must be a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) throw ConfigError("field '" + key + "' must be finite");
    return d;
}

std::uint64_t count(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (!v.is_number_integer() || v.get<long long>() < 0)
        throw ConfigError("field '" + key + "' must be a nonnegative integer");
    return v.get<std::uint64_t>();
}

std::string text(const json& j, const std::string& key) {
    const json& v = j.at(key);
    if (!v.is_string()) throw ConfigError("field '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace

DriftSpec ExperimentConfig::drift() const {
    if (family == "piecewise_constant") return make_piecewise_constant(p1, p2);
    return make_piecewise_sine(p1, p2);
}

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    only_keys(j, {"drift", "x", "T", "n_paths", "times", "seed", "threads", "comparison", "output"}, "config");

    ExperimentConfig c;
    if (!j.contains("drift")) throw ConfigError("missing field 'drift'");
    const json& d = j.at("drift");
    if (!d.is_object() || !d.contains("family")) throw ConfigError("drift needs a 'family'");
    c.family = text(d, "family");
    if (c.family == "piecewise_constant") {
        only_keys(d, {"family", "a1", "a2"}, "drift");
        c.p1 = number(d, "a1");
        c.p2 = number(d, "a2");
    } else if (c.family == "piecewise_sine") {
        only_keys(d, {"family", "theta1", "theta2"}, "drift");
        c.p1 = number(d, "theta1");
        c.p2 = number(d, "theta2");
    } else {
        throw ConfigError("unknown drift family '" + c.family + "'");
    }

    if (j.contains("x")) c.x = number(j, "x");
    if (j.contains("T")) c.T = number(j, "T");
    if (!(c.T > 0.0)) throw ConfigError("T must be positive");
    if (j.contains("n_paths")) c.n_paths = count(j, "n_paths");
    if (c.n_paths < 1) throw ConfigError("n_paths must be at least 1");
    if (j.contains("seed")) c.seed = count(j, "seed");
    if (j.contains("threads")) c.threads = static_cast<unsigned>(count(j, "threads"));
    if (j.contains("times")) {
        if (!j.at("times").is_array()) throw ConfigError("times must be an array");
        for (const auto& t : j.at("times")) {
            if (!t.is_number()) throw ConfigError("times must hold numbers");
            c.times.push_back(t.get<double>());
        }
        for (std::size_t i = 0; i < c.times.size(); ++i) {
            if (!(c.times[i] > 0.0 && c.times[i] <= c.T)) throw ConfigError("times must lie in (0, T]");
            if (i > 0 && !(c.times[i] > c.times[i - 1])) throw ConfigError("times must be strictly increasing");
        }
    }
    if (j.contains("comparison")) {
        const json& e = j.at("comparison");
        only_keys(e, {"dt", "n"}, "comparison");
        EulerSettings s;
        if (e.contains("dt")) s.dt = number(e, "dt");
        if (e.contains("n")) s.n = count(e, "n");
        if (!(s.dt > 0.0)) throw ConfigError("comparison.dt must be positive");
        const double steps = std::round(c.T / s.dt);
        if (steps < 1.0 || std::fabs(steps * s.dt - c.T) > 1e-9 * c.T)
            throw ConfigError("comparison.dt must divide T");
        if (s.n < 2) throw ConfigError("comparison.n must be at least 2");
        c.comparison = s;
    }
    if (j.contains("output")) {
        const json& o = j.at("output");
        only_keys(o, {"csv", "svg", "json"}, "output");
        if (o.contains("csv")) c.csv_path = text(o, "csv");
        if (o.contains("svg")) c.svg_path = text(o, "svg");
        if (o.contains("json")) c.json_path = text(o, "json");
    }
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream s;
    s << in.rdbuf();
    return parse_config(s.str());
}

}  // namespace exdiff
