#include "seqbf/config.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>

namespace seqbf {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError(path + ": " + what);
}

const json& need(const json& obj, const char* key, const std::string& path) {
    if (!obj.contains(key)) fail(path, std::string("missing required key '") + key + "'");
    return obj.at(key);
}

void reject_unknown(const json& obj, std::initializer_list<const char*> allowed,
                    const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || item.key() == k;
        if (!known) fail(path, "unknown key '" + item.key() + "'");
    }
}

double get_num(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_number()) fail(path + "/" + key, "expected a number");
    return v.get<double>();
}

double get_num_or(const json& obj, const char* key, const std::string& path, double dflt) {
    if (!obj.contains(key)) return dflt;
    return get_num(obj, key, path);
}

std::string get_str(const json& obj, const char* key, const std::string& path) {
    const json& v = need(obj, key, path);
    if (!v.is_string()) fail(path + "/" + key, "expected a string");
    return v.get<std::string>();
}

AnalysisPriorSpec parse_prior(const json& j, const std::string& path) {
    std::string family = get_str(j, "family", path);
    if (family == "directional_directional") {
        reject_unknown(j, {"family", "mu", "tau"}, path);
        return DirectionalDirectional{get_num(j, "mu", path), get_num(j, "tau", path)};
    }
    if (family == "point_point") {
        reject_unknown(j, {"family", "mu"}, path);
        return PointPoint{get_num(j, "mu", path)};
    }
    if (family == "point_two_sided") {
        reject_unknown(j, {"family", "mu", "tau"}, path);
        return PointTwoSided{get_num(j, "mu", path), get_num(j, "tau", path)};
    }
    if (family == "point_directional") {
        reject_unknown(j, {"family", "mu", "tau"}, path);
        return PointDirectional{get_num(j, "mu", path), get_num(j, "tau", path)};
    }
    if (family == "informed_t") {
        reject_unknown(j, {"family", "mu", "tau", "kappa", "a", "b"}, path);
        return InformedT{get_num(j, "mu", path), get_num(j, "tau", path),
                         get_num_or(j, "kappa", path, 1.0), get_num_or(j, "a", path, -kInf),
                         get_num_or(j, "b", path, kInf)};
    }
    fail(path + "/family", "unknown analysis prior family '" + family + "'");
}

InformationModel parse_info_model(const json& j, const std::string& path) {
    std::string kind = get_str(j, "kind", path);
    if (kind == "unit_variance") {
        reject_unknown(j, {"kind", "lambda2"}, path);
        return UnitVariance{get_num_or(j, "lambda2", path, 1.0)};
    }
    if (kind == "two_sample_z") {
        reject_unknown(j, {"kind"}, path);
        return TwoSampleZ{};
    }
    if (kind == "two_proportions_delta") {
        reject_unknown(j, {"kind", "pi0", "pi1"}, path);
        return TwoProportionsDelta{get_num(j, "pi0", path), get_num(j, "pi1", path)};
    }
    if (kind == "t_test") {
        reject_unknown(j, {"kind", "design"}, path);
        std::string d = get_str(j, "design", path);
        if (d == "one_sample") return TTestApprox{TTestDesign::one_sample};
        if (d == "paired") return TTestApprox{TTestDesign::paired};
        if (d == "two_sample") return TTestApprox{TTestDesign::two_sample};
        fail(path + "/design", "unknown t-test design '" + d + "'");
    }
    fail(path + "/kind", "unknown information model kind '" + kind + "'");
}

template <typename F>
void checked(const std::string& path, F&& f) {
    try {
        f();
    } catch (const std::invalid_argument& e) {
        fail(path, e.what());
    }
}

}  // namespace

RunConfig parse_config(const std::string& json_text, const std::string& fallback_id) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON: ") + e.what());
    }
    reject_unknown(root,
                   {"design_id", "analysis_prior", "thresholds", "design_prior", "info_model",
                    "schedule", "tolerances", "seed", "sweep"},
                   "/");

    RunConfig cfg;
    cfg.design_id =
        root.contains("design_id") ? get_str(root, "design_id", "/") : fallback_id;

    const json& jp = need(root, "analysis_prior", "/");
    cfg.design.analysis_prior = parse_prior(jp, "/analysis_prior");
    checked("/analysis_prior", [&] { validate_prior(cfg.design.analysis_prior); });

    const json& jt = need(root, "thresholds", "/");
    reject_unknown(jt, {"k0", "k1"}, "/thresholds");
    cfg.design.thresholds = {get_num(jt, "k0", "/thresholds"), get_num(jt, "k1", "/thresholds")};
    checked("/thresholds", [&] { cfg.design.thresholds.validate(); });

    const json& jd = need(root, "design_prior", "/");
    reject_unknown(jd, {"mu", "sd"}, "/design_prior");
    cfg.design.design_prior = {get_num(jd, "mu", "/design_prior"),
                               get_num(jd, "sd", "/design_prior")};
    checked("/design_prior", [&] { cfg.design.design_prior.validate(); });

    const json& jm = need(root, "info_model", "/");
    cfg.design.info_model = parse_info_model(jm, "/info_model");
    checked("/info_model", [&] { validate_info_model(cfg.design.info_model); });

    const json& js = need(root, "schedule", "/");
    reject_unknown(js, {"n", "arms"}, "/schedule");
    const json& jn = need(js, "n", "/schedule");
    if (!jn.is_array() || jn.empty()) fail("/schedule/n", "expected a non-empty array");
    std::vector<double> n;
    for (const auto& v : jn) {
        if (!v.is_number()) fail("/schedule/n", "expected numbers");
        n.push_back(v.get<double>());
    }
    checked("/schedule", [&] { cfg.design.schedule = build_schedule(cfg.design.info_model, n); });
    if (js.contains("arms")) {
        int arms = static_cast<int>(get_num(js, "arms", "/schedule"));
        if (arms != info_arms(cfg.design.info_model))
            fail("/schedule/arms", "arm count does not match the information model");
    }

    cfg.mvn_tol = mvn_default_tolerance();
    if (root.contains("tolerances")) {
        const json& jto = root.at("tolerances");
        reject_unknown(jto, {"abs_tol", "rel_tol", "max_rounds"}, "/tolerances");
        cfg.mvn_tol.abs_tol = get_num_or(jto, "abs_tol", "/tolerances", cfg.mvn_tol.abs_tol);
        cfg.mvn_tol.rel_tol = get_num_or(jto, "rel_tol", "/tolerances", cfg.mvn_tol.rel_tol);
        cfg.mvn_tol.max_iter = static_cast<int>(
            get_num_or(jto, "max_rounds", "/tolerances", cfg.mvn_tol.max_iter));
        checked("/tolerances", [&] { cfg.mvn_tol.validate(); });
    }

    const json& jseed = need(root, "seed", "/");
    if (!jseed.is_number_integer() || jseed.get<double>() < 0)
        fail("/seed", "expected a nonnegative integer");
    cfg.seed = jseed.get<std::uint64_t>();

    if (root.contains("sweep")) {
        const json& jw = root.at("sweep");
        reject_unknown(jw, {"n_max", "m", "design_priors"}, "/sweep");
        SweepSpec sw;
        const json& jnm = need(jw, "n_max", "/sweep");
        if (!jnm.is_array() || jnm.empty()) fail("/sweep/n_max", "expected a non-empty array");
        for (const auto& v : jnm) sw.n_max.push_back(v.get<double>());
        const json& jmm = need(jw, "m", "/sweep");
        if (!jmm.is_array() || jmm.empty()) fail("/sweep/m", "expected a non-empty array");
        for (const auto& v : jmm) {
            if (!v.is_number_integer() || v.get<int>() < 1)
                fail("/sweep/m", "stage counts must be positive integers");
            sw.m.push_back(v.get<int>());
        }
        const json& jdp = need(jw, "design_priors", "/sweep");
        if (!jdp.is_array() || jdp.empty())
            fail("/sweep/design_priors", "expected a non-empty array");
        for (const auto& v : jdp) {
            reject_unknown(v, {"mu", "sd"}, "/sweep/design_priors");
            DesignPrior p{get_num(v, "mu", "/sweep/design_priors"),
                          get_num(v, "sd", "/sweep/design_priors")};
            checked("/sweep/design_priors", [&] { p.validate(); });
            sw.priors.push_back(p);
        }
        cfg.sweep = std::move(sw);
    }

    checked("/", [&] { cfg.design.validate(); });
    return cfg;
}

RunConfig load_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string stem = path;
    if (auto pos = stem.find_last_of("/\\"); pos != std::string::npos) stem = stem.substr(pos + 1);
    if (auto pos = stem.rfind('.'); pos != std::string::npos) stem = stem.substr(0, pos);
    return parse_config(ss.str(), stem);
}

std::string serialize_config(const RunConfig& cfg) {
    json root;
    root["design_id"] = cfg.design_id;

    json jp;
    std::visit(
        [&](const auto& p) {
            using T = std::decay_t<decltype(p)>;
            if constexpr (std::is_same_v<T, DirectionalDirectional>) {
                jp = {{"family", "directional_directional"}, {"mu", p.mu}, {"tau", p.tau}};
            } else if constexpr (std::is_same_v<T, PointPoint>) {
                jp = {{"family", "point_point"}, {"mu", p.mu}};
            } else if constexpr (std::is_same_v<T, PointTwoSided>) {
                jp = {{"family", "point_two_sided"}, {"mu", p.mu}, {"tau", p.tau}};
            } else if constexpr (std::is_same_v<T, PointDirectional>) {
                jp = {{"family", "point_directional"}, {"mu", p.mu}, {"tau", p.tau}};
            } else {
                jp = {{"family", "informed_t"}, {"mu", p.mu}, {"tau", p.tau}, {"kappa", p.kappa}};
                if (std::isfinite(p.a)) jp["a"] = p.a;
                if (std::isfinite(p.b)) jp["b"] = p.b;
            }
        },
        cfg.design.analysis_prior);
    root["analysis_prior"] = jp;

    root["thresholds"] = {{"k0", cfg.design.thresholds.k0}, {"k1", cfg.design.thresholds.k1}};
    root["design_prior"] = {{"mu", cfg.design.design_prior.mu_d},
                            {"sd", cfg.design.design_prior.tau_d}};

    json jm;
    std::visit(
        [&](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, UnitVariance>) {
                jm = {{"kind", "unit_variance"}, {"lambda2", m.lambda2}};
            } else if constexpr (std::is_same_v<T, TwoSampleZ>) {
                jm = {{"kind", "two_sample_z"}};
            } else if constexpr (std::is_same_v<T, TwoProportionsDelta>) {
                jm = {{"kind", "two_proportions_delta"}, {"pi0", m.pi0}, {"pi1", m.pi1}};
            } else {
                const char* d = m.design == TTestDesign::one_sample ? "one_sample"
                                : m.design == TTestDesign::paired   ? "paired"
                                                                    : "two_sample";
                jm = {{"kind", "t_test"}, {"design", d}};
            }
        },
        cfg.design.info_model);
    root["info_model"] = jm;

    json jn = json::array();
    for (const Stage& st : cfg.design.schedule.stages) jn.push_back(st.n_report.front());
    root["schedule"] = {{"n", jn}, {"arms", info_arms(cfg.design.info_model)}};

    root["tolerances"] = {{"abs_tol", cfg.mvn_tol.abs_tol},
                          {"rel_tol", cfg.mvn_tol.rel_tol},
                          {"max_rounds", cfg.mvn_tol.max_iter}};
    root["seed"] = cfg.seed;

    if (cfg.sweep) {
        json jw;
        jw["n_max"] = cfg.sweep->n_max;
        jw["m"] = cfg.sweep->m;
        json jdp = json::array();
        for (const DesignPrior& p : cfg.sweep->priors)
            jdp.push_back({{"mu", p.mu_d}, {"sd", p.tau_d}});
        jw["design_priors"] = jdp;
        root["sweep"] = jw;
    }
    return root.dump(2) + "\n";
}

}  // namespace seqbf
