#include "nof1/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nof1 {

namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, value] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

void check_version(const json& j, const std::string& where)
{
    if (!j.contains("schema_version")) return;
    if (j["schema_version"].get<int>() != kConfigSchemaVersion)
        throw ConfigError(where + ": unsupported schema_version " + j["schema_version"].dump());
}

template <class T>
void read_if(const json& j, const char* key, T& target)
{
    if (j.contains(key)) target = j.at(key).get<T>();
}

ordered_json pair_json(const PairKey& p) { return {{"factor", p.factor}, {"outcome", p.outcome}}; }

PairKey pair_from(const json& j, const std::string& where)
{
    check_keys(j, {"factor", "outcome"}, where);
    return {j.at("factor").get<std::string>(), j.at("outcome").get<std::string>()};
}

ordered_json process_json(const FactorProcess& process)
{
    return std::visit(overloaded{
                          [](const BernoulliProcess& p) { return ordered_json{{"kind", "bernoulli"}, {"rate", p.rate}}; },
                          [](const WeekdayProcess& p) {
                              return ordered_json{{"kind", "weekday"},
                                                  {"weekday_rate", p.weekday_rate},
                                                  {"weekend_rate", p.weekend_rate}};
                          },
                          [](const MarkovProcess& p) {
                              return ordered_json{{"kind", "markov"}, {"p_stay", p.p_stay}, {"p_start", p.p_start}};
                          },
                          [](const ClusteredProcess& p) {
                              return ordered_json{{"kind", "clustered"},
                                                  {"block_days", p.block_days},
                                                  {"block_rate", p.block_rate},
                                                  {"inside_rate", p.inside_rate},
                                                  {"outside_rate", p.outside_rate}};
                          },
                      },
                      process);
}

FactorProcess process_from(const json& j, const std::string& where)
{
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "bernoulli") {
        check_keys(j, {"kind", "rate"}, where);
        BernoulliProcess p;
        read_if(j, "rate", p.rate);
        return p;
    }
    if (kind == "weekday") {
        check_keys(j, {"kind", "weekday_rate", "weekend_rate"}, where);
        WeekdayProcess p;
        read_if(j, "weekday_rate", p.weekday_rate);
        read_if(j, "weekend_rate", p.weekend_rate);
        return p;
    }
    if (kind == "markov") {
        check_keys(j, {"kind", "p_stay", "p_start"}, where);
        MarkovProcess p;
        read_if(j, "p_stay", p.p_stay);
        read_if(j, "p_start", p.p_start);
        return p;
    }
    if (kind == "clustered") {
        check_keys(j, {"kind", "block_days", "block_rate", "inside_rate", "outside_rate"}, where);
        ClusteredProcess p;
        read_if(j, "block_days", p.block_days);
        read_if(j, "block_rate", p.block_rate);
        read_if(j, "inside_rate", p.inside_rate);
        read_if(j, "outside_rate", p.outside_rate);
        return p;
    }
    throw ConfigError(where + ": unknown process kind '" + kind + "'");
}

ordered_json generator_json(const GeneratorConfig& c, bool with_seed)
{
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["span_days"] = c.span_days;
    j["noise_sd"] = c.noise_sd;
    j["missing_rate"] = c.missing_rate;
    if (with_seed) j["seed"] = c.seed;
    auto vitals = ordered_json::array();
    for (const auto& v : c.vitals) vitals.push_back({{"name", v.name}, {"baseline", v.baseline}});
    auto factors = ordered_json::array();
    for (const auto& f : c.factors) factors.push_back({{"name", f.name}, {"process", process_json(f.process)}});
    auto effects = ordered_json::array();
    for (const auto& e : c.effects) effects.push_back({{"factor", e.factor}, {"outcome", e.outcome}, {"beta", e.beta}});
    auto nulls = ordered_json::array();
    for (const auto& p : c.null_pairs) nulls.push_back(pair_json(p));
    j["vitals"] = std::move(vitals);
    j["factors"] = std::move(factors);
    j["effects"] = std::move(effects);
    j["null_pairs"] = std::move(nulls);
    return j;
}

GeneratorConfig generator_from(const json& j, const std::string& where)
{
    check_keys(j, {"schema_version", "span_days", "noise_sd", "missing_rate", "seed", "vitals", "factors", "effects",
                   "null_pairs"},
               where);
    check_version(j, where);
    GeneratorConfig c = default_generator_config();
    read_if(j, "span_days", c.span_days);
    read_if(j, "noise_sd", c.noise_sd);
    read_if(j, "missing_rate", c.missing_rate);
    read_if(j, "seed", c.seed);
    if (j.contains("vitals")) {
        c.vitals.clear();
        for (const auto& v : j["vitals"]) {
            check_keys(v, {"name", "baseline"}, where + ".vitals");
            c.vitals.push_back({v.at("name").get<std::string>(), v.at("baseline").get<double>()});
        }
    }
    if (j.contains("factors")) {
        c.factors.clear();
        for (const auto& f : j["factors"]) {
            check_keys(f, {"name", "process"}, where + ".factors");
            c.factors.push_back({f.at("name").get<std::string>(), process_from(f.at("process"), where + ".factors")});
        }
    }
    if (j.contains("effects")) {
        c.effects.clear();
        for (const auto& e : j["effects"]) {
            check_keys(e, {"factor", "outcome", "beta"}, where + ".effects");
            c.effects.push_back(
                {e.at("factor").get<std::string>(), e.at("outcome").get<std::string>(), e.at("beta").get<double>()});
        }
    }
    if (j.contains("null_pairs")) {
        c.null_pairs.clear();
        for (const auto& p : j["null_pairs"]) c.null_pairs.push_back(pair_from(p, where + ".null_pairs"));
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return c;
}

ordered_json analysis_json(const AnalysisConfig& a)
{
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["prior"] = {{"coefficient_variance", a.prior.coefficient_variance},
                  {"ig_shape", a.prior.ig_shape},
                  {"ig_rate", a.prior.ig_rate}};
    auto schedule = ordered_json::array();
    for (const auto& b : a.engine.adaptive_schedule)
        schedule.push_back({{"from_day", b.from_day}, {"p_threshold", b.p_threshold}});
    j["engine"] = {{"clue_mass", a.engine.clue_mass},
                   {"pattern_mass", a.engine.pattern_mass},
                   {"ci_level", a.engine.ci_level},
                   {"kl_window_days", a.engine.kl_window_days},
                   {"kl_threshold", a.engine.kl_threshold},
                   {"adaptive_schedule", schedule},
                   {"ppc_gate_enabled", a.engine.ppc_gate_enabled},
                   {"ppc_min_coverage", a.engine.ppc_min_coverage},
                   {"design", a.engine.design == DesignMode::pairwise ? "pairwise" : "multivariate"}};
    j["baselines"] = {{"fixed_min_observations", a.baselines.fixed_min_observations},
                      {"fixed_alpha", a.baselines.fixed_alpha},
                      {"naive_alpha", a.baselines.naive_alpha}};
    j["evaluation"] = {{"fdr_day", a.evaluation.fdr_day},
                       {"coverage_day", a.evaluation.coverage_day},
                       {"direction_cutoff_day", a.evaluation.direction_cutoff_day},
                       {"ks_samples", a.evaluation.ks_samples},
                       {"fdr_counting", to_string(a.evaluation.fdr_counting)}};
    j["valences"] = ordered_json::parse(valences_to_json(a.valences));
    auto pairs = ordered_json::array();
    for (const auto& p : a.pairs) pairs.push_back(pair_json(p));
    j["pairs"] = std::move(pairs);
    return j;
}

AnalysisConfig analysis_from(const json& j, const std::string& where)
{
    check_keys(j, {"schema_version", "prior", "engine", "baselines", "evaluation", "valences", "pairs"}, where);
    check_version(j, where);
    AnalysisConfig a;
    if (j.contains("prior")) {
        const auto& p = j["prior"];
        check_keys(p, {"coefficient_variance", "ig_shape", "ig_rate"}, where + ".prior");
        read_if(p, "coefficient_variance", a.prior.coefficient_variance);
        read_if(p, "ig_shape", a.prior.ig_shape);
        read_if(p, "ig_rate", a.prior.ig_rate);
    }
    if (j.contains("engine")) {
        const auto& e = j["engine"];
        check_keys(e, {"clue_mass", "pattern_mass", "ci_level", "kl_window_days", "kl_threshold", "adaptive_schedule",
                       "ppc_gate_enabled", "ppc_min_coverage", "design"},
                   where + ".engine");
        read_if(e, "clue_mass", a.engine.clue_mass);
        read_if(e, "pattern_mass", a.engine.pattern_mass);
        read_if(e, "ci_level", a.engine.ci_level);
        read_if(e, "kl_window_days", a.engine.kl_window_days);
        read_if(e, "kl_threshold", a.engine.kl_threshold);
        read_if(e, "ppc_gate_enabled", a.engine.ppc_gate_enabled);
        read_if(e, "ppc_min_coverage", a.engine.ppc_min_coverage);
        if (e.contains("adaptive_schedule")) {
            a.engine.adaptive_schedule.clear();
            for (const auto& b : e["adaptive_schedule"]) {
                check_keys(b, {"from_day", "p_threshold"}, where + ".engine.adaptive_schedule");
                a.engine.adaptive_schedule.push_back({b.at("from_day").get<int>(), b.at("p_threshold").get<double>()});
            }
        }
        if (e.contains("design")) {
            const auto d = e["design"].get<std::string>();
            if (d == "pairwise") a.engine.design = DesignMode::pairwise;
            else if (d == "multivariate") a.engine.design = DesignMode::multivariate;
            else throw ConfigError(where + ".engine: unknown design '" + d + "'");
        }
    }
    if (j.contains("baselines")) {
        const auto& b = j["baselines"];
        check_keys(b, {"fixed_min_observations", "fixed_alpha", "naive_alpha"}, where + ".baselines");
        read_if(b, "fixed_min_observations", a.baselines.fixed_min_observations);
        read_if(b, "fixed_alpha", a.baselines.fixed_alpha);
        read_if(b, "naive_alpha", a.baselines.naive_alpha);
    }
    if (j.contains("evaluation")) {
        const auto& ev = j["evaluation"];
        check_keys(ev, {"fdr_day", "coverage_day", "direction_cutoff_day", "ks_samples", "fdr_counting"},
                   where + ".evaluation");
        read_if(ev, "fdr_day", a.evaluation.fdr_day);
        read_if(ev, "coverage_day", a.evaluation.coverage_day);
        read_if(ev, "direction_cutoff_day", a.evaluation.direction_cutoff_day);
        read_if(ev, "ks_samples", a.evaluation.ks_samples);
        if (ev.contains("fdr_counting")) a.evaluation.fdr_counting = parse_fdr_counting(ev["fdr_counting"].get<std::string>());
    }
    if (j.contains("valences")) a.valences = valences_from_json(j["valences"].dump());
    if (j.contains("pairs")) {
        for (const auto& p : j["pairs"]) a.pairs.push_back(pair_from(p, where + ".pairs"));
    }
    try {
        a.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
    return a;
}

json parse_json(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("malformed JSON: ") + e.what());
    }
}

template <class F>
auto wrap_json_errors(F f)
{
    try {
        return f();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
}

} // namespace

std::string generator_config_to_json(const GeneratorConfig& config) { return generator_json(config, true).dump(2) + "\n"; }

GeneratorConfig generator_config_from_json(const std::string& text)
{
    return wrap_json_errors([&] { return generator_from(parse_json(text), "generator config"); });
}

std::string config_fingerprint(const GeneratorConfig& config)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(generator_json(config, false).dump())));
    return buf;
}

std::string analysis_config_to_json(const AnalysisConfig& config) { return analysis_json(config).dump(2) + "\n"; }

AnalysisConfig analysis_config_from_json(const std::string& text)
{
    return wrap_json_errors([&] { return analysis_from(parse_json(text), "analysis config"); });
}

std::string experiment_config_to_json(const ExperimentConfig& config)
{
    ordered_json j;
    j["schema_version"] = kConfigSchemaVersion;
    j["generator"] = generator_json(config.generator, true);
    j["analysis"] = analysis_json(config.analysis);
    j["monte_carlo"] = {{"n_datasets", config.monte_carlo.n_datasets},
                        {"master_seed", config.monte_carlo.master_seed},
                        {"beta_min", config.monte_carlo.beta_min},
                        {"beta_max", config.monte_carlo.beta_max},
                        {"noise_min", config.monte_carlo.noise_min},
                        {"noise_max", config.monte_carlo.noise_max},
                        {"vary", config.monte_carlo.vary}};
    j["sweep"] = config.sweep;
    return j.dump(2) + "\n";
}

ExperimentConfig experiment_config_from_json(const std::string& text)
{
    return wrap_json_errors([&] {
        const auto j = parse_json(text);
        check_keys(j, {"schema_version", "generator", "analysis", "monte_carlo", "sweep"}, "experiment config");
        check_version(j, "experiment config");
        ExperimentConfig c;
        if (j.contains("generator")) c.generator = generator_from(j["generator"], "experiment config.generator");
        if (j.contains("analysis")) c.analysis = analysis_from(j["analysis"], "experiment config.analysis");
        if (j.contains("monte_carlo")) {
            const auto& m = j["monte_carlo"];
            check_keys(m, {"n_datasets", "master_seed", "beta_min", "beta_max", "noise_min", "noise_max", "vary"},
                       "experiment config.monte_carlo");
            read_if(m, "n_datasets", c.monte_carlo.n_datasets);
            read_if(m, "master_seed", c.monte_carlo.master_seed);
            read_if(m, "beta_min", c.monte_carlo.beta_min);
            read_if(m, "beta_max", c.monte_carlo.beta_max);
            read_if(m, "noise_min", c.monte_carlo.noise_min);
            read_if(m, "noise_max", c.monte_carlo.noise_max);
            read_if(m, "vary", c.monte_carlo.vary);
            c.monte_carlo.validate();
        }
        if (j.contains("sweep")) c.sweep = j["sweep"].get<std::map<std::string, std::vector<double>>>();
        return c;
    });
}

std::string read_text_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace nof1
