#include "nof1/generator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nof1/config.hpp"

namespace nof1 {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

bool is_weekday(int day) { return (day - 1) % 7 < 5; }

} // namespace

double stationary_rate(const FactorProcess& process)
{
    return std::visit(overloaded{
                          [](const BernoulliProcess& p) { return p.rate; },
                          [](const WeekdayProcess& p) { return (5.0 * p.weekday_rate + 2.0 * p.weekend_rate) / 7.0; },
                          [](const MarkovProcess& p) { return p.p_start / (1.0 - p.p_stay + p.p_start); },
                          [](const ClusteredProcess& p) {
                              return p.block_rate * p.inside_rate + (1.0 - p.block_rate) * p.outside_rate;
                          },
                      },
                      process);
}

bool factor_process_step(const FactorProcess& process, int day, std::optional<bool> previous, const CounterRng& stream)
{
    if (day < 1) throw std::invalid_argument("factor_process_step: day must be >= 1");
    const auto counter = static_cast<std::uint64_t>(day);
    return std::visit(
        overloaded{
            [&](const BernoulliProcess& p) { return stream.bernoulli(counter, p.rate); },
            [&](const WeekdayProcess& p) {
                return stream.bernoulli(counter, is_weekday(day) ? p.weekday_rate : p.weekend_rate);
            },
            [&](const MarkovProcess& p) {
                if (!previous) return stream.bernoulli(counter, stationary_rate(p));
                return stream.bernoulli(counter, *previous ? p.p_stay : p.p_start);
            },
            [&](const ClusteredProcess& p) {
                const auto block = static_cast<std::uint64_t>((day - 1) / p.block_days);
                const bool high = stream.child("block").bernoulli(block, p.block_rate);
                return stream.bernoulli(counter, high ? p.inside_rate : p.outside_rate);
            },
        },
        process);
}

void GeneratorConfig::validate() const
{
    if (span_days < 1) throw std::invalid_argument("span_days must be >= 1");
    if (!(noise_sd > 0.0)) throw std::invalid_argument("noise_sd must be positive");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0)) throw std::invalid_argument("missing_rate must lie in [0, 1)");
    const Schema s = schema();
    // Reuses the dataset schema rules (non-empty, unique names).
    (void)Dataset(s, {});
    for (const auto& v : vitals)
        if (!std::isfinite(v.baseline)) throw std::invalid_argument("vital baseline must be finite");
    for (const auto& f : factors) {
        std::visit(overloaded{
                       [](const BernoulliProcess& p) {
                           if (!is_probability(p.rate)) throw std::invalid_argument("bernoulli rate outside [0, 1]");
                       },
                       [](const WeekdayProcess& p) {
                           if (!is_probability(p.weekday_rate) || !is_probability(p.weekend_rate))
                               throw std::invalid_argument("weekday rates outside [0, 1]");
                       },
                       [](const MarkovProcess& p) {
                           if (!is_probability(p.p_stay) || !is_probability(p.p_start) || p.p_start + (1.0 - p.p_stay) <= 0.0)
                               throw std::invalid_argument("markov transition probabilities invalid");
                       },
                       [](const ClusteredProcess& p) {
                           if (p.block_days < 1 || !is_probability(p.block_rate) || !is_probability(p.inside_rate) ||
                               !is_probability(p.outside_rate))
                               throw std::invalid_argument("clustered process parameters invalid");
                       },
                   },
                   f.process);
    }
    std::set<PairKey> effect_pairs;
    for (const auto& e : effects) {
        const PairKey key{e.factor, e.outcome};
        if (!s.factor_index(e.factor) || !s.vital_index(e.outcome))
            throw std::invalid_argument("effect " + to_string(key) + " refers to unknown names");
        if (!std::isfinite(e.beta)) throw std::invalid_argument("effect beta must be finite");
        if (!effect_pairs.insert(key).second) throw std::invalid_argument("duplicate effect " + to_string(key));
    }
    std::set<PairKey> nulls;
    for (const auto& p : null_pairs) {
        if (!s.factor_index(p.factor) || !s.vital_index(p.outcome))
            throw std::invalid_argument("null pair " + to_string(p) + " refers to unknown names");
        if (effect_pairs.count(p)) throw std::invalid_argument("null pair " + to_string(p) + " also has an effect");
        if (!nulls.insert(p).second) throw std::invalid_argument("duplicate null pair " + to_string(p));
    }
}

Schema GeneratorConfig::schema() const
{
    Schema s;
    for (const auto& v : vitals) s.vitals.push_back(v.name);
    for (const auto& f : factors) s.factors.push_back(f.name);
    return s;
}

GeneratorConfig default_generator_config()
{
    GeneratorConfig c;
    c.vitals = {{"mood", 6.0}, {"anxiety", 4.0}, {"energy", 6.0}};
    c.factors = {
        {"coffee", WeekdayProcess{0.70, 0.35}},
        {"exercise", MarkovProcess{0.58, 0.28}},
        {"poor_sleep", BernoulliProcess{0.30}},
        {"stress", ClusteredProcess{7, 0.25, 0.75, 1.0 / 12.0}},
    };
    c.effects = {{"coffee", "anxiety", 2.1}, {"poor_sleep", "energy", -2.5}, {"exercise", "mood", 1.8}};
    c.null_pairs = {{"stress", "mood"}, {"coffee", "energy"}, {"exercise", "anxiety"}};
    return c;
}

std::vector<PairKey> GroundTruthSpec::all_pairs() const
{
    std::vector<PairKey> out;
    for (const auto& [pair, beta] : true_effects) out.push_back(pair);
    auto nulls = null_pairs;
    std::sort(nulls.begin(), nulls.end());
    out.insert(out.end(), nulls.begin(), nulls.end());
    return out;
}

std::pair<Dataset, GroundTruthSpec> generate(const GeneratorConfig& config)
{
    config.validate();
    const Schema schema = config.schema();
    const CounterRng root(config.seed);
    const auto factor_root = root.child("factor");
    const auto noise_root = root.child("noise");
    const auto missing_root = root.child("missing");
    const auto days = static_cast<std::size_t>(config.span_days);

    // Latent (pre-missingness) factor values, day-major.
    std::vector<std::vector<bool>> present(config.factors.size(), std::vector<bool>(days));
    for (std::size_t f = 0; f < config.factors.size(); ++f) {
        const auto stream = factor_root.child(config.factors[f].name);
        std::optional<bool> previous;
        for (int day = 1; day <= config.span_days; ++day) {
            const bool value = factor_process_step(config.factors[f].process, day, previous, stream);
            present[f][static_cast<std::size_t>(day - 1)] = value;
            previous = value;
        }
    }

    std::vector<std::vector<std::pair<std::size_t, double>>> effects_on(config.vitals.size());
    for (const auto& e : config.effects)
        effects_on[*schema.vital_index(e.outcome)].emplace_back(*schema.factor_index(e.factor), e.beta);

    std::vector<Observation> observations;
    observations.reserve(days);
    for (int day = 1; day <= config.span_days; ++day) {
        const auto d = static_cast<std::size_t>(day - 1);
        const auto counter = static_cast<std::uint64_t>(day);
        Observation obs;
        obs.day = day;
        obs.vitals.resize(config.vitals.size());
        obs.factors.resize(config.factors.size());
        for (std::size_t v = 0; v < config.vitals.size(); ++v) {
            double value = config.vitals[v].baseline;
            for (const auto& [f, beta] : effects_on[v])
                if (present[f][d]) value += beta;
            value += config.noise_sd * noise_root.child(config.vitals[v].name).normal(2 * counter);
            value = std::clamp(value, kVitalMin, kVitalMax);
            if (!missing_root.child(config.vitals[v].name).bernoulli(counter, config.missing_rate))
                obs.vitals[v] = value;
        }
        for (std::size_t f = 0; f < config.factors.size(); ++f) {
            if (!missing_root.child(config.factors[f].name).bernoulli(counter, config.missing_rate))
                obs.factors[f] = present[f][d];
        }
        observations.push_back(std::move(obs));
    }

    DatasetMeta meta;
    meta.seed = config.seed;
    meta.config_fingerprint = config_fingerprint(config);

    GroundTruthSpec truth;
    for (const auto& e : config.effects) truth.true_effects[{e.factor, e.outcome}] = e.beta;
    truth.null_pairs = config.null_pairs;
    return {Dataset(schema, std::move(observations), std::move(meta)), std::move(truth)};
}

std::string ground_truth_to_json(const GroundTruthSpec& truth)
{
    nlohmann::ordered_json j;
    j["schema_version"] = 1;
    auto effects = nlohmann::ordered_json::array();
    for (const auto& [pair, beta] : truth.true_effects)
        effects.push_back({{"factor", pair.factor}, {"outcome", pair.outcome}, {"beta", beta}});
    auto nulls = nlohmann::ordered_json::array();
    for (const auto& pair : truth.null_pairs) nulls.push_back({{"factor", pair.factor}, {"outcome", pair.outcome}});
    j["true_effects"] = std::move(effects);
    j["null_pairs"] = std::move(nulls);
    return j.dump(2) + "\n";
}

GroundTruthSpec ground_truth_from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    GroundTruthSpec truth;
    for (const auto& e : j.at("true_effects"))
        truth.true_effects[{e.at("factor").get<std::string>(), e.at("outcome").get<std::string>()}] =
            e.at("beta").get<double>();
    for (const auto& p : j.at("null_pairs"))
        truth.null_pairs.push_back({p.at("factor").get<std::string>(), p.at("outcome").get<std::string>()});
    return truth;
}

void save_ground_truth(const GroundTruthSpec& truth, const std::filesystem::path& path)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << ground_truth_to_json(truth);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

GroundTruthSpec load_ground_truth(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ground_truth_from_json(ss.str());
}

} // namespace nof1
