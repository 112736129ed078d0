#include "nof1/tier_engine.hpp"

#include <algorithm>
#include <cstdio>
#include <exception>
#include <tuple>
#include <stdexcept>

#include "nof1/baselines.hpp"

namespace nof1 {

namespace {

struct DesignData {
    Eigen::MatrixXd design;
    Eigen::VectorXd outcomes;
    Eigen::Index effect_index = 1;
};

DesignData pairwise_data(const Dataset& dataset, const PairKey& pair, int day)
{
    const auto rows = pair_rows(dataset, pair, day);
    DesignData d;
    d.design = pairwise_design(rows.indicator);
    d.outcomes = Eigen::Map<const Eigen::VectorXd>(rows.outcome.data(), static_cast<Eigen::Index>(rows.outcome.size()));
    return d;
}

// Intercept plus every factor; days missing any factor or the outcome are dropped.
DesignData multivariate_data(const Dataset& dataset, const PairKey& pair, int day)
{
    const auto& schema = dataset.schema();
    const auto vi = *schema.vital_index(pair.outcome);
    const auto k = static_cast<Eigen::Index>(schema.factors.size());
    std::vector<const Observation*> complete;
    for (const auto& obs : dataset.observations()) {
        if (obs.day > day) break;
        if (!obs.vitals[vi]) continue;
        if (std::all_of(obs.factors.begin(), obs.factors.end(), [](const auto& f) { return f.has_value(); }))
            complete.push_back(&obs);
    }
    DesignData d;
    d.design.resize(static_cast<Eigen::Index>(complete.size()), k + 1);
    d.outcomes.resize(static_cast<Eigen::Index>(complete.size()));
    for (std::size_t i = 0; i < complete.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        d.design(r, 0) = 1.0;
        for (Eigen::Index c = 0; c < k; ++c)
            d.design(r, c + 1) = *complete[i]->factors[static_cast<std::size_t>(c)] ? 1.0 : 0.0;
        d.outcomes(r) = *complete[i]->vitals[vi];
    }
    d.effect_index = 1 + static_cast<Eigen::Index>(*schema.factor_index(pair.factor));
    return d;
}

char* format_number(char* buf, std::size_t size, double v)
{
    std::snprintf(buf, size, "%.10g", v);
    return buf;
}

} // namespace

std::string to_string(Tier tier)
{
    switch (tier) {
    case Tier::null: return "null";
    case Tier::clue: return "clue";
    case Tier::pattern: return "pattern";
    case Tier::correlation: return "correlation";
    }
    return "null";
}

Tier parse_tier(const std::string& name)
{
    if (name == "null") return Tier::null;
    if (name == "clue") return Tier::clue;
    if (name == "pattern") return Tier::pattern;
    if (name == "correlation") return Tier::correlation;
    throw std::invalid_argument("unknown tier '" + name + "'");
}

std::vector<ThresholdBand> default_adaptive_schedule()
{
    return {{1, 0.30}, {8, 0.20}, {14, 0.15}, {30, 0.10}};
}

void EngineConfig::validate() const
{
    if (!(0.5 < clue_mass && clue_mass < pattern_mass && pattern_mass < 1.0))
        throw std::invalid_argument("engine requires 0.5 < clue_mass < pattern_mass < 1");
    if (!(ci_level > 0.0 && ci_level < 1.0)) throw std::invalid_argument("ci_level must lie in (0, 1)");
    if (!(kl_threshold > 0.0)) throw std::invalid_argument("kl_threshold must be positive");
    if (kl_window_days < 1) throw std::invalid_argument("kl_window_days must be >= 1");
    if (adaptive_schedule.empty()) throw std::invalid_argument("adaptive_schedule is empty");
    if (adaptive_schedule.front().from_day != 1) throw std::invalid_argument("adaptive_schedule must start at day 1");
    for (std::size_t i = 1; i < adaptive_schedule.size(); ++i) {
        if (adaptive_schedule[i].from_day <= adaptive_schedule[i - 1].from_day)
            throw std::invalid_argument("adaptive_schedule days must be strictly increasing");
        if (adaptive_schedule[i].p_threshold > adaptive_schedule[i - 1].p_threshold)
            throw std::invalid_argument("adaptive_schedule thresholds must be non-increasing");
    }
    if (!(ppc_min_coverage >= 0.0 && ppc_min_coverage <= 1.0))
        throw std::invalid_argument("ppc_min_coverage must lie in [0, 1]");
}

double adaptive_threshold(int day, std::span<const ThresholdBand> schedule)
{
    if (schedule.empty()) throw std::invalid_argument("adaptive_threshold: empty schedule");
    if (day < 1) throw std::invalid_argument("adaptive_threshold: day must be >= 1");
    double threshold = schedule.front().p_threshold;
    for (const auto& band : schedule) {
        if (day >= band.from_day) threshold = band.p_threshold;
        else break;
    }
    return threshold;
}

Tier classify_tier(const CoefficientMarginal& marginal, const std::optional<CoefficientMarginal>& lagged, int day,
                   double p_value, const EngineConfig& config, std::optional<double> predictive_coverage)
{
    const double up = prob_positive(marginal);
    const double directional = std::max(up, 1.0 - up);

    const auto [lo, hi] = credible_interval(marginal, config.ci_level);
    const bool excludes_zero = lo > 0.0 || hi < 0.0;
    if (excludes_zero && p_value < adaptive_threshold(day, config.adaptive_schedule)) {
        const bool calibrated =
            !config.ppc_gate_enabled || (predictive_coverage && *predictive_coverage >= config.ppc_min_coverage);
        if (calibrated) return Tier::correlation;
    }
    if (directional > config.pattern_mass && lagged) {
        const auto kl = kl_stability(marginal, *lagged);
        if (kl && *kl < config.kl_threshold) return Tier::pattern;
    }
    if (directional > config.clue_mass) return Tier::clue;
    return Tier::null;
}

const TimelineEntry& TierTimeline::at_day(int day) const
{
    auto it = std::lower_bound(entries.begin(), entries.end(), day,
                               [](const TimelineEntry& e, int d) { return e.day < d; });
    if (it == entries.end() || it->day != day)
        throw std::out_of_range("timeline for " + to_string(pair) + " has no entry for day " + std::to_string(day));
    return *it;
}

CoefficientMarginal pair_marginal(const Dataset& dataset, const PairKey& pair, int day, const PriorConfig& prior,
                                  DesignMode design)
{
    if (!dataset.has_pair(pair)) throw std::invalid_argument("pair " + to_string(pair) + " not in dataset schema");
    const auto data =
        design == DesignMode::pairwise ? pairwise_data(dataset, pair, day) : multivariate_data(dataset, pair, day);
    return coefficient_marginal(posterior_update(prior, data.design, data.outcomes), data.effect_index);
}

TierTimeline run_pair(const Dataset& dataset, const PairKey& pair, const PriorConfig& prior,
                      const EngineConfig& config)
{
    config.validate();
    prior.validate();
    if (!dataset.has_pair(pair)) throw std::invalid_argument("pair " + to_string(pair) + " not in dataset schema");

    TierTimeline timeline;
    timeline.pair = pair;
    const int span = dataset.span();
    timeline.entries.reserve(static_cast<std::size_t>(std::max(span, 0)));
    for (int day = 1; day <= span; ++day) {
        const auto data = config.design == DesignMode::pairwise ? pairwise_data(dataset, pair, day)
                                                                : multivariate_data(dataset, pair, day);
        const auto state = posterior_update(prior, data.design, data.outcomes);
        const auto marginal = coefficient_marginal(state, data.effect_index);
        const auto groups = pair_samples(dataset, pair, day);
        const auto test = welch_t_test(groups.present, groups.absent);

        TimelineEntry e;
        e.day = day;
        e.location = marginal.location;
        e.scale = marginal.scale;
        e.dof = marginal.dof;
        std::tie(e.ci_lo, e.ci_hi) = credible_interval(marginal, config.ci_level);
        const double up = prob_positive(marginal);
        e.direction = up >= 0.5 ? 1 : -1;
        e.prob_directional = std::max(up, 1.0 - up);
        e.p_value = test.degenerate ? 1.0 : test.p_value;
        e.n_obs = state.n_obs;

        std::optional<CoefficientMarginal> lagged;
        if (day - config.kl_window_days >= 1) {
            lagged = timeline.entries[static_cast<std::size_t>(day - config.kl_window_days - 1)].marginal();
            e.kl_vs_lag = kl_stability(marginal, *lagged);
        }

        // Without both groups the factor contrast is not identified.
        if (groups.present.empty() || groups.absent.empty()) {
            e.tier = Tier::null;
        } else {
            std::optional<double> coverage;
            if (config.ppc_gate_enabled && state.n_obs > 0)
                coverage = posterior_predictive_coverage(state, data.design, data.outcomes, config.ci_level);
            e.tier = classify_tier(marginal, lagged, day, e.p_value, config, coverage);
        }
        timeline.entries.push_back(e);
    }
    return timeline;
}

TimelineMap run_engine(const Dataset& dataset, std::span<const PairKey> pairs, const PriorConfig& prior,
                       const EngineConfig& config, Execution execution)
{
    if (pairs.empty()) throw std::invalid_argument("run_engine: no pairs requested");
    std::vector<TierTimeline> results(pairs.size());
    if (execution == Execution::serial) {
        for (std::size_t i = 0; i < pairs.size(); ++i) results[i] = run_pair(dataset, pairs[i], prior, config);
    } else {
        const auto n = static_cast<long>(pairs.size());
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic)
        for (long i = 0; i < n; ++i) {
            try {
                results[static_cast<std::size_t>(i)] = run_pair(dataset, pairs[static_cast<std::size_t>(i)], prior, config);
            } catch (...) {
#pragma omp critical(nof1_engine_failure)
                if (!failure) failure = std::current_exception();
            }
        }
        if (failure) std::rethrow_exception(failure);
    }
    TimelineMap out;
    for (auto& t : results) out.emplace(t.pair, std::move(t));
    return out;
}

std::optional<int> first_attainment(const TierTimeline& timeline, Tier tier)
{
    for (const auto& e : timeline.entries)
        if (e.tier >= tier) return e.day;
    return std::nullopt;
}

std::string timeline_to_csv(const TierTimeline& timeline)
{
    std::string out = "day,tier,location,ci_lo,ci_hi,prob_dir,p_value,kl\n";
    char buf[64];
    for (const auto& e : timeline.entries) {
        out += std::to_string(e.day) + "," + to_string(e.tier) + ",";
        out += format_number(buf, sizeof buf, e.location);
        out += ",";
        out += format_number(buf, sizeof buf, e.ci_lo);
        out += ",";
        out += format_number(buf, sizeof buf, e.ci_hi);
        out += ",";
        out += format_number(buf, sizeof buf, e.direction * e.prob_directional);
        out += ",";
        out += format_number(buf, sizeof buf, e.p_value);
        out += ",";
        if (e.kl_vs_lag) out += format_number(buf, sizeof buf, *e.kl_vs_lag);
        out += "\n";
    }
    return out;
}

} // namespace nof1
