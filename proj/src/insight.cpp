#include "nof1/insight.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <tuple>

#include <json.hpp>

namespace nof1 {

std::string to_string(ExpectedSign sign)
{
    switch (sign) {
    case ExpectedSign::positive: return "positive";
    case ExpectedSign::negative: return "negative";
    case ExpectedSign::unknown: return "unknown";
    }
    return "unknown";
}

ExpectedSign parse_expected_sign(const std::string& name)
{
    if (name == "positive") return ExpectedSign::positive;
    if (name == "negative") return ExpectedSign::negative;
    if (name == "unknown") return ExpectedSign::unknown;
    throw std::invalid_argument("unknown expected_sign '" + name + "'");
}

ExpectedSign expected_sign(const ValenceMap& valences, const PairKey& pair)
{
    auto it = valences.find(pair);
    return it == valences.end() ? ExpectedSign::unknown : it->second;
}

ValenceMap default_valences() { return {{{"exercise", "mood"}, ExpectedSign::positive}}; }

std::string valences_to_json(const ValenceMap& valences)
{
    auto j = nlohmann::ordered_json::array();
    for (const auto& [pair, sign] : valences)
        j.push_back({{"factor", pair.factor}, {"outcome", pair.outcome}, {"expected_sign", to_string(sign)}});
    return j.dump(2) + "\n";
}

ValenceMap valences_from_json(const std::string& text)
{
    const auto j = nlohmann::json::parse(text);
    if (!j.is_array()) throw std::invalid_argument("valence map must be a JSON list");
    ValenceMap out;
    for (const auto& e : j) {
        for (const auto& [key, value] : e.items())
            if (key != "factor" && key != "outcome" && key != "expected_sign")
                throw std::invalid_argument("unknown valence field '" + key + "'");
        PairKey pair{e.at("factor").get<std::string>(), e.at("outcome").get<std::string>()};
        if (!out.emplace(pair, parse_expected_sign(e.at("expected_sign").get<std::string>())).second)
            throw std::invalid_argument("duplicate valence entry " + to_string(pair));
    }
    return out;
}

PlausibilityBreakdown plausibility(double p_value, double effect_location, ExpectedSign expected, int observed_sign,
                                   bool confounded)
{
    if (!(p_value >= 0.0 && p_value <= 1.0)) throw std::invalid_argument("p_value must lie in [0, 1]");
    PlausibilityBreakdown b;
    b.psi_stat = 1.0 - p_value;
    if (expected == ExpectedSign::unknown) {
        b.psi_val = 1.0;
    } else {
        const int want = expected == ExpectedSign::positive ? 1 : -1;
        b.psi_val = observed_sign == want ? 1.1 : 0.5;
    }
    const double magnitude = std::fabs(effect_location);
    b.psi_eff = magnitude > 1.5 ? 1.2 : magnitude > 1.0 ? 1.1 : 1.0;
    b.confounder_penalty = confounded ? kConfounderPenalty : 1.0;
    b.psi_final = std::clamp(b.psi_stat * b.psi_val * b.psi_eff * b.confounder_penalty, kPlausibilityFloor,
                             kPlausibilityCeiling);
    b.review_flag = b.psi_final < kReviewThreshold;
    return b;
}

double cooccurrence_rate(const Dataset& dataset, const FactorId& factor, const FactorId& other, int up_to_day)
{
    const auto fi = dataset.schema().factor_index(factor);
    const auto oi = dataset.schema().factor_index(other);
    if (!fi || !oi) throw std::invalid_argument("unknown factor in co-occurrence query");
    long present = 0;
    long both = 0;
    for (const auto& obs : dataset.observations()) {
        if (obs.day > up_to_day) break;
        const auto& f = obs.factors[*fi];
        const auto& o = obs.factors[*oi];
        if (!f || !o || !*f) continue;
        ++present;
        if (*o) ++both;
    }
    return present == 0 ? 0.0 : static_cast<double>(both) / static_cast<double>(present);
}

std::vector<FactorId> detect_confounders(const PairKey& pair, const Dataset& dataset,
                                         const std::map<PairKey, double>& effects, int up_to_day)
{
    auto own = effects.find(pair);
    if (own == effects.end()) throw std::invalid_argument("effects map lacks " + to_string(pair));
    std::vector<FactorId> flagged;
    for (const auto& other : dataset.schema().factors) {
        if (other == pair.factor) continue;
        auto it = effects.find({other, pair.outcome});
        if (it == effects.end()) continue;
        if (cooccurrence_rate(dataset, pair.factor, other, up_to_day) > kCooccurrenceThreshold &&
            std::fabs(it->second) > kConfounderStrengthRatio * std::fabs(own->second))
            flagged.push_back(other);
    }
    return flagged;
}

std::vector<Insight> build_insights(const TimelineMap& timelines, const Dataset& dataset, const ValenceMap& valences,
                                    int day, const PriorConfig& prior, DesignMode design)
{
    std::vector<Insight> out;
    std::map<VitalId, std::map<PairKey, double>> effects_by_outcome;
    for (const auto& [pair, timeline] : timelines) {
        if (timeline.entries.empty() || day > timeline.entries.back().day)
            throw std::out_of_range("day " + std::to_string(day) + " beyond timeline span for " + to_string(pair));
        const auto& entry = timeline.at_day(day);
        if (entry.tier == Tier::null) continue;

        auto& effects = effects_by_outcome[pair.outcome];
        if (effects.empty()) {
            for (const auto& factor : dataset.schema().factors) {
                const PairKey key{factor, pair.outcome};
                effects[key] = pair_marginal(dataset, key, day, prior, design).location;
            }
        }
        Insight insight;
        insight.pair = pair;
        insight.day = day;
        insight.tier = entry.tier;
        insight.effect_location = entry.location;
        insight.ci = {entry.ci_lo, entry.ci_hi};
        insight.p_value = entry.p_value;
        insight.confounders = detect_confounders(pair, dataset, effects, day);
        insight.plausibility = plausibility(entry.p_value, entry.location, expected_sign(valences, pair),
                                            entry.direction, !insight.confounders.empty());
        out.push_back(std::move(insight));
    }
    std::sort(out.begin(), out.end(), [](const Insight& a, const Insight& b) {
        return std::tie(a.pair.outcome, a.pair.factor) < std::tie(b.pair.outcome, b.pair.factor);
    });
    return out;
}

std::string insights_to_json(const std::vector<Insight>& insights)
{
    auto j = nlohmann::ordered_json::array();
    for (const auto& i : insights) {
        nlohmann::ordered_json e;
        e["factor"] = i.pair.factor;
        e["outcome"] = i.pair.outcome;
        e["day"] = i.day;
        e["tier"] = to_string(i.tier);
        e["effect_location"] = i.effect_location;
        e["ci"] = {i.ci.first, i.ci.second};
        e["p_value"] = i.p_value;
        e["plausibility"] = {
            {"psi_stat", i.plausibility.psi_stat},
            {"psi_val", i.plausibility.psi_val},
            {"psi_eff", i.plausibility.psi_eff},
            {"confounder_penalty", i.plausibility.confounder_penalty},
            {"psi_final", i.plausibility.psi_final},
            {"review_flag", i.plausibility.review_flag},
        };
        e["confounders"] = i.confounders;
        j.push_back(std::move(e));
    }
    return j.dump(2) + "\n";
}

} // namespace nof1
