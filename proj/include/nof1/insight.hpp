#ifndef NOF1_INSIGHT_HPP
#define NOF1_INSIGHT_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "nof1/conjugate.hpp"
#include "nof1/dataset.hpp"
#include "nof1/tier_engine.hpp"

namespace nof1 {

enum class ExpectedSign { positive, negative, unknown };

std::string to_string(ExpectedSign sign);
ExpectedSign parse_expected_sign(const std::string& name);

using ValenceMap = std::map<PairKey, ExpectedSign>;

ExpectedSign expected_sign(const ValenceMap& valences, const PairKey& pair);

/// exercise -> mood is expected to be positive.
ValenceMap default_valences();

std::string valences_to_json(const ValenceMap& valences);
/// Accepts a JSON list of {factor, outcome, expected_sign}.
ValenceMap valences_from_json(const std::string& text);

inline constexpr double kPlausibilityFloor = 0.1;
inline constexpr double kPlausibilityCeiling = 0.95;
inline constexpr double kReviewThreshold = 0.60;
inline constexpr double kConfounderPenalty = 0.75;
inline constexpr double kCooccurrenceThreshold = 0.60;
inline constexpr double kConfounderStrengthRatio = 1.2;

struct PlausibilityBreakdown {
    double psi_stat = 0.0;
    double psi_val = 1.0;
    double psi_eff = 1.0;
    double confounder_penalty = 1.0;
    double psi_final = kPlausibilityFloor;
    bool review_flag = true;

    friend bool operator==(const PlausibilityBreakdown&, const PlausibilityBreakdown&) = default;
};

/// observed_sign is +1 or -1 (0 is treated as no direction and never
/// matches an expectation). The confounder penalty multiplies the product
/// before clamping.
PlausibilityBreakdown plausibility(double p_value, double effect_location, ExpectedSign expected, int observed_sign,
                                   bool confounded);

/// Other factors F' that co-occur with the pair's factor on more than 60% of
/// its present days (days with both factors logged, up to `up_to_day`) and
/// whose effect on the same outcome is more than 1.2 times stronger.
/// `effects` must contain `pair`; factors without an entry are skipped.
std::vector<FactorId> detect_confounders(const PairKey& pair, const Dataset& dataset,
                                         const std::map<PairKey, double>& effects, int up_to_day);

/// P(other = 1 | factor = 1) over days <= up_to_day with both logged; 0 if factor never present.
double cooccurrence_rate(const Dataset& dataset, const FactorId& factor, const FactorId& other, int up_to_day);

struct Insight {
    PairKey pair;
    int day = 0;
    Tier tier = Tier::null;
    double effect_location = 0.0;
    std::pair<double, double> ci{0.0, 0.0};
    double p_value = 1.0;
    PlausibilityBreakdown plausibility;
    std::vector<FactorId> confounders;
};

/// Insights for every timeline whose tier at `day` is above null, ordered
/// by (outcome, factor). Confounder effects are posterior locations at `day`
/// for every factor on the insight's outcome.
std::vector<Insight> build_insights(const TimelineMap& timelines, const Dataset& dataset, const ValenceMap& valences,
                                    int day, const PriorConfig& prior, DesignMode design = DesignMode::pairwise);

std::string insights_to_json(const std::vector<Insight>& insights);

} // namespace nof1

#endif
