#ifndef NOF1_TIER_ENGINE_HPP
#define NOF1_TIER_ENGINE_HPP

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nof1/conjugate.hpp"
#include "nof1/dataset.hpp"

namespace nof1 {

enum class Tier { null = 0, clue = 1, pattern = 2, correlation = 3 };

std::string to_string(Tier tier);
Tier parse_tier(const std::string& name);

/// p-value cutoff in force from `from_day` onward.
struct ThresholdBand {
    int from_day = 1;
    double p_threshold = 0.0;
    friend bool operator==(const ThresholdBand&, const ThresholdBand&) = default;
};

std::vector<ThresholdBand> default_adaptive_schedule();

enum class DesignMode {
    pairwise,     // [1, indicator] per pair
    multivariate, // [1, all factors], complete cases across every factor
};

enum class Execution { serial, parallel };

struct EngineConfig {
    double clue_mass = 0.70;
    double pattern_mass = 0.85;
    double ci_level = 0.95;
    int kl_window_days = 7;
    double kl_threshold = 0.1;
    std::vector<ThresholdBand> adaptive_schedule = default_adaptive_schedule();
    bool ppc_gate_enabled = false;
    double ppc_min_coverage = 0.90;
    DesignMode design = DesignMode::pairwise;

    void validate() const;
};

double adaptive_threshold(int day, std::span<const ThresholdBand> schedule);

/// Tier decision for one pair on one day, evaluated top-down: correlation,
/// pattern, clue, null. `predictive_coverage` is consulted only when the
/// predictive-check gate is enabled; a missing value then fails the gate.
Tier classify_tier(const CoefficientMarginal& marginal, const std::optional<CoefficientMarginal>& lagged, int day,
                   double p_value, const EngineConfig& config,
                   std::optional<double> predictive_coverage = std::nullopt);

struct TimelineEntry {
    int day = 0;
    Tier tier = Tier::null;
    double location = 0.0;
    double scale = 0.0;
    double dof = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double prob_directional = 0.5; // max(P(beta > 0), P(beta < 0))
    int direction = 0;             // +1 when P(beta > 0) >= P(beta < 0), else -1
    double p_value = 1.0;
    std::optional<double> kl_vs_lag;
    long n_obs = 0;

    CoefficientMarginal marginal() const { return {location, scale, dof}; }
    friend bool operator==(const TimelineEntry&, const TimelineEntry&) = default;
};

struct TierTimeline {
    PairKey pair;
    std::vector<TimelineEntry> entries;

    const TimelineEntry& at_day(int day) const;
    friend bool operator==(const TierTimeline&, const TierTimeline&) = default;
};

using TimelineMap = std::map<PairKey, TierTimeline>;

/// Posterior marginal of the pair's effect coefficient on data up to `day`.
CoefficientMarginal pair_marginal(const Dataset& dataset, const PairKey& pair, int day, const PriorConfig& prior,
                                  DesignMode design = DesignMode::pairwise);

/// Daily classification of a single pair for days 1..dataset.span().
TierTimeline run_pair(const Dataset& dataset, const PairKey& pair, const PriorConfig& prior,
                      const EngineConfig& config);

/// run_pair over every requested pair. The parallel path distributes pairs
/// across OpenMP threads and returns the same map as the serial path.
TimelineMap run_engine(const Dataset& dataset, std::span<const PairKey> pairs, const PriorConfig& prior,
                       const EngineConfig& config, Execution execution = Execution::parallel);

std::optional<int> first_attainment(const TierTimeline& timeline, Tier tier);

/// `day,tier,location,ci_lo,ci_hi,prob_dir,p_value,kl`; prob_dir carries the
/// direction as its sign, kl is empty before a lagged posterior exists.
std::string timeline_to_csv(const TierTimeline& timeline);

} // namespace nof1

#endif
