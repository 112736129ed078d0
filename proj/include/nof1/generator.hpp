#ifndef NOF1_GENERATOR_HPP
#define NOF1_GENERATOR_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nof1/dataset.hpp"
#include "nof1/rng.hpp"

namespace nof1 {

/// i.i.d. daily Bernoulli.
struct BernoulliProcess {
    double rate = 0.5;
};

/// Bernoulli with one rate Monday-Friday and another on weekends. Day 1 is a Monday.
struct WeekdayProcess {
    double weekday_rate = 0.70;
    double weekend_rate = 0.35;
};

/// Two-state Markov chain; day 1 is drawn from the stationary distribution.
struct MarkovProcess {
    double p_stay = 0.58;  // P(1 | yesterday 1)
    double p_start = 0.28; // P(1 | yesterday 0)
};

/// Consecutive blocks of `block_days` days are independently marked as
/// "high" blocks with probability block_rate; the daily rate is inside_rate
/// within high blocks and outside_rate elsewhere.
struct ClusteredProcess {
    int block_days = 7;
    double block_rate = 0.25;
    double inside_rate = 0.75;
    double outside_rate = 1.0 / 12.0;
};

using FactorProcess = std::variant<BernoulliProcess, WeekdayProcess, MarkovProcess, ClusteredProcess>;

/// Long-run fraction of days with the factor present.
double stationary_rate(const FactorProcess& process);

struct FactorSpec {
    FactorId name;
    FactorProcess process;
};

struct VitalSpec {
    VitalId name;
    double baseline = 5.0;
};

struct EffectSpec {
    FactorId factor;
    VitalId outcome;
    double beta = 0.0;
};

struct GeneratorConfig {
    int span_days = 90;
    std::vector<VitalSpec> vitals;
    std::vector<FactorSpec> factors;
    std::vector<EffectSpec> effects;
    std::vector<PairKey> null_pairs;
    double noise_sd = 1.2;
    double missing_rate = 0.10;
    std::uint64_t seed = 42;

    void validate() const;
    Schema schema() const;
};

/// Mood/anxiety/energy with coffee, exercise, poor_sleep and stress, the three
/// injected effects and the three evaluated null pairs.
GeneratorConfig default_generator_config();

struct GroundTruthSpec {
    std::map<PairKey, double> true_effects;
    std::vector<PairKey> null_pairs;

    std::vector<PairKey> all_pairs() const; // true pairs then null pairs, each sorted
    friend bool operator==(const GroundTruthSpec&, const GroundTruthSpec&) = default;
};

/// Presence of a factor on `day` given the previous day's value. `stream`
/// must be the factor's own stream; draws are keyed by day (and block).
bool factor_process_step(const FactorProcess& process, int day, std::optional<bool> previous, const CounterRng& stream);

std::pair<Dataset, GroundTruthSpec> generate(const GeneratorConfig& config);

std::string ground_truth_to_json(const GroundTruthSpec& truth);
GroundTruthSpec ground_truth_from_json(const std::string& text);
void save_ground_truth(const GroundTruthSpec& truth, const std::filesystem::path& path);
GroundTruthSpec load_ground_truth(const std::filesystem::path& path);

} // namespace nof1

#endif
