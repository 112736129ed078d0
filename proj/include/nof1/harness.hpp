#ifndef NOF1_HARNESS_HPP
#define NOF1_HARNESS_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nof1/baselines.hpp"
#include "nof1/conjugate.hpp"
#include "nof1/dataset.hpp"
#include "nof1/generator.hpp"
#include "nof1/insight.hpp"
#include "nof1/tier_engine.hpp"

namespace nof1 {

enum class DetectionMethod { progressive_clue, progressive_pattern, progressive_correlation, fixed, naive };

std::string to_string(DetectionMethod method);

struct DetectionRecord {
    PairKey pair;
    DetectionMethod method = DetectionMethod::progressive_clue;
    std::optional<int> day;
};

/// How insights are counted for the false discovery rate.
enum class FdrCounting {
    max_tier_by_day, // each pair once if it reached any tier on or before the FDR day
    tier_at_day,     // each pair once if its tier on the FDR day is above null
    per_tier_event,  // each (pair, tier) first attained on or before the FDR day
};

std::string to_string(FdrCounting counting);
FdrCounting parse_fdr_counting(const std::string& name);

struct EvaluationConfig {
    int fdr_day = 30;
    int coverage_day = 90;
    int direction_cutoff_day = 14; // directional accuracy counts insights strictly before this day
    int ks_samples = 1000;
    FdrCounting fdr_counting = FdrCounting::max_tier_by_day;

    void validate() const;
};

/// Everything needed to analyse one dataset.
struct AnalysisConfig {
    PriorConfig prior;
    EngineConfig engine;
    BaselineConfig baselines;
    EvaluationConfig evaluation;
    ValenceMap valences = default_valences();
    std::vector<PairKey> pairs; // empty: the ground-truth roster

    void validate() const;
};

struct PairKs {
    PairKey pair;
    double statistic = 0.0;
    double p_value = 1.0;
};

/// Per-dataset metric values. Optional metrics are vacuous when their
/// denominator is empty (no true pair attained the tier, no insights, ...).
struct DatasetMetrics {
    std::optional<double> time_to_clue;
    std::optional<double> time_to_pattern;
    std::optional<double> time_to_correlation;
    std::optional<double> time_to_fixed;
    std::optional<double> time_to_naive;
    double fdr = 0.0;
    bool fdr_empty_denominator = true;
    int fdr_false = 0;
    int fdr_total = 0;
    std::optional<double> ci_coverage;
    std::optional<double> directional_accuracy;
    int direction_correct = 0;
    int direction_total = 0;
    double naive_fdr = 0.0;
    double fixed_fdr = 0.0;
    bool ordering_holds = true;      // clue <= pattern <= correlation where all attained
    bool clue_before_fixed = true;   // clue strictly before the fixed baseline, where all tiers attained
    bool all_clue_before_fixed = true; // clue strictly before fixed for every true pair that reached clue
};

struct MetricSummary {
    int n = 0; // datasets with a non-vacuous value
    double mean = 0.0;
    double sd = 0.0;
    double ci_lo = 0.0; // 2.5th percentile across datasets
    double ci_hi = 0.0; // 97.5th percentile across datasets
};

struct MonteCarloRow {
    int index = 0;
    std::uint64_t seed = 0;
    double noise_sd = 0.0;
    std::map<PairKey, double> betas;
    DatasetMetrics metrics;
};

struct ExperimentReport {
    std::vector<DetectionRecord> detections;
    std::vector<PairKs> ks_results;
    DatasetMetrics metrics;
    std::optional<std::map<std::string, MetricSummary>> mc_summary;
    std::vector<MonteCarloRow> mc_rows;
    std::map<PairKey, TierTimeline> timelines; // single-dataset mode only
};

struct ExecutionOptions {
    Execution mode = Execution::parallel;
    int jobs = 0; // 0: OpenMP default
};

/// Runs the progressive engine and both baselines over the ground-truth
/// roster and computes every metric for one dataset.
ExperimentReport evaluate_single(const Dataset& dataset, const GroundTruthSpec& truth, const AnalysisConfig& analysis,
                                 Execution execution = Execution::serial);

/// Per-dataset effect-size and noise variation for Monte Carlo runs.
struct MonteCarloConfig {
    int n_datasets = 100;
    std::uint64_t master_seed = 42;
    double beta_min = 1.5;
    double beta_max = 3.0;
    double noise_min = 1.0;
    double noise_max = 1.8;
    bool vary = true;

    void validate() const;
};

/// Generator configuration for Monte Carlo dataset `index`: its seed is
/// split from the master seed and each true effect keeps its sign with
/// magnitude ~ U[beta_min, beta_max]; noise_sd ~ U[noise_min, noise_max].
GeneratorConfig monte_carlo_dataset_config(const GeneratorConfig& base, const MonteCarloConfig& mc, int index);

/// Metric names in summary order: the six headline metrics first.
const std::vector<std::string>& summary_metric_names();

std::map<std::string, MetricSummary> summarize(const std::vector<MonteCarloRow>& rows);

ExperimentReport monte_carlo(const GeneratorConfig& base, const AnalysisConfig& analysis, const MonteCarloConfig& mc,
                             const ExecutionOptions& execution = {});

struct SweepRow {
    std::string parameter;
    double value = 0.0;
    std::map<std::string, MetricSummary> summary;
    std::vector<MonteCarloRow> rows;
};

/// Supported parameters: coefficient_variance, clue_mass, pattern_mass, kl_threshold.
std::vector<SweepRow> sensitivity_sweep(const std::map<std::string, std::vector<double>>& grid,
                                        const GeneratorConfig& base, const AnalysisConfig& analysis,
                                        const MonteCarloConfig& mc, const ExecutionOptions& execution = {});

/// day,location,ci_lo,ci_hi,tier
std::string contraction_trace(const TierTimeline& timeline);

std::string report_to_json(const ExperimentReport& report);
std::string report_to_markdown(const ExperimentReport& report);
/// One row per Monte Carlo dataset.
std::string mc_rows_to_csv(const std::vector<MonteCarloRow>& rows);
/// Long format: parameter,value,metric,n,mean,sd,ci_lo,ci_hi
std::string sweep_to_csv(const std::vector<SweepRow>& rows);

} // namespace nof1

#endif
