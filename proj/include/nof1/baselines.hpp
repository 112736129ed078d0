#ifndef NOF1_BASELINES_HPP
#define NOF1_BASELINES_HPP

#include <optional>
#include <span>
#include <vector>

#include "nof1/dataset.hpp"

namespace nof1 {

struct TTestResult {
    double t_stat = 0.0;
    double dof = 0.0;
    double p_value = 1.0; // two-sided
    double mean_diff = 0.0; // mean(group1) - mean(group0)
    bool degenerate = false;
};

/// Welch's unequal-variance two-sample t-test. Groups with fewer than two
/// values or zero variance give p = 1 and degenerate = true.
TTestResult welch_t_test(std::span<const double> group1, std::span<const double> group0);

struct BaselineConfig {
    int fixed_min_observations = 30; // pair-complete days
    double fixed_alpha = 0.05;
    double naive_alpha = 0.20;
};

/// Pairs with >= fixed_min_observations complete days and Welch p < fixed_alpha.
std::vector<PairKey> fixed_threshold_detector(const Dataset& dataset, std::span<const PairKey> pairs, int day,
                                              const BaselineConfig& config = {});

/// Pairs with Welch p < naive_alpha at any sample size.
std::vector<PairKey> naive_detector(const Dataset& dataset, std::span<const PairKey> pairs, int day,
                                    const BaselineConfig& config = {});

/// First day (1..span) on which each detector flags the pair.
std::optional<int> first_fixed_detection(const Dataset& dataset, const PairKey& pair, const BaselineConfig& config = {});
std::optional<int> first_naive_detection(const Dataset& dataset, const PairKey& pair, const BaselineConfig& config = {});

} // namespace nof1

#endif
