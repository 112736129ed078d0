#include "nof1/baselines.hpp"

#include <cmath>
#include <stdexcept>

#include "nof1/special_functions.hpp"

namespace nof1 {

namespace {

struct Moments {
    double mean = 0.0;
    double variance = 0.0; // unbiased
};

Moments moments(std::span<const double> xs)
{
    Moments m;
    for (double x : xs) m.mean += x;
    m.mean /= static_cast<double>(xs.size());
    for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
    m.variance /= static_cast<double>(xs.size() - 1);
    return m;
}

bool fixed_detects(const Dataset& dataset, const PairKey& pair, int day, const BaselineConfig& config)
{
    const auto groups = pair_samples(dataset, pair, day);
    const auto n = static_cast<int>(groups.present.size() + groups.absent.size());
    if (n < config.fixed_min_observations) return false;
    const auto t = welch_t_test(groups.present, groups.absent);
    return !t.degenerate && t.p_value < config.fixed_alpha;
}

bool naive_detects(const Dataset& dataset, const PairKey& pair, int day, const BaselineConfig& config)
{
    const auto groups = pair_samples(dataset, pair, day);
    const auto t = welch_t_test(groups.present, groups.absent);
    return !t.degenerate && t.p_value < config.naive_alpha;
}

} // namespace

TTestResult welch_t_test(std::span<const double> group1, std::span<const double> group0)
{
    TTestResult r;
    if (group1.size() < 2 || group0.size() < 2) {
        r.degenerate = true;
        return r;
    }
    const auto m1 = moments(group1);
    const auto m0 = moments(group0);
    r.mean_diff = m1.mean - m0.mean;
    if (!(m1.variance > 0.0) || !(m0.variance > 0.0)) {
        r.degenerate = true;
        return r;
    }
    const double v1 = m1.variance / static_cast<double>(group1.size());
    const double v0 = m0.variance / static_cast<double>(group0.size());
    const double se2 = v1 + v0;
    r.t_stat = r.mean_diff / std::sqrt(se2);
    r.dof = se2 * se2 /
            (v1 * v1 / static_cast<double>(group1.size() - 1) + v0 * v0 / static_cast<double>(group0.size() - 1));
    r.p_value = 2.0 * special::student_t_cdf(-std::fabs(r.t_stat), r.dof);
    return r;
}

std::vector<PairKey> fixed_threshold_detector(const Dataset& dataset, std::span<const PairKey> pairs, int day,
                                              const BaselineConfig& config)
{
    if (day < 1) throw std::invalid_argument("day must be >= 1");
    std::vector<PairKey> out;
    for (const auto& pair : pairs)
        if (fixed_detects(dataset, pair, day, config)) out.push_back(pair);
    return out;
}

std::vector<PairKey> naive_detector(const Dataset& dataset, std::span<const PairKey> pairs, int day,
                                    const BaselineConfig& config)
{
    if (day < 1) throw std::invalid_argument("day must be >= 1");
    std::vector<PairKey> out;
    for (const auto& pair : pairs)
        if (naive_detects(dataset, pair, day, config)) out.push_back(pair);
    return out;
}

std::optional<int> first_fixed_detection(const Dataset& dataset, const PairKey& pair, const BaselineConfig& config)
{
    for (int day = 1; day <= dataset.span(); ++day)
        if (fixed_detects(dataset, pair, day, config)) return day;
    return std::nullopt;
}

std::optional<int> first_naive_detection(const Dataset& dataset, const PairKey& pair, const BaselineConfig& config)
{
    for (int day = 1; day <= dataset.span(); ++day)
        if (naive_detects(dataset, pair, day, config)) return day;
    return std::nullopt;
}

} // namespace nof1
