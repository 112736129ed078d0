#include "nof1/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <numeric>
#include <set>
#include <stdexcept>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nof1 {

namespace {

using ordered_json = nlohmann::ordered_json;

std::optional<double> mean_of(const std::vector<double>& xs)
{
    if (xs.empty()) return std::nullopt;
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double percentile(const std::vector<double>& sorted, double q)
{
    if (sorted.size() == 1) return sorted.front();
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MetricSummary summarize_values(std::vector<double> values)
{
    MetricSummary s;
    s.n = static_cast<int>(values.size());
    if (values.empty()) return s;
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    std::sort(values.begin(), values.end());
    s.ci_lo = percentile(values, 0.025);
    s.ci_hi = percentile(values, 0.975);
    return s;
}

std::optional<double> metric_value(const DatasetMetrics& m, const std::string& name)
{
    if (name == "time_to_clue") return m.time_to_clue;
    if (name == "time_to_pattern") return m.time_to_pattern;
    if (name == "time_to_correlation") return m.time_to_correlation;
    if (name == "fdr") return m.fdr;
    if (name == "ci_coverage") return m.ci_coverage;
    if (name == "directional_accuracy") return m.directional_accuracy;
    if (name == "time_to_fixed") return m.time_to_fixed;
    if (name == "time_to_naive") return m.time_to_naive;
    if (name == "naive_fdr") return m.naive_fdr;
    if (name == "fixed_fdr") return m.fixed_fdr;
    if (name == "clue_before_fixed") return m.all_clue_before_fixed ? 1.0 : 0.0;
    throw std::invalid_argument("unknown metric '" + name + "'");
}

ordered_json optional_json(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json optional_json(const std::optional<int>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

ordered_json metrics_json(const DatasetMetrics& m)
{
    ordered_json j;
    j["time_to_clue"] = optional_json(m.time_to_clue);
    j["time_to_pattern"] = optional_json(m.time_to_pattern);
    j["time_to_correlation"] = optional_json(m.time_to_correlation);
    j["time_to_fixed"] = optional_json(m.time_to_fixed);
    j["time_to_naive"] = optional_json(m.time_to_naive);
    j["fdr"] = m.fdr;
    j["fdr_false"] = m.fdr_false;
    j["fdr_total"] = m.fdr_total;
    j["fdr_empty_denominator"] = m.fdr_empty_denominator;
    j["ci_coverage"] = optional_json(m.ci_coverage);
    j["directional_accuracy"] = optional_json(m.directional_accuracy);
    j["direction_correct"] = m.direction_correct;
    j["direction_total"] = m.direction_total;
    j["naive_fdr"] = m.naive_fdr;
    j["fixed_fdr"] = m.fixed_fdr;
    j["ordering_holds"] = m.ordering_holds;
    j["clue_before_fixed"] = m.clue_before_fixed;
    j["all_clue_before_fixed"] = m.all_clue_before_fixed;
    return j;
}

std::string fmt(double v, const char* spec = "%.4g")
{
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt(*v) : std::string("-"); }

std::string fmt_day(const std::optional<int>& d) { return d ? std::to_string(*d) : std::string("-"); }

template <class Body>
void for_each_index(int n, const ExecutionOptions& execution, Body body)
{
    if (execution.mode == Execution::serial) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    std::exception_ptr failure;
#ifdef _OPENMP
    const int threads = execution.jobs > 0 ? execution.jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(threads)
#endif
    for (int i = 0; i < n; ++i) {
        try {
            body(i);
        } catch (...) {
#pragma omp critical(nof1_harness_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
}

} // namespace

std::string to_string(DetectionMethod method)
{
    switch (method) {
    case DetectionMethod::progressive_clue: return "progressive_clue";
    case DetectionMethod::progressive_pattern: return "progressive_pattern";
    case DetectionMethod::progressive_correlation: return "progressive_correlation";
    case DetectionMethod::fixed: return "fixed";
    case DetectionMethod::naive: return "naive";
    }
    return "unknown";
}

std::string to_string(FdrCounting counting)
{
    switch (counting) {
    case FdrCounting::max_tier_by_day: return "max_tier_by_day";
    case FdrCounting::tier_at_day: return "tier_at_day";
    case FdrCounting::per_tier_event: return "per_tier_event";
    }
    return "max_tier_by_day";
}

FdrCounting parse_fdr_counting(const std::string& name)
{
    if (name == "max_tier_by_day") return FdrCounting::max_tier_by_day;
    if (name == "tier_at_day") return FdrCounting::tier_at_day;
    if (name == "per_tier_event") return FdrCounting::per_tier_event;
    throw std::invalid_argument("unknown fdr_counting '" + name + "'");
}

void EvaluationConfig::validate() const
{
    if (fdr_day < 1 || coverage_day < 1 || direction_cutoff_day < 1)
        throw std::invalid_argument("evaluation days must be >= 1");
    if (ks_samples < 100) throw std::invalid_argument("ks_samples must be >= 100");
}

void AnalysisConfig::validate() const
{
    prior.validate();
    engine.validate();
    evaluation.validate();
}

void MonteCarloConfig::validate() const
{
    if (n_datasets < 2) throw std::invalid_argument("Monte Carlo needs n_datasets >= 2");
    if (!(beta_min <= beta_max) || !(noise_min <= noise_max) || !(noise_min > 0.0))
        throw std::invalid_argument("invalid Monte Carlo variation ranges");
}

ExperimentReport evaluate_single(const Dataset& dataset, const GroundTruthSpec& truth, const AnalysisConfig& analysis,
                                 Execution execution)
{
    analysis.validate();
    const std::vector<PairKey> pairs = analysis.pairs.empty() ? truth.all_pairs() : analysis.pairs;
    for (const auto& [pair, beta] : truth.true_effects)
        if (!dataset.has_pair(pair)) throw std::invalid_argument("truth pair " + to_string(pair) + " not in dataset");
    for (const auto& pair : truth.null_pairs)
        if (!dataset.has_pair(pair)) throw std::invalid_argument("null pair " + to_string(pair) + " not in dataset");

    ExperimentReport report;
    report.timelines = run_engine(dataset, pairs, analysis.prior, analysis.engine, execution);
    const int span = dataset.span();
    const auto& eval = analysis.evaluation;
    auto is_true = [&](const PairKey& p) { return truth.true_effects.count(p) > 0; };

    DatasetMetrics& m = report.metrics;
    std::vector<double> clue_days, pattern_days, correlation_days, fixed_days, naive_days;
    for (const auto& pair : pairs) {
        const auto& timeline = report.timelines.at(pair);
        const auto clue = first_attainment(timeline, Tier::clue);
        const auto pattern = first_attainment(timeline, Tier::pattern);
        const auto correlation = first_attainment(timeline, Tier::correlation);
        const auto fixed = first_fixed_detection(dataset, pair, analysis.baselines);
        const auto naive = first_naive_detection(dataset, pair, analysis.baselines);
        report.detections.push_back({pair, DetectionMethod::progressive_clue, clue});
        report.detections.push_back({pair, DetectionMethod::progressive_pattern, pattern});
        report.detections.push_back({pair, DetectionMethod::progressive_correlation, correlation});
        report.detections.push_back({pair, DetectionMethod::fixed, fixed});
        report.detections.push_back({pair, DetectionMethod::naive, naive});
        if (!is_true(pair)) continue;

        if (clue) clue_days.push_back(*clue);
        if (pattern) pattern_days.push_back(*pattern);
        if (correlation) correlation_days.push_back(*correlation);
        if (fixed) fixed_days.push_back(*fixed);
        if (naive) naive_days.push_back(*naive);
        // An undetected baseline counts as later than any progressive day.
        const bool clue_beats_fixed = clue && (!fixed || *clue < *fixed);
        if (clue && !clue_beats_fixed) m.all_clue_before_fixed = false;
        if (clue && pattern && correlation) {
            if (!(*clue <= *pattern && *pattern <= *correlation)) m.ordering_holds = false;
            if (!clue_beats_fixed) m.clue_before_fixed = false;
        }
    }
    m.time_to_clue = mean_of(clue_days);
    m.time_to_pattern = mean_of(pattern_days);
    m.time_to_correlation = mean_of(correlation_days);
    m.time_to_fixed = mean_of(fixed_days);
    m.time_to_naive = mean_of(naive_days);

    // False discovery rate.
    const int fdr_day = std::min(eval.fdr_day, span);
    for (const auto& pair : pairs) {
        const auto& timeline = report.timelines.at(pair);
        int events = 0;
        if (fdr_day >= 1) {
            switch (eval.fdr_counting) {
            case FdrCounting::max_tier_by_day: {
                const auto first = first_attainment(timeline, Tier::clue);
                events = first && *first <= fdr_day ? 1 : 0;
                break;
            }
            case FdrCounting::tier_at_day: events = timeline.at_day(fdr_day).tier > Tier::null ? 1 : 0; break;
            case FdrCounting::per_tier_event:
                for (Tier t : {Tier::clue, Tier::pattern, Tier::correlation}) {
                    const auto first = first_attainment(timeline, t);
                    if (first && *first <= fdr_day) ++events;
                }
                break;
            }
        }
        m.fdr_total += events;
        if (!is_true(pair)) m.fdr_false += events;
    }
    m.fdr_empty_denominator = m.fdr_total == 0;
    m.fdr = m.fdr_total == 0 ? 0.0 : static_cast<double>(m.fdr_false) / static_cast<double>(m.fdr_total);

    // Baselines count each pair once if it was flagged on or before the FDR day.
    auto baseline_fdr = [&](DetectionMethod method) {
        int total = 0, wrong = 0;
        for (const auto& d : report.detections) {
            if (d.method != method || !d.day || *d.day > fdr_day) continue;
            ++total;
            if (!is_true(d.pair)) ++wrong;
        }
        return total == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(total);
    };
    m.naive_fdr = baseline_fdr(DetectionMethod::naive);
    m.fixed_fdr = baseline_fdr(DetectionMethod::fixed);

    // Coverage, calibration and direction on true pairs.
    const int coverage_day = std::min(eval.coverage_day, span);
    int covered = 0;
    int true_pairs = 0;
    for (const auto& [pair, beta] : truth.true_effects) {
        if (!report.timelines.count(pair) || coverage_day < 1) continue;
        const auto& timeline = report.timelines.at(pair);
        const auto& entry = timeline.at_day(coverage_day);
        ++true_pairs;
        if (beta >= entry.ci_lo && beta <= entry.ci_hi) ++covered;

        const auto rows = pair_rows(dataset, pair, coverage_day);
        if (!rows.outcome.empty()) {
            const auto design = pairwise_design(rows.indicator);
            const Eigen::VectorXd y =
                Eigen::Map<const Eigen::VectorXd>(rows.outcome.data(), static_cast<Eigen::Index>(rows.outcome.size()));
            const auto state = posterior_update(analysis.prior, design, y);
            const auto ks = ks_calibration(state, design, y, eval.ks_samples);
            report.ks_results.push_back({pair, ks.statistic, ks.p_value});
        }

        const int truth_sign = beta > 0.0 ? 1 : beta < 0.0 ? -1 : 0;
        for (Tier t : {Tier::clue, Tier::pattern, Tier::correlation}) {
            const auto first = first_attainment(timeline, t);
            if (!first || *first >= eval.direction_cutoff_day) continue;
            ++m.direction_total;
            if (timeline.at_day(*first).direction == truth_sign) ++m.direction_correct;
        }
    }
    if (true_pairs > 0) m.ci_coverage = static_cast<double>(covered) / static_cast<double>(true_pairs);
    if (m.direction_total > 0)
        m.directional_accuracy = static_cast<double>(m.direction_correct) / static_cast<double>(m.direction_total);
    return report;
}

GeneratorConfig monte_carlo_dataset_config(const GeneratorConfig& base, const MonteCarloConfig& mc, int index)
{
    GeneratorConfig cfg = base;
    cfg.seed = split_seed(mc.master_seed, static_cast<std::uint64_t>(index));
    if (!mc.vary) return cfg;
    const auto variation = CounterRng(cfg.seed).child("variation");
    for (std::size_t j = 0; j < cfg.effects.size(); ++j) {
        auto& e = cfg.effects[j];
        const double magnitude = mc.beta_min + (mc.beta_max - mc.beta_min) * variation.uniform(j);
        e.beta = e.beta > 0.0 ? magnitude : e.beta < 0.0 ? -magnitude : 0.0;
    }
    cfg.noise_sd = mc.noise_min + (mc.noise_max - mc.noise_min) * variation.uniform(1000);
    return cfg;
}

const std::vector<std::string>& summary_metric_names()
{
    static const std::vector<std::string> names{
        "time_to_clue",  "time_to_pattern", "time_to_correlation", "fdr",       "ci_coverage",
        "directional_accuracy", "time_to_fixed", "time_to_naive", "naive_fdr", "fixed_fdr",
        "clue_before_fixed"};
    return names;
}

std::map<std::string, MetricSummary> summarize(const std::vector<MonteCarloRow>& rows)
{
    std::map<std::string, MetricSummary> out;
    for (const auto& name : summary_metric_names()) {
        std::vector<double> values;
        for (const auto& row : rows)
            if (auto v = metric_value(row.metrics, name)) values.push_back(*v);
        out[name] = summarize_values(std::move(values));
    }
    return out;
}

ExperimentReport monte_carlo(const GeneratorConfig& base, const AnalysisConfig& analysis, const MonteCarloConfig& mc,
                             const ExecutionOptions& execution)
{
    mc.validate();
    analysis.validate();
    base.validate();
    std::vector<MonteCarloRow> rows(static_cast<std::size_t>(mc.n_datasets));
    for_each_index(mc.n_datasets, execution, [&](int i) {
        const auto cfg = monte_carlo_dataset_config(base, mc, i);
        const auto [dataset, truth] = generate(cfg);
        auto single = evaluate_single(dataset, truth, analysis, Execution::serial);
        auto& row = rows[static_cast<std::size_t>(i)];
        row.index = i;
        row.seed = cfg.seed;
        row.noise_sd = cfg.noise_sd;
        row.betas = truth.true_effects;
        row.metrics = single.metrics;
    });
    ExperimentReport report;
    report.mc_summary = summarize(rows);
    report.mc_rows = std::move(rows);
    return report;
}

std::vector<SweepRow> sensitivity_sweep(const std::map<std::string, std::vector<double>>& grid,
                                        const GeneratorConfig& base, const AnalysisConfig& analysis,
                                        const MonteCarloConfig& mc, const ExecutionOptions& execution)
{
    static const std::set<std::string> known{"coefficient_variance", "clue_mass", "pattern_mass", "kl_threshold"};
    for (const auto& [name, values] : grid)
        if (!known.count(name)) throw std::invalid_argument("unknown sweep parameter '" + name + "'");
    std::vector<SweepRow> out;
    for (const auto& [name, values] : grid) {
        for (double value : values) {
            AnalysisConfig a = analysis;
            if (name == "coefficient_variance") a.prior.coefficient_variance = value;
            else if (name == "clue_mass") a.engine.clue_mass = value;
            else if (name == "pattern_mass") a.engine.pattern_mass = value;
            else a.engine.kl_threshold = value;
            auto report = monte_carlo(base, a, mc, execution);
            SweepRow row;
            row.parameter = name;
            row.value = value;
            row.summary = *report.mc_summary;
            row.rows = std::move(report.mc_rows);
            out.push_back(std::move(row));
        }
    }
    return out;
}

std::string contraction_trace(const TierTimeline& timeline)
{
    if (timeline.entries.empty()) throw std::invalid_argument("contraction_trace: empty timeline");
    std::string out = "day,location,ci_lo,ci_hi,tier\n";
    for (const auto& e : timeline.entries) {
        out += std::to_string(e.day) + "," + fmt(e.location, "%.10g") + "," + fmt(e.ci_lo, "%.10g") + "," +
               fmt(e.ci_hi, "%.10g") + "," + to_string(e.tier) + "\n";
    }
    return out;
}

std::string report_to_json(const ExperimentReport& report)
{
    ordered_json j;
    auto detections = ordered_json::array();
    for (const auto& d : report.detections)
        detections.push_back({{"factor", d.pair.factor},
                              {"outcome", d.pair.outcome},
                              {"method", to_string(d.method)},
                              {"day", optional_json(d.day)}});
    j["detections"] = std::move(detections);
    j["metrics"] = metrics_json(report.metrics);
    j["fdr_at_day30"] = report.metrics.fdr;
    j["ci_coverage_day90"] = optional_json(report.metrics.ci_coverage);
    j["directional_accuracy_pre14"] = optional_json(report.metrics.directional_accuracy);
    auto ks = ordered_json::array();
    for (const auto& k : report.ks_results)
        ks.push_back({{"factor", k.pair.factor}, {"outcome", k.pair.outcome}, {"statistic", k.statistic}, {"p_value", k.p_value}});
    j["ks_results"] = std::move(ks);
    if (report.mc_summary) {
        ordered_json summary;
        for (const auto& name : summary_metric_names()) {
            const auto& s = report.mc_summary->at(name);
            summary[name] = {{"n", s.n}, {"mean", s.mean}, {"sd", s.sd}, {"ci_lo", s.ci_lo}, {"ci_hi", s.ci_hi}};
        }
        j["mc_summary"] = std::move(summary);
        j["n_datasets"] = report.mc_rows.size();
    } else {
        j["mc_summary"] = nullptr;
    }
    return j.dump(2) + "\n";
}

std::string report_to_markdown(const ExperimentReport& report)
{
    std::string out;
    if (!report.detections.empty()) {
        out += "## Days to detection\n\n| Pair | Clue | Pattern | Correlation | Fixed (p<0.05) | Naive (p<0.20) |\n";
        out += "|---|---|---|---|---|---|\n";
        for (std::size_t i = 0; i + 4 < report.detections.size(); i += 5) {
            out += "| " + to_string(report.detections[i].pair);
            for (std::size_t k = 0; k < 5; ++k) out += " | " + fmt_day(report.detections[i + k].day);
            out += " |\n";
        }
        const auto& m = report.metrics;
        out += "\n## Metrics\n\n| Metric | Value |\n|---|---|\n";
        out += "| False discovery rate (" + std::to_string(m.fdr_false) + "/" + std::to_string(m.fdr_total) + ") | " +
               fmt(m.fdr) + " |\n";
        out += "| Credible interval coverage | " + fmt_opt(m.ci_coverage) + " |\n";
        out += "| Directional accuracy (" + std::to_string(m.direction_correct) + "/" +
               std::to_string(m.direction_total) + ") | " + fmt_opt(m.directional_accuracy) + " |\n";
        out += "| Naive baseline FDR | " + fmt(m.naive_fdr) + " |\n";
        out += "| Fixed baseline FDR | " + fmt(m.fixed_fdr) + " |\n";
        if (!report.ks_results.empty()) {
            out += "\n## Predictive calibration (KS on PIT)\n\n| Pair | D | p |\n|---|---|---|\n";
            for (const auto& k : report.ks_results)
                out += "| " + to_string(k.pair) + " | " + fmt(k.statistic) + " | " + fmt(k.p_value) + " |\n";
        }
    }
    if (report.mc_summary) {
        out += "## Monte Carlo summary (" + std::to_string(report.mc_rows.size()) + " datasets)\n\n";
        out += "| Metric | n | Mean | SD | 2.5% | 97.5% |\n|---|---|---|---|---|---|\n";
        for (const auto& name : summary_metric_names()) {
            const auto& s = report.mc_summary->at(name);
            out += "| " + name + " | " + std::to_string(s.n) + " | " + fmt(s.mean) + " | " + fmt(s.sd) + " | " +
                   fmt(s.ci_lo) + " | " + fmt(s.ci_hi) + " |\n";
        }
    }
    return out;
}

std::string mc_rows_to_csv(const std::vector<MonteCarloRow>& rows)
{
    std::string out = "index,seed,noise_sd";
    for (const auto& name : summary_metric_names()) out += "," + name;
    out += ",ordering_holds\n";
    for (const auto& row : rows) {
        out += std::to_string(row.index) + "," + std::to_string(row.seed) + "," + fmt(row.noise_sd, "%.10g");
        for (const auto& name : summary_metric_names()) {
            const auto v = metric_value(row.metrics, name);
            out += ",";
            if (v) out += fmt(*v, "%.10g");
        }
        out += row.metrics.ordering_holds ? ",1\n" : ",0\n";
    }
    return out;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows)
{
    std::string out = "parameter,value,metric,n,mean,sd,ci_lo,ci_hi\n";
    for (const auto& row : rows) {
        for (const auto& name : summary_metric_names()) {
            const auto& s = row.summary.at(name);
            out += row.parameter + "," + fmt(row.value, "%.10g") + "," + name + "," + std::to_string(s.n) + "," +
                   fmt(s.mean, "%.10g") + "," + fmt(s.sd, "%.10g") + "," + fmt(s.ci_lo, "%.10g") + "," +
                   fmt(s.ci_hi, "%.10g") + "\n";
        }
    }
    return out;
}

} // namespace nof1
