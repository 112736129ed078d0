// nof1: generate synthetic N-of-1 data, replay the tier engine over a
// dataset, and run the single / Monte Carlo / sweep experiments.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nof1/config.hpp"
#include "nof1/dataset.hpp"
#include "nof1/generator.hpp"
#include "nof1/harness.hpp"
#include "nof1/insight.hpp"
#include "nof1/rng.hpp"
#include "nof1/tier_engine.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using namespace nof1;

namespace {

constexpr const char* kVersion = "0.1.0";

struct ManifestWriter {
    std::string command;
    std::string fingerprint;
    std::optional<std::uint64_t> seed;
    fs::path out_dir;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    void write(const fs::path& relative, const std::string& text)
    {
        write_text_file(out_dir / relative, text);
        outputs.push_back(relative.generic_string());
    }

    void finish() const
    {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["config_fingerprint"] = fingerprint;
        j["master_seed"] = seed ? nlohmann::ordered_json(*seed) : nlohmann::ordered_json(nullptr);
        j["artifact_version"] = kVersion;
        j["outputs"] = outputs;
        j["wall_clock_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_text_file(out_dir / "manifest.json", j.dump(2) + "\n");
    }
};

std::string text_fingerprint(const std::string& canonical)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical)));
    return buf;
}

std::string pair_file_stem(const PairKey& pair) { return pair.factor + "__" + pair.outcome; }

void set_jobs(int jobs)
{
#ifdef _OPENMP
    if (jobs > 0) omp_set_num_threads(jobs);
#else
    (void)jobs;
#endif
}

int cmd_generate(const std::string& config_path, const std::string& out, std::optional<std::uint64_t> seed,
                 const std::string& format_name)
{
    GeneratorConfig config = config_path.empty() ? default_generator_config()
                                                 : generator_config_from_json(read_text_file(config_path));
    if (seed) config.seed = *seed;
    const auto format = parse_format(format_name);
    const auto [dataset, truth] = generate(config);

    ManifestWriter m{"generate", config_fingerprint(config), config.seed, out};
    const std::string data_name = format == DataFormat::csv ? "dataset.csv" : "dataset.jsonl";
    m.write(data_name, format == DataFormat::csv ? dataset_to_csv(dataset) : dataset_to_jsonl(dataset));
    m.write("ground_truth.json", ground_truth_to_json(truth));
    m.write("generator_config.json", generator_config_to_json(config));

    // Validate what was written by reading it back.
    const auto reread = load_dataset(fs::path(out) / data_name, format);
    if (reread.observations().size() != dataset.observations().size() || !(reread.schema() == dataset.schema()))
        throw std::runtime_error("written dataset failed read-back validation");
    m.finish();
    std::cout << "wrote " << (fs::path(out) / data_name).string() << " (" << dataset.observations().size()
              << " days)\n";
    return 0;
}

std::vector<PairKey> replay_pairs(const AnalysisConfig& analysis, const Dataset& dataset, const std::string& truth_path,
                                  const fs::path& data_path)
{
    std::vector<PairKey> pairs = analysis.pairs;
    if (pairs.empty()) {
        fs::path candidate = truth_path.empty() ? data_path.parent_path() / "ground_truth.json" : fs::path(truth_path);
        if (fs::exists(candidate)) {
            pairs = load_ground_truth(candidate).all_pairs();
        } else {
            for (const auto& f : dataset.schema().factors)
                for (const auto& v : dataset.schema().vitals) pairs.push_back({f, v});
        }
    }
    for (const auto& p : pairs)
        if (!dataset.has_pair(p)) throw ValidationError("pair " + to_string(p) + " is not in the dataset schema");
    return pairs;
}

int cmd_replay(const std::string& data_path, const std::string& config_path, const std::string& truth_path,
               const std::string& out, const std::vector<int>& milestones)
{
    const AnalysisConfig analysis =
        config_path.empty() ? AnalysisConfig{} : analysis_config_from_json(read_text_file(config_path));
    const auto dataset = load_dataset(data_path, format_from_extension(data_path));
    const auto pairs = replay_pairs(analysis, dataset, truth_path, data_path);
    const auto timelines = run_engine(dataset, pairs, analysis.prior, analysis.engine);

    ManifestWriter m{"replay", text_fingerprint(analysis_config_to_json(analysis)), dataset.meta().seed, out};
    for (const auto& [pair, timeline] : timelines) {
        m.write(fs::path("timelines") / (pair_file_stem(pair) + ".csv"), timeline_to_csv(timeline));
        m.write(fs::path("traces") / (pair_file_stem(pair) + ".csv"), contraction_trace(timeline));
    }
    for (int day : milestones) {
        if (day < 1 || day > dataset.span()) continue;
        const auto insights = build_insights(timelines, dataset, analysis.valences, day, analysis.prior,
                                             analysis.engine.design);
        for (const auto& i : insights)
            if (!(i.plausibility.psi_final >= kPlausibilityFloor && i.plausibility.psi_final <= kPlausibilityCeiling))
                throw std::logic_error("plausibility outside its clamp range");
        m.write("insights_day" + std::to_string(day) + ".json", insights_to_json(insights));
    }
    m.finish();
    std::cout << "replayed " << timelines.size() << " pairs over " << dataset.span() << " days into " << out << "\n";
    return 0;
}

int cmd_experiment(const std::string& mode, const std::string& config_path, std::optional<std::uint64_t> seed,
                   const std::string& out, int jobs, std::optional<int> n_datasets)
{
    ExperimentConfig config =
        config_path.empty() ? ExperimentConfig{} : experiment_config_from_json(read_text_file(config_path));
    if (n_datasets) config.monte_carlo.n_datasets = *n_datasets;
    set_jobs(jobs);
    const ExecutionOptions execution{Execution::parallel, jobs};

    if (mode == "single") {
        if (seed) config.generator.seed = *seed;
        const auto [dataset, truth] = generate(config.generator);
        const auto report = evaluate_single(dataset, truth, config.analysis, Execution::parallel);
        ManifestWriter m{"experiment single", text_fingerprint(experiment_config_to_json(config)),
                         config.generator.seed, out};
        m.write("report.json", report_to_json(report));
        m.write("report.md", report_to_markdown(report));
        for (const auto& [pair, timeline] : report.timelines)
            m.write(fs::path("traces") / (pair_file_stem(pair) + ".csv"), contraction_trace(timeline));
        m.finish();
        std::cout << report_to_markdown(report);
        return 0;
    }
    if (seed) config.monte_carlo.master_seed = *seed;
    if (mode == "montecarlo") {
        const auto report = monte_carlo(config.generator, config.analysis, config.monte_carlo, execution);
        ManifestWriter m{"experiment montecarlo", text_fingerprint(experiment_config_to_json(config)),
                         config.monte_carlo.master_seed, out};
        m.write("report.json", report_to_json(report));
        m.write("report.md", report_to_markdown(report));
        m.write("datasets.csv", mc_rows_to_csv(report.mc_rows));
        m.finish();
        std::cout << report_to_markdown(report);
        return 0;
    }
    if (mode == "sweep") {
        const auto rows = sensitivity_sweep(config.sweep, config.generator, config.analysis, config.monte_carlo, execution);
        ManifestWriter m{"experiment sweep", text_fingerprint(experiment_config_to_json(config)),
                         config.monte_carlo.master_seed, out};
        m.write("sweep.csv", sweep_to_csv(rows));
        std::string md = "## Sensitivity sweep\n\n| Parameter | Value | Clue | Pattern | Correlation | FDR | Coverage |\n"
                         "|---|---|---|---|---|---|---|\n";
        for (const auto& r : rows) {
            char line[256];
            std::snprintf(line, sizeof line, "| %s | %g | %.2f | %.2f | %.2f | %.3f | %.3f |\n", r.parameter.c_str(),
                          r.value, r.summary.at("time_to_clue").mean, r.summary.at("time_to_pattern").mean,
                          r.summary.at("time_to_correlation").mean, r.summary.at("fdr").mean,
                          r.summary.at("ci_coverage").mean);
            md += line;
        }
        m.write("report.md", md);
        m.finish();
        std::cout << md;
        return 0;
    }
    throw std::invalid_argument("unknown experiment mode '" + mode + "'");
}

// Renders the Markdown view of a report.json produced by `experiment`.
int cmd_report(const std::string& in, const std::string& out)
{
    const auto j = nlohmann::ordered_json::parse(read_text_file(in));
    std::string md;
    auto num = [](const nlohmann::ordered_json& v) {
        if (v.is_null()) return std::string("-");
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g", v.get<double>());
        return std::string(buf);
    };
    if (j.contains("metrics")) {
        const auto& m = j["metrics"];
        md += "| Metric | Value |\n|---|---|\n";
        for (const char* key : {"time_to_clue", "time_to_pattern", "time_to_correlation", "time_to_fixed", "fdr",
                                "ci_coverage", "directional_accuracy"})
            md += std::string("| ") + key + " | " + num(m.at(key)) + " |\n";
    }
    if (j.contains("mc_summary") && !j["mc_summary"].is_null()) {
        md += "\n| Metric | Mean | SD | 2.5% | 97.5% |\n|---|---|---|---|---|\n";
        for (const auto& [name, s] : j["mc_summary"].items())
            md += "| " + name + " | " + num(s.at("mean")) + " | " + num(s.at("sd")) + " | " + num(s.at("ci_lo")) +
                  " | " + num(s.at("ci_hi")) + " |\n";
    }
    if (out.empty()) std::cout << md;
    else write_text_file(out, md);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Progressive Bayesian confidence tiers for N-of-1 time series"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    std::string config_path, out = "out", format = "csv", data_path, truth_path, report_in, report_out;
    std::optional<std::uint64_t> seed;
    std::optional<int> n_datasets;
    int jobs = 0;
    std::vector<int> milestones{7, 14, 30, 90};

    auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset and its ground truth");
    gen->add_option("--config", config_path, "Generator config JSON")->check(CLI::ExistingFile);
    gen->add_option("--seed", seed, "Random seed (overrides the config)");
    gen->add_option("--out", out, "Output directory");
    gen->add_option("--format", format, "Dataset format")->check(CLI::IsMember({"csv", "jsonl"}));

    auto* replay = app.add_subcommand("replay", "Run the tier engine over a dataset");
    replay->add_option("--data", data_path, "Dataset (.csv or .jsonl)")->required()->check(CLI::ExistingFile);
    replay->add_option("--config", config_path, "Analysis config JSON")->check(CLI::ExistingFile);
    replay->add_option("--truth", truth_path, "Ground-truth manifest giving the pair roster")->check(CLI::ExistingFile);
    replay->add_option("--out", out, "Output directory");
    replay->add_option("--milestones", milestones, "Days to emit insight lists for");
    replay->add_option("--jobs", jobs, "Worker threads (0: all)");

    auto* exp = app.add_subcommand("experiment", "Run an experiment");
    exp->require_subcommand(1);
    std::string mode;
    for (const char* name : {"single", "montecarlo", "sweep"}) {
        auto* sub = exp->add_subcommand(name, std::string("experiment mode: ") + name);
        sub->add_option("--config", config_path, "Experiment config JSON")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Generator seed (single) or master seed (montecarlo, sweep)");
        sub->add_option("--out", out, "Output directory");
        sub->add_option("--jobs", jobs, "Worker threads (0: all)");
        sub->add_option("--n-datasets", n_datasets, "Monte Carlo datasets");
        sub->callback([&mode, name] { mode = name; });
    }

    auto* rep = app.add_subcommand("report", "Render a report.json as Markdown");
    rep->add_option("--in", report_in, "report.json")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", report_out, "Markdown output (stdout if omitted)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_generate(config_path, out, seed, format);
        if (replay->parsed()) {
            set_jobs(jobs);
            return cmd_replay(data_path, config_path, truth_path, out, milestones);
        }
        if (exp->parsed()) return cmd_experiment(mode, config_path, seed, out, jobs, n_datasets);
        if (rep->parsed()) return cmd_report(report_in, report_out);
    } catch (const std::exception& e) {
        std::cerr << "nof1: error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
