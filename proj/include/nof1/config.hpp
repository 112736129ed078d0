#ifndef NOF1_CONFIG_HPP
#define NOF1_CONFIG_HPP

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nof1/generator.hpp"
#include "nof1/harness.hpp"

namespace nof1 {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// All readers reject unknown keys and a schema_version other than 1.
// Keys that are omitted keep their defaults.

std::string generator_config_to_json(const GeneratorConfig& config);
GeneratorConfig generator_config_from_json(const std::string& text);

/// 16 hex digits of FNV-1a over the canonical JSON of everything except the seed.
std::string config_fingerprint(const GeneratorConfig& config);

/// {schema_version, prior, engine, baselines, evaluation, valences, pairs}
std::string analysis_config_to_json(const AnalysisConfig& config);
AnalysisConfig analysis_config_from_json(const std::string& text);

/// Everything an experiment run needs.
struct ExperimentConfig {
    GeneratorConfig generator = default_generator_config();
    AnalysisConfig analysis;
    MonteCarloConfig monte_carlo;
    std::map<std::string, std::vector<double>> sweep{{"kl_threshold", {0.05, 0.1, 0.2}}};
};

std::string experiment_config_to_json(const ExperimentConfig& config);
ExperimentConfig experiment_config_from_json(const std::string& text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

} // namespace nof1

#endif
