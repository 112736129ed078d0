#ifndef NOF1_DATASET_HPP
#define NOF1_DATASET_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nof1 {

using VitalId = std::string;
using FactorId = std::string;

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kVitalMin = 1.0;
inline constexpr double kVitalMax = 10.0;

struct PairKey {
    FactorId factor;
    VitalId outcome;

    friend bool operator==(const PairKey&, const PairKey&) = default;
    friend auto operator<=>(const PairKey&, const PairKey&) = default;
};

std::string to_string(const PairKey& pair);

struct Schema {
    std::vector<VitalId> vitals;
    std::vector<FactorId> factors;

    std::optional<std::size_t> vital_index(const VitalId& name) const;
    std::optional<std::size_t> factor_index(const FactorId& name) const;
    friend bool operator==(const Schema&, const Schema&) = default;
};

/// One day of data. Vitals and factors are positional, aligned with the
/// dataset schema; absent entries are std::nullopt.
struct Observation {
    int day = 0;
    std::vector<std::optional<double>> vitals;
    std::vector<std::optional<bool>> factors;

    friend bool operator==(const Observation&, const Observation&) = default;
};

struct DatasetMeta {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config_fingerprint;

    friend bool operator==(const DatasetMeta&, const DatasetMeta&) = default;
};

class Dataset {
public:
    Dataset() = default;
    /// Validates and sorts by day. Throws ValidationError.
    Dataset(Schema schema, std::vector<Observation> observations, DatasetMeta meta = {});

    const Schema& schema() const noexcept { return schema_; }
    const std::vector<Observation>& observations() const noexcept { return observations_; }
    const DatasetMeta& meta() const noexcept { return meta_; }

    /// Last day index (0 for an empty dataset).
    int span() const noexcept { return observations_.empty() ? 0 : observations_.back().day; }

    bool has_pair(const PairKey& pair) const;

    friend bool operator==(const Dataset&, const Dataset&) = default;

private:
    Schema schema_;
    std::vector<Observation> observations_;
    DatasetMeta meta_;
};

enum class DataFormat { csv, jsonl };

DataFormat parse_format(const std::string& name);
DataFormat format_from_extension(const std::filesystem::path& path);

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format);
std::string dataset_to_csv(const Dataset& dataset);
std::string dataset_to_jsonl(const Dataset& dataset);

/// CSV columns are classified as factors when every present cell is a bare
/// 0 or 1, otherwise as vitals. Pass `expected` to pin the schema instead;
/// columns outside it are then rejected.
Dataset load_dataset(const std::filesystem::path& path, DataFormat format,
                     const std::optional<Schema>& expected = std::nullopt);
Dataset dataset_from_csv(const std::string& text, const std::optional<Schema>& expected = std::nullopt);
Dataset dataset_from_jsonl(const std::string& text);

struct PairGroups {
    std::vector<double> present; // outcome values on days the factor was 1
    std::vector<double> absent;  // outcome values on days the factor was 0
};

/// Pairwise-complete split of outcome values for days <= up_to_day.
/// Throws std::invalid_argument for a pair outside the schema.
PairGroups pair_samples(const Dataset& dataset, const PairKey& pair, int up_to_day);

/// Pairwise-complete (indicator, outcome) rows for days <= up_to_day, in day order.
struct PairRows {
    std::vector<double> indicator;
    std::vector<double> outcome;
};
PairRows pair_rows(const Dataset& dataset, const PairKey& pair, int up_to_day);

} // namespace nof1

#endif
