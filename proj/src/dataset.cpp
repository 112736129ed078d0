#include "nof1/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace nof1 {

namespace {

using ordered_json = nlohmann::ordered_json;

void validate_schema(const Schema& schema)
{
    std::set<std::string> seen;
    auto check = [&](const std::string& name, const char* kind) {
        if (name.empty()) throw ValidationError(std::string("empty ") + kind + " name");
        if (name == "day") throw ValidationError("'day' is reserved and cannot be a column name");
        if (!seen.insert(name).second) throw ValidationError("duplicate schema name '" + name + "'");
    };
    for (const auto& v : schema.vitals) check(v, "vital");
    for (const auto& f : schema.factors) check(f, "factor");
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> cells;
    std::string cell;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else if (c != '\r') {
            cell.push_back(c);
        }
    }
    cells.push_back(std::move(cell));
    return cells;
}

double parse_double(const std::string& text, std::size_t line_no)
{
    double value = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("line " + std::to_string(line_no) + ": not a number: '" + text + "'");
    return value;
}

int parse_day(const std::string& text, std::size_t line_no)
{
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad day '" + text + "'");
    return value;
}

std::string format_vital(double v)
{
    char buf[64];
    const auto ptr = std::to_chars(buf, buf + sizeof buf, v).ptr;
    return std::string(buf, ptr);
}

} // namespace

std::string to_string(const PairKey& pair) { return pair.factor + "->" + pair.outcome; }

std::optional<std::size_t> Schema::vital_index(const VitalId& name) const
{
    auto it = std::find(vitals.begin(), vitals.end(), name);
    if (it == vitals.end()) return std::nullopt;
    return static_cast<std::size_t>(it - vitals.begin());
}

std::optional<std::size_t> Schema::factor_index(const FactorId& name) const
{
    auto it = std::find(factors.begin(), factors.end(), name);
    if (it == factors.end()) return std::nullopt;
    return static_cast<std::size_t>(it - factors.begin());
}

Dataset::Dataset(Schema schema, std::vector<Observation> observations, DatasetMeta meta)
    : schema_(std::move(schema)), observations_(std::move(observations)), meta_(std::move(meta))
{
    validate_schema(schema_);
    for (const auto& obs : observations_) {
        if (obs.day < 1) throw ValidationError("day must be >= 1, got " + std::to_string(obs.day));
        if (obs.vitals.size() != schema_.vitals.size() || obs.factors.size() != schema_.factors.size())
            throw ValidationError("day " + std::to_string(obs.day) + ": entries do not match schema");
        for (std::size_t i = 0; i < obs.vitals.size(); ++i) {
            const auto& v = obs.vitals[i];
            if (v && !(std::isfinite(*v) && *v >= kVitalMin && *v <= kVitalMax))
                throw ValidationError("day " + std::to_string(obs.day) + ": " + schema_.vitals[i] +
                                      " value " + std::to_string(*v) + " outside [1, 10]");
        }
    }
    std::stable_sort(observations_.begin(), observations_.end(),
                     [](const Observation& a, const Observation& b) { return a.day < b.day; });
    for (std::size_t i = 1; i < observations_.size(); ++i) {
        if (observations_[i].day == observations_[i - 1].day)
            throw ValidationError("duplicate day " + std::to_string(observations_[i].day));
    }
}

bool Dataset::has_pair(const PairKey& pair) const
{
    return schema_.factor_index(pair.factor).has_value() && schema_.vital_index(pair.outcome).has_value();
}

DataFormat parse_format(const std::string& name)
{
    if (name == "csv") return DataFormat::csv;
    if (name == "jsonl") return DataFormat::jsonl;
    throw std::invalid_argument("unknown data format '" + name + "' (expected csv or jsonl)");
}

DataFormat format_from_extension(const std::filesystem::path& path)
{
    const auto ext = path.extension().string();
    if (ext == ".csv") return DataFormat::csv;
    if (ext == ".jsonl") return DataFormat::jsonl;
    throw std::invalid_argument("cannot infer data format from '" + path.string() + "'");
}

std::string dataset_to_csv(const Dataset& dataset)
{
    const auto& schema = dataset.schema();
    std::string out = "day";
    for (const auto& v : schema.vitals) out += "," + v;
    for (const auto& f : schema.factors) out += "," + f;
    out += "\n";
    for (const auto& obs : dataset.observations()) {
        out += std::to_string(obs.day);
        for (const auto& v : obs.vitals) {
            out += ",";
            if (v) out += format_vital(*v);
        }
        for (const auto& f : obs.factors) {
            out += ",";
            if (f) out += *f ? "1" : "0";
        }
        out += "\n";
    }
    return out;
}

std::string dataset_to_jsonl(const Dataset& dataset)
{
    const auto& schema = dataset.schema();
    ordered_json head;
    head["schema_version"] = 1;
    head["vitals"] = schema.vitals;
    head["factors"] = schema.factors;
    head["seed"] = dataset.meta().seed ? ordered_json(*dataset.meta().seed) : ordered_json(nullptr);
    head["config_fingerprint"] = dataset.meta().config_fingerprint
                                     ? ordered_json(*dataset.meta().config_fingerprint)
                                     : ordered_json(nullptr);
    std::string out = head.dump() + "\n";
    for (const auto& obs : dataset.observations()) {
        ordered_json line;
        line["day"] = obs.day;
        ordered_json vitals = ordered_json::object();
        for (std::size_t i = 0; i < obs.vitals.size(); ++i)
            vitals[schema.vitals[i]] = obs.vitals[i] ? ordered_json(*obs.vitals[i]) : ordered_json(nullptr);
        ordered_json factors = ordered_json::object();
        for (std::size_t i = 0; i < obs.factors.size(); ++i)
            factors[schema.factors[i]] = obs.factors[i] ? ordered_json(*obs.factors[i]) : ordered_json(nullptr);
        line["vitals"] = std::move(vitals);
        line["factors"] = std::move(factors);
        out += line.dump() + "\n";
    }
    return out;
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path, DataFormat format)
{
    write_file(path, format == DataFormat::csv ? dataset_to_csv(dataset) : dataset_to_jsonl(dataset));
}

Dataset dataset_from_csv(const std::string& text, const std::optional<Schema>& expected)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (header.empty()) {
            header = std::move(cells);
            if (header.front() != "day") throw ParseError("CSV header must start with 'day'");
            continue;
        }
        if (cells.size() != header.size())
            throw ParseError("line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                             " cells, got " + std::to_string(cells.size()));
        rows.push_back(std::move(cells));
    }
    if (header.empty()) throw ParseError("empty CSV");

    const std::size_t ncols = header.size() - 1;
    std::vector<bool> is_factor(ncols, false);
    if (expected) {
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto& name = header[c + 1];
            if (expected->factor_index(name)) is_factor[c] = true;
            else if (!expected->vital_index(name)) throw ValidationError("unknown column '" + name + "'");
        }
    } else {
        for (std::size_t c = 0; c < ncols; ++c) {
            bool all_binary = true;
            for (const auto& row : rows) {
                const auto& cell = row[c + 1];
                if (!cell.empty() && cell != "0" && cell != "1") {
                    all_binary = false;
                    break;
                }
            }
            is_factor[c] = all_binary;
        }
    }

    Schema schema;
    if (expected) {
        schema = *expected;
    } else {
        for (std::size_t c = 0; c < ncols; ++c)
            (is_factor[c] ? schema.factors : schema.vitals).push_back(header[c + 1]);
    }
    validate_schema(schema);

    std::vector<Observation> observations;
    observations.reserve(rows.size());
    line_no = 1;
    for (const auto& row : rows) {
        ++line_no;
        Observation obs;
        obs.day = parse_day(row[0], line_no);
        obs.vitals.assign(schema.vitals.size(), std::nullopt);
        obs.factors.assign(schema.factors.size(), std::nullopt);
        for (std::size_t c = 0; c < ncols; ++c) {
            const auto& name = header[c + 1];
            const auto& cell = row[c + 1];
            if (cell.empty()) continue;
            if (is_factor[c]) {
                if (cell != "0" && cell != "1")
                    throw ValidationError("line " + std::to_string(line_no) + ": factor '" + name + "' must be 0 or 1");
                obs.factors[*schema.factor_index(name)] = (cell == "1");
            } else {
                obs.vitals[*schema.vital_index(name)] = parse_double(cell, line_no);
            }
        }
        observations.push_back(std::move(obs));
    }
    return Dataset(std::move(schema), std::move(observations));
}

Dataset dataset_from_jsonl(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Schema schema;
    DatasetMeta meta;
    bool have_schema = false;
    std::vector<Observation> observations;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        try {
            if (!have_schema) {
                if (!j.contains("vitals") || !j.contains("factors") || j.contains("day"))
                    throw ParseError("line 1 must be the schema object");
                schema.vitals = j.at("vitals").get<std::vector<std::string>>();
                schema.factors = j.at("factors").get<std::vector<std::string>>();
                if (j.contains("seed") && !j["seed"].is_null()) meta.seed = j["seed"].get<std::uint64_t>();
                if (j.contains("config_fingerprint") && !j["config_fingerprint"].is_null())
                    meta.config_fingerprint = j["config_fingerprint"].get<std::string>();
                validate_schema(schema);
                have_schema = true;
                continue;
            }
            Observation obs;
            obs.day = j.at("day").get<int>();
            obs.vitals.assign(schema.vitals.size(), std::nullopt);
            obs.factors.assign(schema.factors.size(), std::nullopt);
            for (const auto& [key, value] : j.at("vitals").items()) {
                auto idx = schema.vital_index(key);
                if (!idx) throw ValidationError("line " + std::to_string(line_no) + ": unknown vital '" + key + "'");
                if (!value.is_null()) obs.vitals[*idx] = value.get<double>();
            }
            for (const auto& [key, value] : j.at("factors").items()) {
                auto idx = schema.factor_index(key);
                if (!idx) throw ValidationError("line " + std::to_string(line_no) + ": unknown factor '" + key + "'");
                if (!value.is_null()) obs.factors[*idx] = value.get<bool>();
            }
            for (const auto& [key, value] : j.items()) {
                if (key != "day" && key != "vitals" && key != "factors")
                    throw ValidationError("line " + std::to_string(line_no) + ": unknown field '" + key + "'");
            }
            observations.push_back(std::move(obs));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (!have_schema) throw ParseError("JSONL file has no schema line");
    return Dataset(std::move(schema), std::move(observations), std::move(meta));
}

Dataset load_dataset(const std::filesystem::path& path, DataFormat format, const std::optional<Schema>& expected)
{
    const auto text = read_file(path);
    if (format == DataFormat::csv) return dataset_from_csv(text, expected);
    Dataset ds = dataset_from_jsonl(text);
    if (expected && !(ds.schema() == *expected)) throw ValidationError("dataset schema does not match expected schema");
    return ds;
}

PairRows pair_rows(const Dataset& dataset, const PairKey& pair, int up_to_day)
{
    const auto fi = dataset.schema().factor_index(pair.factor);
    const auto vi = dataset.schema().vital_index(pair.outcome);
    if (!fi || !vi) throw std::invalid_argument("unknown pair " + to_string(pair));
    PairRows rows;
    for (const auto& obs : dataset.observations()) {
        if (obs.day > up_to_day) break;
        const auto& f = obs.factors[*fi];
        const auto& v = obs.vitals[*vi];
        if (!f || !v) continue;
        rows.indicator.push_back(*f ? 1.0 : 0.0);
        rows.outcome.push_back(*v);
    }
    return rows;
}

PairGroups pair_samples(const Dataset& dataset, const PairKey& pair, int up_to_day)
{
    const auto rows = pair_rows(dataset, pair, up_to_day);
    PairGroups groups;
    for (std::size_t i = 0; i < rows.outcome.size(); ++i)
        (rows.indicator[i] > 0.5 ? groups.present : groups.absent).push_back(rows.outcome[i]);
    return groups;
}

} // namespace nof1
