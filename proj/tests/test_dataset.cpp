#include <filesystem>
#include <string>

#include <doctest.h>

#include "nof1/config.hpp"
#include "nof1/dataset.hpp"
#include "nof1/generator.hpp"

using namespace nof1;

namespace {

Dataset tiny()
{
    const std::string csv = "day,anxiety,coffee\n"
                            "1,7,1\n"
                            "2,4,0\n"
                            "3,5,\n";
    return dataset_from_csv(csv);
}

} // namespace

TEST_CASE("csv parsing classifies columns and keeps missing cells")
{
    const auto d = tiny();
    CHECK(d.schema().vitals == std::vector<std::string>{"anxiety"});
    CHECK(d.schema().factors == std::vector<std::string>{"coffee"});
    REQUIRE(d.observations().size() == 3);
    CHECK(d.span() == 3);
    CHECK_FALSE(d.observations()[2].factors[0].has_value());
}

TEST_CASE("pair_samples excludes days with either side missing")
{
    const auto d = tiny();
    const auto g = pair_samples(d, {"coffee", "anxiety"}, 3);
    CHECK(g.present == std::vector<double>{7.0});
    CHECK(g.absent == std::vector<double>{4.0});
    const auto empty = pair_samples(d, {"coffee", "anxiety"}, 0);
    CHECK(empty.present.empty());
    CHECK(empty.absent.empty());
    CHECK_THROWS_AS(pair_samples(d, {"tea", "anxiety"}, 3), std::invalid_argument);
}

TEST_CASE("validation rejects bad rows")
{
    CHECK_THROWS_AS(dataset_from_csv("day,mood,coffee\n1,12,1\n"), ValidationError);
    CHECK_THROWS_AS(dataset_from_csv("day,mood,coffee\n1,5,1\n1,6,0\n"), ValidationError);
    CHECK_THROWS_AS(dataset_from_csv("day,mood,coffee\n1,5\n"), ParseError);
    CHECK_THROWS_AS(dataset_from_csv("day,mood,coffee\nx,5,1\n"), ParseError);
    CHECK_THROWS_AS(dataset_from_csv("day,mood,coffee\n1,abc,1\n"), ParseError);
    CHECK_THROWS(dataset_from_csv("day,mood,tea\n1,5,1\n", Schema{{"mood"}, {"coffee"}}));
}

TEST_CASE("rows are sorted by day")
{
    const auto d = dataset_from_csv("day,mood,coffee\n3,5,1\n1,6,0\n2,7,1\n");
    CHECK(d.observations()[0].day == 1);
    CHECK(d.observations()[2].day == 3);
}

TEST_CASE("generated datasets round-trip through both formats")
{
    const auto [generated, truth] = generate(default_generator_config());
    const auto from_jsonl = dataset_from_jsonl(dataset_to_jsonl(generated));
    CHECK(from_jsonl == generated);
    const auto from_csv = dataset_from_csv(dataset_to_csv(generated), generated.schema());
    CHECK(from_csv.observations() == generated.observations());

    const auto dir = std::filesystem::temp_directory_path() / "nof1_test_dataset";
    save_dataset(generated, dir / "d.jsonl", DataFormat::jsonl);
    CHECK(load_dataset(dir / "d.jsonl", DataFormat::jsonl) == generated);
    save_dataset(generated, dir / "d.csv", DataFormat::csv);
    CHECK(load_dataset(dir / "d.csv", format_from_extension(dir / "d.csv")).observations() == generated.observations());
    std::filesystem::remove_all(dir);
}

TEST_CASE("pair_samples on a generated dataset: sizes, monotone prefixes")
{
    const auto [d, truth] = generate(default_generator_config());
    const PairKey pair{"coffee", "anxiety"};
    // Independent scan of the CSV text.
    const auto csv = dataset_to_csv(d);
    std::size_t both = 0;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
        const auto end = csv.find('\n', pos);
        const auto line = csv.substr(pos, end - pos);
        std::vector<std::string> cells;
        std::size_t s = 0;
        for (;;) {
            const auto c = line.find(',', s);
            cells.push_back(line.substr(s, c == std::string::npos ? std::string::npos : c - s));
            if (c == std::string::npos) break;
            s = c + 1;
        }
        if (!cells[2].empty() && !cells[4].empty()) ++both; // anxiety, coffee
        pos = end + 1;
    }
    const auto g = pair_samples(d, pair, 90);
    CHECK(g.present.size() + g.absent.size() == both);
    CHECK(both == doctest::Approx(0.81 * 90).epsilon(0.15));

    auto prev = pair_samples(d, pair, 1);
    for (int t = 2; t <= 90; ++t) {
        const auto cur = pair_samples(d, pair, t);
        REQUIRE(cur.present.size() >= prev.present.size());
        REQUIRE(cur.absent.size() >= prev.absent.size());
        CHECK(std::equal(prev.present.begin(), prev.present.end(), cur.present.begin()));
        CHECK(std::equal(prev.absent.begin(), prev.absent.end(), cur.absent.begin()));
        prev = cur;
    }
}

TEST_CASE("format names")
{
    CHECK(parse_format("csv") == DataFormat::csv);
    CHECK(parse_format("jsonl") == DataFormat::jsonl);
    CHECK_THROWS(parse_format("xml"));
}
