#include <cmath>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "nof1/generator.hpp"
#include "nof1/insight.hpp"
#include "nof1/tier_engine.hpp"

using namespace nof1;

TEST_CASE("plausibility arithmetic")
{
    const auto a = plausibility(0.05, 2.0, ExpectedSign::positive, +1, false);
    CHECK(a.psi_stat == 0.95);
    CHECK(a.psi_val == 1.1);
    CHECK(a.psi_eff == 1.2);
    CHECK(a.confounder_penalty == 1.0);
    CHECK(a.psi_final == 0.95);
    CHECK_FALSE(a.review_flag);

    const auto b = plausibility(0.5, 0.5, ExpectedSign::positive, -1, false);
    CHECK(b.psi_val == 0.5);
    CHECK(b.psi_eff == 1.0);
    CHECK(b.psi_final == 0.5 * 0.5 * 1.0);
    CHECK(b.review_flag);

    const auto c = plausibility(1.0, 3.0, ExpectedSign::positive, +1, false);
    CHECK(c.psi_stat == 0.0);
    CHECK(c.psi_final == 0.1);
    CHECK(c.review_flag);

    const auto u = plausibility(0.3, 1.2, ExpectedSign::unknown, -1, false);
    CHECK(u.psi_val == 1.0);
    CHECK(u.psi_eff == 1.1);
    CHECK(u.psi_final == 0.7 * 1.0 * 1.1);
    CHECK_FALSE(u.review_flag);

    CHECK(plausibility(0.3, 1.5, ExpectedSign::unknown, 1, false).psi_eff == 1.1);
    CHECK(plausibility(0.3, 1.0, ExpectedSign::unknown, 1, false).psi_eff == 1.0);
    CHECK(plausibility(0.3, -1.6, ExpectedSign::negative, -1, false).psi_eff == 1.2);
    CHECK(plausibility(0.3, -1.6, ExpectedSign::negative, -1, false).psi_val == 1.1);
}

TEST_CASE("review flag threshold is strict at 0.60")
{
    // psi_stat 0.6 * 1.0 * 1.0 = 0.6 exactly: not flagged
    const auto at = plausibility(0.4, 0.2, ExpectedSign::unknown, 1, false);
    CHECK(at.psi_final == 1.0 - 0.4);
    CHECK(at.review_flag == (at.psi_final < 0.60));
    const auto below = plausibility(0.41, 0.2, ExpectedSign::unknown, 1, false);
    CHECK(below.review_flag);
}

TEST_CASE("confounder penalty composes before the clamp")
{
    const auto plain = plausibility(0.2, 0.5, ExpectedSign::unknown, 1, false);
    const auto pen = plausibility(0.2, 0.5, ExpectedSign::unknown, 1, true);
    CHECK(pen.confounder_penalty == 0.75);
    CHECK(pen.psi_final == 0.75 * plain.psi_final);
    // Clamp binds after the penalty: 0.99 * 1.1 * 1.2 * 0.75 = 0.9801 -> 0.95
    const auto high = plausibility(0.01, 2.0, ExpectedSign::positive, 1, true);
    CHECK(high.psi_final == 0.95);
    // Lower clamp after the penalty: 0.1 * 0.5 * 0.75 -> 0.1
    const auto low = plausibility(0.9, 0.2, ExpectedSign::positive, -1, true);
    CHECK(low.psi_final == 0.1);
}

TEST_CASE("plausibility monotone in p and mismatch dominated by match")
{
    for (double eff : {0.3, 1.2, 2.5})
        for (bool conf : {false, true}) {
            double prev = 1.0;
            for (double p = 0.0; p <= 1.0; p += 0.01) {
                const double v = plausibility(p, eff, ExpectedSign::positive, 1, conf).psi_final;
                CHECK(v <= prev);
                CHECK(v >= 0.1);
                CHECK(v <= 0.95);
                prev = v;
                const auto match = plausibility(p, eff, ExpectedSign::positive, 1, conf);
                const auto mismatch = plausibility(p, eff, ExpectedSign::positive, -1, conf);
                const double raw = match.psi_stat * match.psi_val * match.psi_eff * match.confounder_penalty;
                if (raw > 0.1 && raw < 0.95 && mismatch.psi_stat * 0.5 * mismatch.psi_eff * mismatch.confounder_penalty > 0.1)
                    CHECK(mismatch.psi_final < match.psi_final);
            }
        }
}

namespace {

// Ten days with F = 1, seven of which also have F' = 1, then ten days with F = 0.
Dataset cooccurrence_data()
{
    std::string csv = "day,anxiety,f,g\n";
    for (int d = 1; d <= 20; ++d) {
        const int f = d <= 10 ? 1 : 0;
        const int g = d <= 7 ? 1 : 0;
        csv += std::to_string(d) + ",5," + std::to_string(f) + "," + std::to_string(g) + "\n";
    }
    return dataset_from_csv(csv);
}

} // namespace

TEST_CASE("confounder detection")
{
    const auto d = cooccurrence_data();
    CHECK(std::fabs(cooccurrence_rate(d, "f", "g", 20) - 0.7) < 1e-15);
    const PairKey pair{"f", "anxiety"};
    std::map<PairKey, double> effects{{pair, 1.0}, {{"g", "anxiety"}, 1.5}};
    CHECK(detect_confounders(pair, d, effects, 20) == std::vector<FactorId>{"g"});
    effects[{"g", "anxiety"}] = 1.1;
    CHECK(detect_confounders(pair, d, effects, 20).empty());
    effects[{"g", "anxiety"}] = -1.5;
    CHECK(detect_confounders(pair, d, effects, 20) == std::vector<FactorId>{"g"});
    CHECK_THROWS(detect_confounders({"g", "anxiety"}, d, {{pair, 1.0}}, 20));
    // Only 0.5 co-occurrence by day 14: seven of... f present on days 1-10, g on 1-7 -> 0.7 still
    CHECK(detect_confounders(pair, d, {{pair, 1.0}, {{"g", "anxiety"}, 1.5}}, 5).size() == 1);
}

TEST_CASE("confounders on the default dataset by brute force")
{
    const auto [d, truth] = generate(default_generator_config());
    const PairKey pair{"coffee", "anxiety"};
    std::map<PairKey, double> effects;
    for (const auto& f : d.schema().factors) effects[{f, "anxiety"}] = pair_marginal(d, {f, "anxiety"}, 30, PriorConfig{}).location;
    std::vector<FactorId> brute;
    const auto fi = *d.schema().factor_index("coffee");
    for (const auto& other : d.schema().factors) {
        if (other == "coffee") continue;
        const auto oi = *d.schema().factor_index(other);
        int both = 0, present = 0;
        for (const auto& o : d.observations()) {
            if (o.day > 30 || !o.factors[fi] || !o.factors[oi]) continue;
            if (*o.factors[fi]) {
                ++present;
                if (*o.factors[oi]) ++both;
            }
        }
        const double rate = present ? static_cast<double>(both) / present : 0.0;
        if (rate > 0.6 && std::fabs(effects.at({other, "anxiety"})) > 1.2 * std::fabs(effects.at(pair)))
            brute.push_back(other);
    }
    CHECK(detect_confounders(pair, d, effects, 30) == brute);
    CHECK(brute.empty());
}

TEST_CASE("build_insights")
{
    const auto [d, truth] = generate(default_generator_config());
    const auto pairs = truth.all_pairs();
    const auto timelines = run_engine(d, pairs, PriorConfig{}, EngineConfig{});
    const auto at30 = build_insights(timelines, d, default_valences(), 30, PriorConfig{});
    for (const auto& [pair, beta] : truth.true_effects) {
        const auto it = std::find_if(at30.begin(), at30.end(), [&](const Insight& i) { return i.pair == pair; });
        REQUIRE(it != at30.end());
        CHECK(it->tier >= Tier::pattern);
    }
    for (std::size_t i = 1; i < at30.size(); ++i) {
        const auto& a = at30[i - 1].pair;
        const auto& b = at30[i].pair;
        CHECK(std::tie(a.outcome, a.factor) < std::tie(b.outcome, b.factor));
    }
    for (const auto& i : at30) {
        CHECK(i.tier > Tier::null);
        CHECK(i.plausibility.psi_final >= 0.1);
        CHECK(i.plausibility.psi_final <= 0.95);
        const auto expected = plausibility(i.p_value, i.effect_location, expected_sign(default_valences(), i.pair),
                                           i.effect_location >= 0 ? 1 : -1, !i.confounders.empty());
        CHECK(i.plausibility == expected);
    }
    CHECK_THROWS(build_insights(timelines, d, default_valences(), 91, PriorConfig{}));

    const auto json = nlohmann::json::parse(insights_to_json(at30));
    REQUIRE(json.is_array());
    CHECK(json.size() == at30.size());
    CHECK(json[0].contains("plausibility"));
    CHECK(json[0]["plausibility"].contains("psi_final"));
}

TEST_CASE("no insights when every pair is null")
{
    const auto [d, truth] = generate(default_generator_config());
    const auto timelines = run_engine(d, truth.all_pairs(), PriorConfig{}, EngineConfig{});
    CHECK(build_insights(timelines, d, default_valences(), 1, PriorConfig{}).empty());
}

TEST_CASE("valence JSON")
{
    const auto v = valences_from_json(R"([{"factor":"exercise","outcome":"mood","expected_sign":"positive"}])");
    CHECK(v == default_valences());
    CHECK(valences_from_json(valences_to_json(v)) == v);
    CHECK(expected_sign(v, {"coffee", "mood"}) == ExpectedSign::unknown);
    CHECK_THROWS(valences_from_json(R"([{"factor":"exercise","outcome":"mood","expected_sign":"up"}])"));
}
