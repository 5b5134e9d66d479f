#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rankfuse/rank.hpp"
#include "rankfuse/rng.hpp"

using namespace rankfuse;

namespace {

AlignedMatrix one_column(std::vector<double> burdens) {
    AlignedMatrix matrix;
    matrix.outcomes = {{"y1", Direction::HigherIsWorse, ""}};
    for (std::size_t i = 0; i < burdens.size(); ++i) {
        matrix.rows.push_back({"c" + std::to_string(i), "S0", {burdens[i]}});
    }
    return matrix;
}

GroupMap groups_of(std::initializer_list<std::pair<const char*, int>> entries) {
    GroupMap groups;
    for (const auto& [state, group] : entries) groups.assignment.emplace(state, group);
    return groups;
}

StateRankSummary summary_of(std::string state, double aggregate) {
    StateRankSummary summary;
    summary.state_id = std::move(state);
    summary.per_outcome_means = {aggregate};
    summary.aggregate = aggregate;
    summary.n_counties = 1;
    return summary;
}

}  // namespace

TEST_CASE("midranks handles the canonical cases", "[rank]") {
    CHECK(midranks(std::vector<double>{10, 20, 30}) == std::vector<double>{1, 2, 3});
    CHECK(midranks(std::vector<double>{7, 7, 7, 7}) == std::vector<double>{2.5, 2.5, 2.5, 2.5});
    CHECK(midranks(std::vector<double>{3, 1, 3, 5}) == std::vector<double>{2.5, 1, 2.5, 4});
    CHECK(midranks(std::vector<double>{42}) == std::vector<double>{1});
}

TEST_CASE("midranks rejects bad input", "[rank]") {
    CHECK_THROWS_AS(midranks(std::vector<double>{}), Error);
    CHECK_THROWS_AS(midranks(std::vector<double>{1.0, std::nan("")}), Error);
}

TEST_CASE("rank_table orients ranks so low burden is favorable", "[rank]") {
    const auto matrix = one_column({5, 1, 3});
    const auto table = rank_table(matrix);
    REQUIRE(table.ranks.size() == 1);
    CHECK(table.ranks[0] == std::vector<double>{1, 3, 2});
    CHECK(table.N == 3);
}

TEST_CASE("identical columns get identical rank vectors", "[rank]") {
    AlignedMatrix matrix;
    matrix.outcomes = {{"y1", Direction::HigherIsWorse, ""}, {"y2", Direction::HigherIsWorse, ""}};
    const std::vector<double> burdens = {4.0, -1.0, 2.5, 4.0};
    for (std::size_t i = 0; i < burdens.size(); ++i) {
        matrix.rows.push_back({"c" + std::to_string(i), "S0", {burdens[i], burdens[i]}});
    }
    const auto table = rank_table(matrix);
    CHECK(table.ranks[0] == table.ranks[1]);
}

TEST_CASE("constant burden column ranks (N+1)/2 everywhere", "[rank]") {
    const auto matrix = one_column({7, 7, 7, 7, 7});
    const auto table = rank_table(matrix);
    for (double r : table.ranks[0]) CHECK(r == 3.0);
    CHECK(table.tie_groups[0] == 1);
}

TEST_CASE("rank sums are conserved exactly", "[rank]") {
    Xoshiro256 rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 1 + rng.bounded(400);
        std::vector<double> burdens(n);
        // Heavy ties via rounding.
        for (auto& b : burdens) b = std::floor(rng.normal() * 4.0);
        const auto matrix = one_column(burdens);
        const auto table = rank_table(matrix);
        double sum = 0.0;
        for (double r : table.ranks[0]) {
            sum += r;
            CHECK(r >= 1.0);
            CHECK(r <= static_cast<double>(n));
        }
        const double expected = static_cast<double>(n) * static_cast<double>(n + 1) / 2.0;
        REQUIRE(sum == expected);  // exact in floating point at this scale
    }
}

TEST_CASE("state summaries average ranks per state, then across outcomes", "[rank]") {
    SECTION("one state holding all rows aggregates to (N+1)/2") {
        const auto matrix = one_column({10, 40, 20, 30, 50});
        const auto table = rank_table(matrix);
        const auto summaries = state_rank_summaries(table, matrix);
        REQUIRE(summaries.size() == 1);
        CHECK(summaries[0].aggregate == 3.0);
        CHECK(summaries[0].n_counties == 5);
    }

    SECTION("a single-county state inherits that county's ranks") {
        AlignedMatrix matrix;
        matrix.outcomes = {{"y1", Direction::HigherIsWorse, ""},
                           {"y2", Direction::HigherIsWorse, ""}};
        matrix.rows.push_back({"c0", "A", {1.0, 9.0}});
        matrix.rows.push_back({"c1", "A", {2.0, 8.0}});
        matrix.rows.push_back({"c2", "B", {3.0, 7.0}});
        const auto table = rank_table(matrix);
        const auto summaries = state_rank_summaries(table, matrix);
        const auto b = std::find_if(summaries.begin(), summaries.end(),
                                    [](const StateRankSummary& s) { return s.state_id == "B"; });
        REQUIRE(b != summaries.end());
        CHECK(b->per_outcome_means[0] == table.ranks[0][2]);
        CHECK(b->per_outcome_means[1] == table.ranks[1][2]);
    }

    SECTION("aggregate is the arithmetic mean of per-outcome means") {
        StateRankSummary summary;
        summary.per_outcome_means = {10.0, 20.0};
        // state_rank_summaries computes this internally; verify on a real table.
        AlignedMatrix matrix;
        matrix.outcomes = {{"y1", Direction::HigherIsWorse, ""},
                           {"y2", Direction::HigherIsWorse, ""}};
        // Single state, single county: ranks are 1 for both outcomes.
        matrix.rows.push_back({"c0", "A", {1.0, 1.0}});
        const auto summaries = state_rank_summaries(rank_table(matrix), matrix);
        CHECK(summaries[0].aggregate == 1.0);

        // And the documented arithmetic: (10 + 20) / 2 = 15.
        CHECK((summary.per_outcome_means[0] + summary.per_outcome_means[1]) / 2.0 == 15.0);
    }
}

TEST_CASE("lrst_test reproduces the hand-computed example", "[rank]") {
    // Group aggregates {1, 3} treat vs {2, 4} ctrl: difference = -1,
    // variance = s1^2/2 + s0^2/2 = 1 + 1 = 2, T = -1/sqrt(2).
    const std::vector<StateRankSummary> summaries = {
        summary_of("A", 1.0), summary_of("B", 3.0), summary_of("C", 2.0), summary_of("D", 4.0)};
    const auto groups = groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
    const auto result = lrst_test(summaries, groups);

    CHECK(result.rbar_treat == 2.0);
    CHECK(result.rbar_ctrl == 3.0);
    CHECK(result.variance == 2.0);
    CHECK(result.m1 == 2);
    CHECK(result.m0 == 2);
    CHECK_THAT(result.T, Catch::Matchers::WithinAbs(-0.7071067811865475, 1e-15));
    // Frozen reference values (40-digit computation of Phi at -1/sqrt(2)).
    CHECK_THAT(result.p_one_sided_greater,
               Catch::Matchers::WithinAbs(0.7602499389065233, 1e-15));
    CHECK_THAT(result.p_two_sided, Catch::Matchers::WithinAbs(0.4795001221869535, 1e-15));
}

TEST_CASE("identical group aggregate sequences give T = 0 and p = 1", "[rank]") {
    const std::vector<StateRankSummary> summaries = {
        summary_of("A1", 5.0), summary_of("A2", 5.0), summary_of("B1", 9.0),
        summary_of("B2", 9.0)};
    const auto groups = groups_of({{"A1", 1}, {"A2", 0}, {"B1", 1}, {"B2", 0}});
    const auto result = lrst_test(summaries, groups);
    CHECK(result.T == 0.0);
    CHECK(result.p_two_sided == 1.0);
    CHECK(result.p_one_sided_greater == 0.5);
}

TEST_CASE("lrst_test error taxonomy", "[rank]") {
    SECTION("degenerate variance with differing means") {
        const std::vector<StateRankSummary> summaries = {
            summary_of("A", 2.0), summary_of("B", 2.0), summary_of("C", 5.0),
            summary_of("D", 5.0)};
        const auto groups = groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
        try {
            lrst_test(summaries, groups);
            FAIL("expected DEGENERATE_VARIANCE");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::DegenerateVariance);
            const std::string msg = e.what();
            CHECK(msg.find("2") != std::string::npos);  // reports both rank means
            CHECK(msg.find("5") != std::string::npos);
        }
    }

    SECTION("fewer than 2 states per group") {
        const std::vector<StateRankSummary> summaries = {
            summary_of("A", 1.0), summary_of("B", 2.0), summary_of("C", 3.0)};
        const auto groups = groups_of({{"A", 1}, {"B", 0}, {"C", 0}});
        try {
            lrst_test(summaries, groups);
            FAIL("expected GROUP_TOO_SMALL");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::GroupTooSmall);
        }
    }

    SECTION("state without an assignment") {
        const std::vector<StateRankSummary> summaries = {summary_of("A", 1.0),
                                                         summary_of("B", 2.0)};
        const auto groups = groups_of({{"A", 1}});
        CHECK_THROWS_AS(lrst_test(summaries, groups), Error);
    }
}

TEST_CASE("label swap negates T and preserves p_two_sided", "[rank]") {
    Xoshiro256 rng(808);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<StateRankSummary> summaries;
        GroupMap groups, swapped;
        for (int s = 0; s < 8; ++s) {
            const std::string id = "S" + std::to_string(s);
            summaries.push_back(summary_of(id, 10.0 + rng.normal() * 3.0));
            const int g = s < 4 ? 1 : 0;
            groups.assignment.emplace(id, g);
            swapped.assignment.emplace(id, 1 - g);
        }
        const auto a = lrst_test(summaries, groups);
        const auto b = lrst_test(summaries, swapped);
        REQUIRE(b.T == -a.T);                          // exact negation
        REQUIRE(b.p_two_sided == a.p_two_sided);       // bitwise
        CHECK(b.rbar_treat == a.rbar_ctrl);
        CHECK(b.variance == a.variance);
    }
}

TEST_CASE("T is invariant to translating all aggregates", "[rank]") {
    std::vector<StateRankSummary> summaries = {
        summary_of("A", 3.0), summary_of("B", 8.0), summary_of("C", 4.0),
        summary_of("D", 11.0)};
    const auto groups = groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
    const auto base = lrst_test(summaries, groups);
    for (auto& summary : summaries) summary.aggregate += 250.0;
    const auto shifted = lrst_test(summaries, groups);
    CHECK_THAT(shifted.T, Catch::Matchers::WithinAbs(base.T, 1e-12));
}

TEST_CASE("lrst_test is invariant to summary order", "[rank]") {
    std::vector<StateRankSummary> summaries = {
        summary_of("A", 3.5), summary_of("B", 8.25), summary_of("C", 4.0),
        summary_of("D", 11.0), summary_of("E", 6.5), summary_of("F", 2.0)};
    const auto groups =
        groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}, {"E", 1}, {"F", 0}});
    const auto base = lrst_test(summaries, groups);

    std::mt19937 shuffler(4);
    for (int trial = 0; trial < 20; ++trial) {
        std::shuffle(summaries.begin(), summaries.end(), shuffler);
        const auto permuted = lrst_test(summaries, groups);
        REQUIRE(permuted.T == base.T);
        REQUIRE(permuted.variance == base.variance);
    }
}

TEST_CASE("p_two_sided equals 2 min(p1, 1-p1)", "[rank]") {
    const std::vector<double> aggregates = {1.0, 3.0, 2.0, 6.5};
    std::vector<StateRankSummary> summaries = {
        summary_of("A", aggregates[0]), summary_of("B", aggregates[1]),
        summary_of("C", aggregates[2]), summary_of("D", aggregates[3])};
    const auto groups = groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
    const auto result = lrst_test(summaries, groups);
    const double folded =
        2.0 * std::min(result.p_one_sided_greater, 1.0 - result.p_one_sided_greater);
    CHECK_THAT(result.p_two_sided, Catch::Matchers::WithinAbs(folded, 1e-14));
}

TEST_CASE("normal tail helper matches high-precision references", "[rank]") {
    struct Ref {
        double x, sf;
    };
    // Frozen from a 40-digit erfc evaluation.
    const Ref refs[] = {
        {0.0, 0.5},
        {1.0, 0.15865525393145705},
        {-1.0, 0.8413447460685429},
        {2.0, 0.022750131948179207},
        {-2.5, 0.9937903346742239},
        {5.0, 2.866515718791939e-07},
        {8.0, 6.220960574271784e-16},
        {-8.0, 0.9999999999999994},
    };
    for (const auto& ref : refs) {
        CHECK_THAT(normal_sf(ref.x), Catch::Matchers::WithinAbs(ref.sf, 1e-15));
    }
    // Clamp beyond the representable tail.
    CHECK(normal_sf(40.0) == 0.0);
    CHECK(normal_sf(-40.0) == 1.0);
}

TEST_CASE("result JSON carries the exact fields in order", "[rank]") {
    const std::vector<StateRankSummary> summaries = {
        summary_of("A", 1.0), summary_of("B", 3.0), summary_of("C", 2.0), summary_of("D", 4.0)};
    const auto groups = groups_of({{"A", 1}, {"B", 1}, {"C", 0}, {"D", 0}});
    auto result = lrst_test(summaries, groups);

    SECTION("without subsampling, C is null") {
        const std::string json = test_result_to_json(result);
        CHECK(json.find("\"C\": null") != std::string::npos);
    }

    SECTION("field order is canonical") {
        result.C = 50;
        const std::string json = test_result_to_json(result);
        const char* fields[] = {"\"T\"",  "\"rbar_treat\"", "\"rbar_ctrl\"",
                                "\"variance\"", "\"p_two_sided\"", "\"p_one_sided_greater\"",
                                "\"m1\"", "\"m0\"", "\"C\": 50", "\"K\"", "\"direction_note\""};
        std::size_t last = 0;
        for (const char* field : fields) {
            const std::size_t pos = json.find(field);
            REQUIRE(pos != std::string::npos);
            CHECK(pos > last);
            last = pos;
        }
        CHECK(json.find("larger ranks = more favorable") != std::string::npos);
    }
}

TEST_CASE("summaries CSV has the documented header and order", "[rank]") {
    AlignedMatrix matrix;
    matrix.outcomes = {{"y1", Direction::HigherIsWorse, ""}, {"y2", Direction::HigherIsWorse, ""}};
    matrix.rows.push_back({"c0", "B", {1.0, 4.0}});
    matrix.rows.push_back({"c1", "A", {2.0, 3.0}});
    matrix.rows.push_back({"c2", "A", {3.0, 2.0}});
    matrix.rows.push_back({"c3", "B", {4.0, 1.0}});
    const auto summaries = state_rank_summaries(rank_table(matrix), matrix);
    const auto groups = groups_of({{"A", 1}, {"B", 0}});

    std::ostringstream out;
    write_summaries_csv(out, summaries, groups);
    const std::string csv = out.str();
    CHECK(csv.rfind("state_id,group,n_counties,rbar_k1,rbar_k2,rbar\n", 0) == 0);
    CHECK(csv.find("\nA,1,2,") != std::string::npos);
    CHECK(csv.find("\nB,0,2,") != std::string::npos);
    CHECK(csv.find("\nA,") < csv.find("\nB,"));  // sorted by state_id
}
