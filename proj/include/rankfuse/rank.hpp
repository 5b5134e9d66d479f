#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/format.hpp"
#include "rankfuse/jsonio.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/preprocess.hpp"
#include "rankfuse/stats.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// midranks — ascending mid-ranks with tie averaging. A tie block occupying
// sorted positions p..p+t-1 (1-based) gets rank p + (t-1)/2. Output is
// aligned to input order.
// ---------------------------------------------------------------------------

inline std::vector<double> midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n == 0) throw Error(ErrorCode::DomainError, "midranks of an empty vector");
    for (double v : values) {
        if (!std::isfinite(v)) throw Error(ErrorCode::DomainError, "midranks requires finite values");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i + 1;
        while (j < n && values[order[j]] == values[order[i]]) ++j;
        // positions i+1 .. j (1-based); mid-rank is their average
        const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
        i = j;
    }
    return ranks;
}

// ---------------------------------------------------------------------------
// RankTable — pooled mid-ranks per outcome. Ranking is applied to the
// negated burden column, so the least-burdened county gets the largest
// rank: larger ranks = more favorable conditions.
// ---------------------------------------------------------------------------

struct RankTable {
    std::vector<std::vector<double>> ranks;  // [outcome][row]
    std::size_t N = 0;
    std::vector<std::size_t> tie_groups;  // per outcome: count of tied groups (size >= 2)
};

inline RankTable rank_table(const AlignedMatrix& matrix) {
    if (matrix.rows.empty()) throw Error(ErrorCode::DomainError, "rank_table on an empty matrix");
    const std::size_t K = matrix.outcome_count();
    const std::size_t N = matrix.rows.size();

    RankTable table;
    table.N = N;
    table.ranks.resize(K);
    table.tie_groups.resize(K, 0);

    std::vector<double> column(N);
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < N; ++i) column[i] = -matrix.rows[i].values[k];
        table.ranks[k] = midranks(column);

        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        std::size_t i = 0;
        while (i < N) {
            std::size_t j = i + 1;
            while (j < N && sorted[j] == sorted[i]) ++j;
            if (j - i >= 2) ++table.tie_groups[k];
            i = j;
        }
    }
    return table;
}

// ---------------------------------------------------------------------------
// StateRankSummary — per-state mean rank per outcome, and the aggregate:
// the plain average of the per-outcome means.
// ---------------------------------------------------------------------------

struct StateRankSummary {
    std::string state_id;
    std::vector<double> per_outcome_means;
    double aggregate = 0.0;
    std::size_t n_counties = 0;
};

// One summary per distinct state, sorted by state_id.
inline std::vector<StateRankSummary> state_rank_summaries(const RankTable& table,
                                                          const AlignedMatrix& matrix) {
    if (table.N != matrix.rows.size()) {
        throw Error(ErrorCode::DomainError, "rank table does not match matrix rows");
    }
    const std::size_t K = matrix.outcome_count();

    std::map<std::string, std::vector<std::size_t>> rows_of_state;
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        rows_of_state[matrix.rows[i].state_id].push_back(i);
    }

    std::vector<StateRankSummary> summaries;
    summaries.reserve(rows_of_state.size());
    for (const auto& [state, rows] : rows_of_state) {
        StateRankSummary summary;
        summary.state_id = state;
        summary.n_counties = rows.size();
        summary.per_outcome_means.resize(K);
        double total = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            double sum = 0.0;
            for (std::size_t i : rows) sum += table.ranks[k][i];
            summary.per_outcome_means[k] = sum / static_cast<double>(rows.size());
            total += summary.per_outcome_means[k];
        }
        summary.aggregate = total / static_cast<double>(K);
        summaries.push_back(std::move(summary));
    }
    return summaries;
}

// ---------------------------------------------------------------------------
// lrst_test — the studentized between-group rank comparison on state
// aggregates. States are the independent units; the spread of the
// aggregates absorbs both within-state county dependence and cross-outcome
// correlation.
// ---------------------------------------------------------------------------

enum class Sidedness { TwoSided, GreaterTreat };

struct TestResult {
    double T = 0.0;
    double rbar_treat = 0.0;
    double rbar_ctrl = 0.0;
    double variance = 0.0;
    double p_two_sided = 1.0;
    double p_one_sided_greater = 0.5;
    std::size_t m1 = 0;
    std::size_t m0 = 0;
    std::optional<int> C;  // counties per state when subsampled
    std::size_t K = 0;
    static constexpr const char* direction_note = "larger ranks = more favorable";
};

// p-value under the configured decision rule.
inline double p_for(const TestResult& result, Sidedness sidedness) {
    return sidedness == Sidedness::GreaterTreat ? result.p_one_sided_greater : result.p_two_sided;
}

inline TestResult lrst_test(const std::vector<StateRankSummary>& summaries, const GroupMap& groups,
                            Sidedness /*sidedness*/ = Sidedness::GreaterTreat) {
    // Canonical state order makes the result independent of input order.
    std::vector<const StateRankSummary*> sorted;
    sorted.reserve(summaries.size());
    for (const auto& summary : summaries) sorted.push_back(&summary);
    std::sort(sorted.begin(), sorted.end(),
              [](const StateRankSummary* a, const StateRankSummary* b) {
                  return a->state_id < b->state_id;
              });

    std::vector<double> agg[2];
    std::size_t K = 0;
    for (const auto* summary : sorted) {
        const auto group = groups.group_of(summary->state_id);
        if (!group) {
            throw Error(ErrorCode::UnassignedState,
                        "state `" + summary->state_id + "` has no group assignment");
        }
        agg[*group].push_back(summary->aggregate);
        K = summary->per_outcome_means.size();
    }

    TestResult result;
    result.m1 = agg[1].size();
    result.m0 = agg[0].size();
    result.K = K;
    if (result.m1 < 2 || result.m0 < 2) {
        throw Error(ErrorCode::GroupTooSmall,
                    "need at least 2 states per group, got m1=" + std::to_string(result.m1) +
                        " m0=" + std::to_string(result.m0));
    }

    result.rbar_treat = mean(agg[1]);
    result.rbar_ctrl = mean(agg[0]);
    result.variance = sample_variance(agg[1]) / static_cast<double>(result.m1) +
                      sample_variance(agg[0]) / static_cast<double>(result.m0);
    if (result.variance == 0.0) {
        throw Error(ErrorCode::DegenerateVariance,
                    "all state aggregates are equal within each group; T is undefined "
                    "(rbar_treat=" + format_double(result.rbar_treat) +
                        ", rbar_ctrl=" + format_double(result.rbar_ctrl) + ")");
    }

    result.T = (result.rbar_treat - result.rbar_ctrl) / std::sqrt(result.variance);
    result.p_one_sided_greater = normal_sf(result.T);
    result.p_two_sided = result.T > 38.0 || result.T < -38.0
                             ? 0.0
                             : std::erfc(std::fabs(result.T) * 0.70710678118654752440084436210485);
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string test_result_to_json(const TestResult& result) {
    JsonValue j = JsonValue::object();
    j.add("T", result.T);
    j.add("rbar_treat", result.rbar_treat);
    j.add("rbar_ctrl", result.rbar_ctrl);
    j.add("variance", result.variance);
    j.add("p_two_sided", result.p_two_sided);
    j.add("p_one_sided_greater", result.p_one_sided_greater);
    j.add("m1", result.m1);
    j.add("m0", result.m0);
    j.add("C", result.C ? JsonValue(static_cast<std::int64_t>(*result.C)) : JsonValue(nullptr));
    j.add("K", result.K);
    j.add("direction_note", TestResult::direction_note);
    return j.dump();
}

// state_id,group,n_counties,rbar_k1..rbar_kK,rbar
inline void write_summaries_csv(std::ostream& out, const std::vector<StateRankSummary>& summaries,
                                const GroupMap& groups) {
    std::size_t K = summaries.empty() ? 0 : summaries.front().per_outcome_means.size();
    out << "state_id,group,n_counties";
    for (std::size_t k = 1; k <= K; ++k) out << ",rbar_k" << k;
    out << ",rbar\n";

    std::vector<const StateRankSummary*> sorted;
    for (const auto& summary : summaries) sorted.push_back(&summary);
    std::sort(sorted.begin(), sorted.end(),
              [](const StateRankSummary* a, const StateRankSummary* b) {
                  return a->state_id < b->state_id;
              });

    for (const auto* summary : sorted) {
        const auto group = groups.group_of(summary->state_id);
        out << summary->state_id << ',' << (group ? std::to_string(*group) : std::string())
            << ',' << summary->n_counties;
        for (double rbar : summary->per_outcome_means) out << ',' << format_double(rbar);
        out << ',' << format_double(summary->aggregate) << '\n';
    }
}

}  // namespace rankfuse
