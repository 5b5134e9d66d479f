#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/rank.hpp"
#include "rankfuse/rng.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// brute_force_midranks — O(n^2) definitional oracle:
//   rank(v_i) = #{v_j < v_i} + (1 + #{v_j == v_i}) / 2
// Kept deliberately independent of the sort-based implementation.
// ---------------------------------------------------------------------------

inline std::vector<double> brute_force_midranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<double> ranks(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t below = 0;
        std::size_t equal = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (values[j] < values[i]) ++below;
            else if (values[j] == values[i]) ++equal;
        }
        ranks[i] = static_cast<double>(below) + (1.0 + static_cast<double>(equal)) / 2.0;
    }
    return ranks;
}

// ---------------------------------------------------------------------------
// permutation_test — cluster-label permutation oracle. State aggregates are
// fixed (pooled mid-ranks are label-invariant, so per-permutation reranking
// would be a no-op); only the group labels permute. Exhaustive when the
// assignment count fits the budget, Monte Carlo otherwise; add-one p-value
// either way, so p > 0 always.
// ---------------------------------------------------------------------------

struct PermutationResult {
    double p_value = 1.0;
    std::uint64_t n_permutations = 0;
    bool exhaustive = false;
    double observed_T_like = 0.0;  // unstudentized rbar_treat - rbar_ctrl
};

namespace detail {

// C(n, k) capped: returns cap + 1 as an overflow sentinel.
inline std::uint64_t binomial_capped(std::uint64_t n, std::uint64_t k, std::uint64_t cap) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    unsigned __int128 result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - k + i) / i;  // exact at every step
        if (result > cap) return cap + 1;
    }
    return static_cast<std::uint64_t>(result);
}

}  // namespace detail

inline PermutationResult permutation_test(const std::vector<StateRankSummary>& summaries,
                                          const GroupMap& groups, std::uint64_t max_permutations,
                                          std::uint64_t seed) {
    std::vector<const StateRankSummary*> sorted;
    sorted.reserve(summaries.size());
    for (const auto& summary : summaries) sorted.push_back(&summary);
    std::sort(sorted.begin(), sorted.end(),
              [](const StateRankSummary* a, const StateRankSummary* b) {
                  return a->state_id < b->state_id;
              });

    std::vector<double> aggregates;
    std::vector<std::size_t> observed_treat;
    std::size_t m1 = 0, m0 = 0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto group = groups.group_of(sorted[i]->state_id);
        if (!group) {
            throw Error(ErrorCode::UnassignedState,
                        "state `" + sorted[i]->state_id + "` has no group assignment");
        }
        aggregates.push_back(sorted[i]->aggregate);
        if (*group == 1) {
            observed_treat.push_back(i);
            ++m1;
        } else {
            ++m0;
        }
    }
    if (m1 == 0 || m0 == 0) {
        throw Error(ErrorCode::EmptyGroup, "permutation test needs both groups non-empty");
    }
    const std::size_t total = m1 + m0;

    double grand_sum = 0.0;
    for (double a : aggregates) grand_sum += a;

    // Mean difference for a given treatment index set; shared by the
    // observed statistic and every permuted one so comparisons are exact.
    auto diff_for = [&](std::span<const std::size_t> treat) {
        double treat_sum = 0.0;
        for (std::size_t i : treat) treat_sum += aggregates[i];
        return treat_sum / static_cast<double>(m1) -
               (grand_sum - treat_sum) / static_cast<double>(m0);
    };

    PermutationResult result;
    result.observed_T_like = diff_for(observed_treat);

    const std::uint64_t n_assignments =
        detail::binomial_capped(total, m1, max_permutations);

    std::uint64_t exceed = 0;
    if (n_assignments <= max_permutations) {
        // Exhaustive: walk all m1-subsets in lexicographic order.
        result.exhaustive = true;
        result.n_permutations = n_assignments;
        std::vector<std::size_t> combo(m1);
        for (std::size_t i = 0; i < m1; ++i) combo[i] = i;
        bool more = true;
        while (more) {
            if (diff_for(combo) >= result.observed_T_like) ++exceed;
            more = false;
            for (std::size_t i = m1; i-- > 0;) {
                if (combo[i] != i + total - m1) {
                    ++combo[i];
                    for (std::size_t j = i + 1; j < m1; ++j) combo[j] = combo[j - 1] + 1;
                    more = true;
                    break;
                }
            }
        }
    } else {
        // Monte Carlo: each replicate relabels uniformly at random (a fresh
        // m1-subset via partial Fisher-Yates over the state indices).
        result.exhaustive = false;
        result.n_permutations = max_permutations;
        Xoshiro256 rng(mix_seed(seed, fnv1a64("permutation")));
        std::vector<std::size_t> indices(total);
        std::vector<std::size_t> treat(m1);
        for (std::uint64_t r = 0; r < max_permutations; ++r) {
            for (std::size_t i = 0; i < total; ++i) indices[i] = i;
            for (std::size_t i = 0; i < m1; ++i) {
                const std::size_t j = i + static_cast<std::size_t>(rng.bounded(total - i));
                std::swap(indices[i], indices[j]);
                treat[i] = indices[i];
            }
            if (diff_for(treat) >= result.observed_T_like) ++exceed;
        }
    }

    result.p_value = (1.0 + static_cast<double>(exceed)) /
                     (1.0 + static_cast<double>(result.n_permutations));
    return result;
}

}  // namespace rankfuse
