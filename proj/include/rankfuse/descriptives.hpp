#pragma once

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/format.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/preprocess.hpp"
#include "rankfuse/rank.hpp"
#include "rankfuse/stats.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// Exploratory statistics: the cross-outcome correlation matrix and the
// MAD-standardized group differences. Both operate on the aligned (burden
// scale, fully numeric) matrix.
// ---------------------------------------------------------------------------

enum class CorrelationMethod { Pearson, Spearman };

inline std::string_view to_string(CorrelationMethod m) {
    return m == CorrelationMethod::Pearson ? "pearson" : "spearman";
}

struct CorrelationResult {
    CorrelationMethod method = CorrelationMethod::Pearson;
    std::vector<std::string> outcomes;
    // K×K, symmetric, unit diagonal. A constant column makes every entry in
    // its row/column a flagged null.
    std::vector<std::vector<std::optional<double>>> entries;
    std::vector<std::string> warnings;
};

struct StdDiffEntry {
    std::string outcome;
    std::optional<double> diff_mad_units;  // absent when the outcome is excluded
    double mad = 0.0;                      // scaled MAD about the pooled median
    bool zero_mad = false;
};

struct StdDiffResult {
    std::vector<StdDiffEntry> entries;
    std::vector<std::string> warnings;
};

struct DescriptiveSummary {
    CorrelationResult correlation;
    StdDiffResult std_diffs;
};

// ---------------------------------------------------------------------------
// correlation_matrix — pairwise coefficients over all counties pooled.
// Spearman is Pearson on mid-ranks, so ties are handled the same way the
// rank engine handles them.
// ---------------------------------------------------------------------------

inline CorrelationResult correlation_matrix(const AlignedMatrix& matrix,
                                            CorrelationMethod method) {
    if (matrix.rows.size() < 2) {
        throw Error(ErrorCode::DomainError, "correlation matrix needs at least 2 rows");
    }
    const std::size_t K = matrix.outcome_count();

    std::vector<std::vector<double>> columns(K, std::vector<double>(matrix.rows.size()));
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        for (std::size_t k = 0; k < K; ++k) columns[k][i] = matrix.rows[i].values[k];
    }
    if (method == CorrelationMethod::Spearman) {
        for (auto& column : columns) column = midranks(column);
    }

    CorrelationResult result;
    result.method = method;
    for (const auto& spec : matrix.outcomes) result.outcomes.push_back(spec.name);
    result.entries.assign(K, std::vector<std::optional<double>>(K));

    std::vector<bool> constant(K);
    for (std::size_t k = 0; k < K; ++k) {
        const auto [lo, hi] = std::minmax_element(columns[k].begin(), columns[k].end());
        constant[k] = (*lo == *hi);
        if (constant[k]) {
            result.warnings.push_back("CONSTANT_COLUMN: outcome `" + result.outcomes[k] +
                                      "` has zero variance; its correlations are undefined");
        }
    }

    for (std::size_t i = 0; i < K; ++i) {
        if (!constant[i]) result.entries[i][i] = 1.0;
        for (std::size_t j = i + 1; j < K; ++j) {
            const auto r = pearson(columns[i], columns[j]);
            result.entries[i][j] = r;
            result.entries[j][i] = r;  // symmetric by construction
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// standardized_differences — per outcome, the group-1 minus group-0 county
// mean in units of the scaled MAD about the pooled median. Negative values
// mean group 1 carries less burden.
// ---------------------------------------------------------------------------

inline StdDiffResult standardized_differences(const AlignedMatrix& matrix,
                                              const GroupMap& groups) {
    const std::size_t K = matrix.outcome_count();

    std::vector<int> row_group(matrix.rows.size());
    std::size_t group_sizes[2] = {0, 0};
    for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
        const auto group = groups.group_of(matrix.rows[i].state_id);
        if (!group) {
            throw Error(ErrorCode::UnassignedState, "state `" + matrix.rows[i].state_id +
                                                        "` has no group assignment");
        }
        row_group[i] = *group;
        ++group_sizes[*group];
    }
    if (group_sizes[0] == 0 || group_sizes[1] == 0) {
        throw Error(ErrorCode::EmptyGroup,
                    "standardized differences need counties in both groups");
    }

    StdDiffResult result;
    std::vector<double> pooled(matrix.rows.size());
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
            pooled[i] = matrix.rows[i].values[k];
        }
        const double pooled_median = median(pooled);
        const double mad = scaled_mad(pooled, pooled_median);

        // Summing median-centered values keeps the group-mean difference
        // accurate when a location offset dominates the spread; the offset
        // cancels from the difference exactly.
        double sums[2] = {0.0, 0.0};
        for (std::size_t i = 0; i < matrix.rows.size(); ++i) {
            sums[row_group[i]] += pooled[i] - pooled_median;
        }

        StdDiffEntry entry;
        entry.outcome = matrix.outcomes[k].name;
        entry.mad = mad;
        if (mad == 0.0) {
            entry.zero_mad = true;
            result.warnings.push_back("ZERO_MAD: outcome `" + entry.outcome +
                                      "` has zero MAD; excluded from standardized differences");
        } else {
            const double mean1 = sums[1] / static_cast<double>(group_sizes[1]);
            const double mean0 = sums[0] / static_cast<double>(group_sizes[0]);
            entry.diff_mad_units = (mean1 - mean0) / mad;
        }
        result.entries.push_back(std::move(entry));
    }
    return result;
}

inline DescriptiveSummary describe(const AlignedMatrix& matrix, const GroupMap& groups,
                                   CorrelationMethod method = CorrelationMethod::Pearson) {
    return DescriptiveSummary{correlation_matrix(matrix, method),
                              standardized_differences(matrix, groups)};
}

// ---------------------------------------------------------------------------
// CSV writers. Flagged-null correlation entries and excluded differences
// are written as NA, matching the reader's missing-value convention.
// ---------------------------------------------------------------------------

inline std::string write_correlation_csv(const CorrelationResult& result) {
    std::string out = "outcome";
    for (const auto& name : result.outcomes) out += "," + name;
    out += '\n';
    for (std::size_t i = 0; i < result.outcomes.size(); ++i) {
        out += result.outcomes[i];
        for (std::size_t j = 0; j < result.outcomes.size(); ++j) {
            const auto& entry = result.entries[i][j];
            out += ',';
            out += entry ? format_double(*entry) : "NA";
        }
        out += '\n';
    }
    return out;
}

inline std::string write_std_diffs_csv(const StdDiffResult& result) {
    std::string out =
        "# mad = 1.4826 * median(|x - pooled median|), pooled across both groups\n"
        "outcome,diff_mad_units,mad,flag\n";
    for (const auto& entry : result.entries) {
        out += entry.outcome;
        out += ',';
        out += entry.diff_mad_units ? format_double(*entry.diff_mad_units) : "NA";
        out += ',' + format_double(entry.mad);
        out += ',';
        if (entry.zero_mad) out += "ZERO_MAD";
        out += '\n';
    }
    return out;
}

}  // namespace rankfuse
