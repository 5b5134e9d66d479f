#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/format.hpp"
#include "rankfuse/jsonio.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/parallel.hpp"
#include "rankfuse/preprocess.hpp"
#include "rankfuse/rank.hpp"
#include "rankfuse/rng.hpp"
#include "rankfuse/stats.hpp"

namespace rankfuse {

inline std::string_view to_string(Sidedness s) {
    return s == Sidedness::GreaterTreat ? "greater_treat" : "two_sided";
}

// ---------------------------------------------------------------------------
// Robustness protocol: repeated random county subsampling at several C
// values, summarizing the replicate distribution of T and the rejection
// frequencies.
// ---------------------------------------------------------------------------

struct RobustnessConfig {
    std::vector<int> C_values = {30, 40, 50};
    std::size_t replicates = 200;
    std::vector<double> alpha_levels = {0.05, 0.10};
    std::uint64_t master_seed = 0;
    Sidedness sidedness = Sidedness::GreaterTreat;

    void validate() const {
        if (C_values.empty()) throw Error(ErrorCode::ConfigError, "C_values must be non-empty");
        for (int c : C_values) {
            if (c < 1) throw Error(ErrorCode::ConfigError, "C values must be positive");
        }
        if (replicates < 1) throw Error(ErrorCode::ConfigError, "replicates must be >= 1");
        for (double a : alpha_levels) {
            if (!(a > 0.0 && a < 1.0)) {
                throw Error(ErrorCode::ConfigError, "alpha levels must lie in (0, 1)");
            }
        }
    }
};

// Replicate r of a C-run draws its subsample with this seed. The per-(C, r)
// mixing gives replicates a prefix property: shrinking the replicate count
// never changes the replicates that remain.
inline std::uint64_t replicate_seed(std::uint64_t master_seed, int C, std::size_t r) {
    return mix_seed(master_seed, static_cast<std::uint64_t>(C), static_cast<std::uint64_t>(r));
}

struct ReplicateRecord {
    std::size_t r = 0;
    bool degenerate = false;
    double T = 0.0;            // valid only when !degenerate
    double p_one_sided = 1.0;  // valid only when !degenerate
    double p_two_sided = 1.0;  // valid only when !degenerate
};

// Per-C slice of the summary. `error` is set (and the stats absent) when a
// C value cannot run at all.
struct CSummary {
    std::optional<std::string> error;
    double mean_T = 0.0;
    std::optional<double> sd_T;
    std::map<double, double> rejection_rates;  // alpha -> rate over valid replicates
    std::size_t n_valid = 0;
    std::size_t n_degenerate = 0;
    std::size_t m1 = 0;  // retained states per group (identical across replicates)
    std::size_t m0 = 0;
    double frac_T_positive = 0.0;
};

struct RobustnessSummary {
    RobustnessConfig config;
    std::map<int, CSummary> per_C;
};

// ---------------------------------------------------------------------------
// Replicate engine
// ---------------------------------------------------------------------------

// Subsample -> rank -> test, once per replicate. `matrix` must already be
// aligned and imputed.
inline std::vector<ReplicateRecord> run_replicates(const AlignedMatrix& matrix,
                                                   const GroupMap& groups, int C,
                                                   std::size_t replicates,
                                                   std::uint64_t master_seed, int threads = 1) {
    std::vector<ReplicateRecord> records(replicates);
    parallel_for(replicates, threads, [&](std::size_t r) {
        records[r].r = r;
        const SubsamplePlan plan = plan_subsample(matrix, C, replicate_seed(master_seed, C, r));
        const AlignedMatrix sample = apply_subsample(matrix, plan);
        const RankTable table = rank_table(sample);
        const auto summaries = state_rank_summaries(table, sample);
        try {
            const TestResult result = lrst_test(summaries, groups);
            records[r].T = result.T;
            records[r].p_one_sided = result.p_one_sided_greater;
            records[r].p_two_sided = result.p_two_sided;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateVariance) throw;
            records[r].degenerate = true;
        }
    });
    return records;
}

// Order-independent fold over replicate records. Degenerate replicates are
// excluded from the moments and rates and reported separately.
inline CSummary summarize_replicates(const std::vector<ReplicateRecord>& records,
                                     const std::vector<double>& alpha_levels,
                                     Sidedness sidedness) {
    CSummary summary;
    std::vector<double> t_values;
    std::size_t positive = 0;
    std::map<double, std::size_t> rejections;
    for (double alpha : alpha_levels) rejections[alpha] = 0;

    for (const auto& record : records) {
        if (record.degenerate) {
            ++summary.n_degenerate;
            continue;
        }
        t_values.push_back(record.T);
        if (record.T > 0.0) ++positive;
        const double p =
            sidedness == Sidedness::GreaterTreat ? record.p_one_sided : record.p_two_sided;
        for (auto& [alpha, count] : rejections) {
            if (p < alpha) ++count;
        }
    }

    summary.n_valid = t_values.size();
    if (summary.n_valid > 0) {
        summary.mean_T = mean(t_values);
        summary.frac_T_positive =
            static_cast<double>(positive) / static_cast<double>(summary.n_valid);
    }
    if (summary.n_valid > 1) summary.sd_T = sample_sd(t_values);
    for (const auto& [alpha, count] : rejections) {
        summary.rejection_rates[alpha] =
            summary.n_valid == 0
                ? 0.0
                : static_cast<double>(count) / static_cast<double>(summary.n_valid);
    }
    return summary;
}

// ---------------------------------------------------------------------------
// run_robustness — the full protocol over every configured C.
// ---------------------------------------------------------------------------

inline RobustnessSummary run_robustness(const PanelDataset& panel, const GroupMap& groups,
                                        const RobustnessConfig& cfg, int threads = 1) {
    cfg.validate();
    const AlignedMatrix matrix = align_and_impute(panel);
    const auto counts = matrix.state_counts();

    RobustnessSummary summary;
    summary.config = cfg;

    for (int C : cfg.C_values) {
        // Retention depends only on the panel and C, never on the seed, so
        // group viability is a per-C structural fact.
        std::size_t m_retained[2] = {0, 0};
        for (const auto& [state, n_s] : counts) {
            if (n_s < static_cast<std::size_t>(C)) continue;
            const auto group = groups.group_of(state);
            if (!group) {
                throw Error(ErrorCode::UnassignedState,
                            "state `" + state + "` has no group assignment");
            }
            ++m_retained[*group];
        }

        CSummary c_summary;
        if (m_retained[0] == 0 || m_retained[1] == 0) {
            c_summary.error = std::string(to_string(ErrorCode::GroupEmptied));
        } else if (m_retained[0] < 2 || m_retained[1] < 2) {
            c_summary.error = std::string(to_string(ErrorCode::GroupTooSmall));
        } else {
            const auto records =
                run_replicates(matrix, groups, C, cfg.replicates, cfg.master_seed, threads);
            c_summary = summarize_replicates(records, cfg.alpha_levels, cfg.sidedness);
        }
        c_summary.m1 = m_retained[1];
        c_summary.m0 = m_retained[0];
        summary.per_C.emplace(C, std::move(c_summary));
    }
    return summary;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string robustness_to_json(const RobustnessSummary& summary) {
    JsonValue c_values = JsonValue::array();
    for (int c : summary.config.C_values) c_values.push(static_cast<std::int64_t>(c));
    JsonValue alphas = JsonValue::array();
    for (double a : summary.config.alpha_levels) alphas.push(a);

    JsonValue per_c = JsonValue::object();
    for (const auto& [C, stats] : summary.per_C) {
        JsonValue entry = JsonValue::object();
        if (stats.error) {
            entry.add("error", *stats.error);
        } else {
            JsonValue rates = JsonValue::object();
            for (const auto& [alpha, rate] : stats.rejection_rates) {
                rates.add(format_short(alpha), rate);
            }
            entry.add("mean_T", stats.mean_T);
            entry.add("sd_T", stats.sd_T ? JsonValue(*stats.sd_T) : JsonValue(nullptr));
            entry.add("rejection_rate", std::move(rates));
            entry.add("n_valid", stats.n_valid);
            entry.add("n_degenerate", stats.n_degenerate);
            entry.add("frac_T_positive", stats.frac_T_positive);
        }
        entry.add("retained_state_counts",
                  JsonValue::object().add("m1", stats.m1).add("m0", stats.m0));
        per_c.add(std::to_string(C), std::move(entry));
    }

    return JsonValue::object()
        .add("C_values", std::move(c_values))
        .add("replicates", summary.config.replicates)
        .add("alpha_levels", std::move(alphas))
        .add("master_seed", summary.config.master_seed)
        .add("sidedness", std::string(to_string(summary.config.sidedness)))
        .add("per_C", std::move(per_c))
        .dump();
}

// Plain-text table with one row per C: mean and spread of T, then the
// rejection frequency per alpha (descending alpha, widest level first).
// C values that could not run are omitted from the rows.
inline std::string summarize_table(const RobustnessSummary& summary) {
    std::vector<double> alphas = summary.config.alpha_levels;
    std::sort(alphas.begin(), alphas.end(), std::greater<>());

    std::string out = "C & Mean T & SD(T)";
    for (double alpha : alphas) out += " & Pr(p<" + format_short(alpha) + ")";
    out += '\n';

    for (const auto& [C, stats] : summary.per_C) {
        if (stats.error) continue;
        out += std::to_string(C);
        out += " & " + format_fixed(stats.mean_T, 1);
        out += " & " + (stats.sd_T ? format_fixed(*stats.sd_T, 2) : std::string("—"));
        for (double alpha : alphas) {
            out += " & " + format_fixed(stats.rejection_rates.at(alpha), 3);
        }
        out += '\n';
    }
    return out;
}

}  // namespace rankfuse
