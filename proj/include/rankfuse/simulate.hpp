#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/parallel.hpp"
#include "rankfuse/preprocess.hpp"
#include "rankfuse/rank.hpp"
#include "rankfuse/rng.hpp"
#include "rankfuse/stats.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// SimScenario — synthetic clustered panels on the burden scale.
//
// Generative model (standard normal marginals):
//   Y_si = sqrt(rho_within) * B_s + sqrt(1 - rho_within) * E_si
// where B_s and E_si are K-vectors with equicorrelation rho_outcome via a
// shared factor: X_k = sqrt(rho_outcome) * Z0 + sqrt(1 - rho_outcome) * Z_k.
// This pins Corr(Y_sik, Y_sjk) = rho_within across counties of a state and
// Corr(Y_sik, Y_sil) = rho_outcome across outcomes of a county. Group-1
// states get `shift` subtracted from every outcome, so a positive shift
// makes group 1 more favorable.
// ---------------------------------------------------------------------------

struct SimScenario {
    std::size_t m1 = 0;       // states in group 1
    std::size_t m0 = 0;       // states in group 0
    std::size_t n = 0;        // counties per state
    std::size_t K = 0;        // outcomes
    double rho_within = 0.0;  // within-state equicorrelation, [0, 1)
    double rho_outcome = 0.0; // cross-outcome equicorrelation, [0, 1)
    double shift = 0.0;       // burden shift subtracted for group-1 states
    std::uint64_t seed = 0;

    // Equicorrelation in [0, 1) keeps both implied covariance matrices
    // positive definite for any K.
    void validate() const {
        if (m1 < 1 || m0 < 1) throw Error(ErrorCode::ConfigError, "need m1 >= 1 and m0 >= 1");
        if (n < 1) throw Error(ErrorCode::ConfigError, "need n >= 1 counties per state");
        if (K < 1) throw Error(ErrorCode::ConfigError, "need K >= 1 outcomes");
        if (!(rho_within >= 0.0 && rho_within < 1.0)) {
            throw Error(ErrorCode::ConfigError, "rho_within must lie in [0, 1)");
        }
        if (!(rho_outcome >= 0.0 && rho_outcome < 1.0)) {
            throw Error(ErrorCode::ConfigError, "rho_outcome must lie in [0, 1)");
        }
        if (!std::isfinite(shift)) throw Error(ErrorCode::ConfigError, "shift must be finite");
    }
};

namespace detail {

inline std::string padded_id(const char* prefix, std::size_t index, std::size_t width) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%0*zu", prefix, static_cast<int>(width), index);
    return buf;
}

}  // namespace detail

inline std::pair<AlignedMatrix, GroupMap> simulate_panel(const SimScenario& scenario) {
    scenario.validate();

    const std::size_t K = scenario.K;
    const double w_state = std::sqrt(scenario.rho_within);
    const double w_noise = std::sqrt(1.0 - scenario.rho_within);
    const double w_shared = std::sqrt(scenario.rho_outcome);
    const double w_own = std::sqrt(1.0 - scenario.rho_outcome);

    Xoshiro256 rng(mix_seed(scenario.seed, fnv1a64("simulate_panel")));

    // Correlated K-vector: one shared factor plus K idiosyncratic terms.
    auto draw_equicorrelated = [&](std::vector<double>& out) {
        const double shared = rng.normal();
        for (std::size_t k = 0; k < K; ++k) out[k] = w_shared * shared + w_own * rng.normal();
    };

    AlignedMatrix matrix;
    matrix.outcomes.reserve(K);
    for (std::size_t k = 1; k <= K; ++k) {
        matrix.outcomes.push_back(
            {"y" + std::to_string(k), Direction::HigherIsWorse, "synthetic outcome " + std::to_string(k)});
    }
    matrix.rows.reserve((scenario.m1 + scenario.m0) * scenario.n);

    GroupMap groups;

    const std::size_t total_states = scenario.m1 + scenario.m0;
    const std::size_t state_width = std::to_string(total_states).size();
    const std::size_t county_width = std::to_string(scenario.n).size();

    std::vector<double> b_s(K);
    std::vector<double> noise(K);
    for (std::size_t s = 0; s < total_states; ++s) {
        const int group = s < scenario.m1 ? 1 : 0;
        const std::string state_id = group == 1 ? detail::padded_id("T", s + 1, state_width)
                                                : detail::padded_id("C", s + 1 - scenario.m1, state_width);
        groups.assignment.emplace(state_id, group);

        draw_equicorrelated(b_s);
        for (std::size_t i = 0; i < scenario.n; ++i) {
            MatrixRow row;
            row.state_id = state_id;
            row.county_id = state_id + "-" + detail::padded_id("c", i + 1, county_width);
            row.values.resize(K);
            draw_equicorrelated(noise);
            for (std::size_t k = 0; k < K; ++k) {
                double y = w_state * b_s[k] + w_noise * noise[k];
                if (group == 1) y -= scenario.shift;
                row.values[k] = y;
            }
            matrix.rows.push_back(std::move(row));
        }
    }

    return {std::move(matrix), std::move(groups)};
}

// ---------------------------------------------------------------------------
// calibration_run — Monte Carlo check of the normal reference: run the full
// pipeline on independent replicates of a scenario and report rejection
// rates at each alpha plus the moments of T. Degenerate-variance replicates
// are counted, not fatal.
// ---------------------------------------------------------------------------

struct CalibrationResult {
    std::map<double, double> rejection_rates;  // alpha -> one-sided rejection rate
    double mean_T = 0.0;
    std::optional<double> sd_T;
    std::size_t n_valid = 0;
    std::size_t n_degenerate = 0;
    std::vector<double> t_values;  // valid replicates, in replicate order
    std::vector<double> p_values;  // one-sided greater, aligned with t_values
};

inline CalibrationResult calibration_run(const SimScenario& scenario, std::size_t replicates,
                                         const std::vector<double>& alpha_levels, int threads = 1) {
    scenario.validate();
    if (replicates < 1) throw Error(ErrorCode::ConfigError, "replicates must be >= 1");

    struct Slot {
        bool degenerate = false;
        double T = 0.0;
        double p = 1.0;
    };
    std::vector<Slot> slots(replicates);

    parallel_for(replicates, threads, [&](std::size_t r) {
        SimScenario rep = scenario;
        rep.seed = mix_seed(scenario.seed, static_cast<std::uint64_t>(r));
        const auto [matrix, groups] = simulate_panel(rep);
        const auto table = rank_table(matrix);
        const auto summaries = state_rank_summaries(table, matrix);
        try {
            const TestResult result = lrst_test(summaries, groups, Sidedness::GreaterTreat);
            slots[r] = {false, result.T, result.p_one_sided_greater};
        } catch (const Error& e) {
            if (e.code() != ErrorCode::DegenerateVariance) throw;
            slots[r].degenerate = true;
        }
    });

    CalibrationResult result;
    for (const auto& slot : slots) {
        if (slot.degenerate) {
            ++result.n_degenerate;
        } else {
            result.t_values.push_back(slot.T);
            result.p_values.push_back(slot.p);
        }
    }
    result.n_valid = result.t_values.size();
    if (result.n_valid > 0) result.mean_T = mean(result.t_values);
    if (result.n_valid > 1) result.sd_T = sample_sd(result.t_values);
    for (double alpha : alpha_levels) {
        std::size_t rejections = 0;
        for (double p : result.p_values) {
            if (p < alpha) ++rejections;
        }
        result.rejection_rates[alpha] =
            result.n_valid == 0 ? 0.0
                                : static_cast<double>(rejections) / static_cast<double>(result.n_valid);
    }
    return result;
}

}  // namespace rankfuse
