#pragma once

#include <algorithm>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "rankfuse/error.hpp"
#include "rankfuse/jsonio.hpp"
#include "rankfuse/panel.hpp"
#include "rankfuse/rng.hpp"
#include "rankfuse/stats.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// AlignedMatrix — the rank engine's input: fully numeric, all outcomes on
// the higher-is-worse (burden) scale, no missing entries. Each row is a
// whole county K-vector, so every outcome shares the row set by
// construction.
// ---------------------------------------------------------------------------

struct MatrixRow {
    std::string county_id;
    std::string state_id;
    std::vector<double> values;
};

struct Provenance {
    std::vector<std::string> alignment_flips;           // outcomes negated during alignment
    std::map<std::string, std::size_t> imputed_counts;  // outcome -> cells imputed
    std::optional<std::string> subsample_plan_id;
};

struct AlignedMatrix {
    std::vector<OutcomeSpec> outcomes;
    std::vector<MatrixRow> rows;
    Provenance provenance;

    std::size_t outcome_count() const { return outcomes.size(); }

    std::map<std::string, std::size_t> state_counts() const {
        std::map<std::string, std::size_t> counts;
        for (const auto& row : rows) ++counts[row.state_id];
        return counts;
    }
};

// ---------------------------------------------------------------------------
// align_outcomes — negate every higher-is-better outcome so that larger
// values mean worse conditions everywhere. Idempotent: direction flags flip
// on the first pass only.
// ---------------------------------------------------------------------------

inline PanelDataset align_outcomes(const PanelDataset& panel) {
    PanelDataset aligned = panel;
    for (std::size_t k = 0; k < aligned.outcomes.size(); ++k) {
        if (aligned.outcomes[k].direction != Direction::HigherIsBetter) continue;
        aligned.outcomes[k].direction = Direction::HigherIsWorse;
        for (auto& obs : aligned.observations) {
            if (obs.values[k]) obs.values[k] = -*obs.values[k];
        }
    }
    return aligned;
}

// Names of the outcomes align_outcomes would flip.
inline std::vector<std::string> alignment_flips(const PanelDataset& panel) {
    std::vector<std::string> flips;
    for (const auto& spec : panel.outcomes) {
        if (spec.direction == Direction::HigherIsBetter) flips.push_back(spec.name);
    }
    return flips;
}

// ---------------------------------------------------------------------------
// impute_state_median — replace each missing cell with the median of the
// present values of that outcome within the same state (type-2 median on
// even counts). Requires an aligned panel.
// ---------------------------------------------------------------------------

inline AlignedMatrix impute_state_median(const PanelDataset& panel) {
    for (const auto& spec : panel.outcomes) {
        if (spec.direction != Direction::HigherIsWorse) {
            throw Error(ErrorCode::NotAligned,
                        "outcome `" + spec.name + "` is not direction-aligned; run align_outcomes first");
        }
    }

    const std::size_t K = panel.outcome_count();

    // Present values per (state, outcome).
    std::map<std::string, std::vector<std::vector<double>>> present;
    for (const auto& obs : panel.observations) {
        auto [it, inserted] = present.try_emplace(obs.state_id, K);
        for (std::size_t k = 0; k < K; ++k) {
            if (obs.values[k]) it->second[k].push_back(*obs.values[k]);
        }
    }

    std::map<std::string, std::vector<double>> medians;
    for (const auto& [state, columns] : present) {
        std::vector<double> state_medians(K);
        for (std::size_t k = 0; k < K; ++k) {
            if (columns[k].empty()) {
                throw Error(ErrorCode::UnimputableStateOutcome,
                            "state `" + state + "` has no present values for outcome `" +
                                panel.outcomes[k].name + "`");
            }
            state_medians[k] = median(columns[k]);
        }
        medians.emplace(state, std::move(state_medians));
    }

    AlignedMatrix matrix;
    matrix.outcomes = panel.outcomes;
    matrix.rows.reserve(panel.observations.size());
    for (const auto& spec : panel.outcomes) matrix.provenance.imputed_counts[spec.name] = 0;

    for (const auto& obs : panel.observations) {
        MatrixRow row;
        row.county_id = obs.county_id;
        row.state_id = obs.state_id;
        row.values.resize(K);
        const auto& state_medians = medians.at(obs.state_id);
        for (std::size_t k = 0; k < K; ++k) {
            if (obs.values[k]) {
                row.values[k] = *obs.values[k];
            } else {
                row.values[k] = state_medians[k];
                ++matrix.provenance.imputed_counts[panel.outcomes[k].name];
            }
        }
        matrix.rows.push_back(std::move(row));
    }
    return matrix;
}

// align + impute in the pipeline's canonical order.
inline AlignedMatrix align_and_impute(const PanelDataset& panel) {
    AlignedMatrix matrix = impute_state_median(align_outcomes(panel));
    matrix.provenance.alignment_flips = alignment_flips(panel);
    return matrix;
}

// ---------------------------------------------------------------------------
// SubsamplePlan — C counties per retained state, drawn without replacement.
// Each state's draw is seeded by mix(seed, fnv1a(state_id)), so one state's
// selection never depends on which other states exist. County lists are
// sorted by county_id before drawing to remove input-order dependence.
// ---------------------------------------------------------------------------

struct SubsamplePlan {
    int C = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> retained_states;
    std::map<std::string, std::vector<std::string>> selection;  // state -> C county_ids, draw order
    std::vector<std::pair<std::string, std::string>> excluded_states;  // (state, reason)

    // Stable identifier for provenance records.
    std::string id() const {
        std::uint64_t h = fnv1a64("plan");
        h = mix_seed(h, static_cast<std::uint64_t>(C));
        h = mix_seed(h, seed);
        for (const auto& state : retained_states) h = mix_seed(h, fnv1a64(state));
        char buf[24];
        std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }
};

namespace detail {

inline SubsamplePlan plan_subsample_impl(const std::map<std::string, std::vector<std::string>>& counties_by_state,
                                         int C, std::uint64_t seed) {
    if (C < 1) throw Error(ErrorCode::ConfigError, "C must be >= 1");

    SubsamplePlan plan;
    plan.C = C;
    plan.seed = seed;

    for (const auto& [state, counties] : counties_by_state) {
        if (counties.size() < static_cast<std::size_t>(C)) {
            plan.excluded_states.emplace_back(state, "TOO_FEW_COUNTIES");
            continue;
        }
        std::vector<std::string> pool = counties;
        std::sort(pool.begin(), pool.end());

        // Partial Fisher-Yates: the first C slots are the sample, in draw order.
        Xoshiro256 rng(mix_seed(seed, fnv1a64(state)));
        const std::size_t n = pool.size();
        for (std::size_t i = 0; i < static_cast<std::size_t>(C); ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.bounded(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(static_cast<std::size_t>(C));
        plan.retained_states.push_back(state);
        plan.selection.emplace(state, std::move(pool));
    }

    if (plan.retained_states.empty()) {
        throw Error(ErrorCode::NoRetainedStates,
                    "no state has at least C=" + std::to_string(C) + " counties");
    }
    return plan;
}

}  // namespace detail

inline SubsamplePlan plan_subsample(const PanelDataset& panel, int C, std::uint64_t seed) {
    std::map<std::string, std::vector<std::string>> counties_by_state;
    for (const auto& obs : panel.observations) counties_by_state[obs.state_id].push_back(obs.county_id);
    return detail::plan_subsample_impl(counties_by_state, C, seed);
}

inline SubsamplePlan plan_subsample(const AlignedMatrix& matrix, int C, std::uint64_t seed) {
    std::map<std::string, std::vector<std::string>> counties_by_state;
    for (const auto& row : matrix.rows) counties_by_state[row.state_id].push_back(row.county_id);
    return detail::plan_subsample_impl(counties_by_state, C, seed);
}

// ---------------------------------------------------------------------------
// apply_subsample — keep exactly the selected rows, as whole K-vectors.
// Output order: retained states in sorted order, counties in draw order.
// ---------------------------------------------------------------------------

inline AlignedMatrix apply_subsample(const AlignedMatrix& matrix, const SubsamplePlan& plan) {
    std::map<std::string, const MatrixRow*> row_of;
    for (const auto& row : matrix.rows) row_of.emplace(row.county_id, &row);

    AlignedMatrix out;
    out.outcomes = matrix.outcomes;
    out.provenance = matrix.provenance;
    out.provenance.subsample_plan_id = plan.id();
    out.rows.reserve(plan.retained_states.size() * static_cast<std::size_t>(plan.C));

    for (const auto& state : plan.retained_states) {
        for (const auto& county : plan.selection.at(state)) {
            const auto it = row_of.find(county);
            if (it == row_of.end() || it->second->state_id != state) {
                throw Error(ErrorCode::PlanMismatch,
                            "selected county `" + county + "` (state `" + state +
                                "`) is absent from the matrix");
            }
            out.rows.push_back(*it->second);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plan JSON round-trip (--plan-out / --plan-in)
// ---------------------------------------------------------------------------

inline std::string plan_to_json(const SubsamplePlan& plan) {
    JsonValue selection = JsonValue::object();
    for (const auto& state : plan.retained_states) {
        JsonValue counties = JsonValue::array();
        for (const auto& county : plan.selection.at(state)) counties.push(county);
        selection.add(state, std::move(counties));
    }
    JsonValue excluded = JsonValue::array();
    for (const auto& [state, reason] : plan.excluded_states) {
        excluded.push(JsonValue::object().add("state_id", state).add("reason", reason));
    }
    JsonValue retained = JsonValue::array();
    for (const auto& state : plan.retained_states) retained.push(state);

    return JsonValue::object()
        .add("C", static_cast<std::int64_t>(plan.C))
        .add("seed", plan.seed)
        .add("retained_states", std::move(retained))
        .add("selection", std::move(selection))
        .add("excluded_states", std::move(excluded))
        .dump();
}

inline SubsamplePlan plan_from_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("plan JSON: ") + e.what());
    }
    try {
        SubsamplePlan plan;
        plan.C = j.at("C").get<int>();
        plan.seed = j.at("seed").get<std::uint64_t>();
        plan.retained_states = j.at("retained_states").get<std::vector<std::string>>();
        for (const auto& state : plan.retained_states) {
            plan.selection[state] = j.at("selection").at(state).get<std::vector<std::string>>();
        }
        for (const auto& entry : j.at("excluded_states")) {
            plan.excluded_states.emplace_back(entry.at("state_id").get<std::string>(),
                                              entry.at("reason").get<std::string>());
        }
        return plan;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("plan JSON: ") + e.what());
    }
}

}  // namespace rankfuse
