#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rankfuse/error.hpp"
#include "rankfuse/format.hpp"

namespace rankfuse {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Direction { HigherIsWorse, HigherIsBetter };

inline std::string_view to_string(Direction d) {
    return d == Direction::HigherIsWorse ? "higher_is_worse" : "higher_is_better";
}

struct OutcomeSpec {
    std::string name;
    Direction direction = Direction::HigherIsWorse;
    std::string label;
};

// One county row. values[k] is nullopt for a missing cell; present values
// are always finite.
struct CountyObservation {
    std::string county_id;
    std::string state_id;
    std::vector<std::optional<double>> values;
};

struct PanelDataset {
    std::vector<OutcomeSpec> outcomes;
    std::vector<CountyObservation> observations;

    std::size_t outcome_count() const { return outcomes.size(); }

    // n_s: counties per state.
    std::map<std::string, std::size_t> state_counts() const {
        std::map<std::string, std::size_t> counts;
        for (const auto& obs : observations) ++counts[obs.state_id];
        return counts;
    }
};

// state_id -> group in {0, 1}.
struct GroupMap {
    std::map<std::string, int> assignment;

    std::optional<int> group_of(const std::string& state_id) const {
        auto it = assignment.find(state_id);
        if (it == assignment.end()) return std::nullopt;
        return it->second;
    }
};

enum class Severity { Error, Warning };

struct ValidationItem {
    std::string code;
    std::string message;
    std::string location;
};

struct ValidationReport {
    std::vector<ValidationItem> errors;
    std::vector<ValidationItem> warnings;
    std::map<std::string, std::size_t> missing_counts;

    bool ok() const { return errors.empty(); }
};

// ---------------------------------------------------------------------------
// CSV primitives (plain comma-separated, no quoting; the file formats here
// never carry embedded commas)
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            fields.emplace_back(trim(line.substr(start)));
            break;
        }
        fields.emplace_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return fields;
}

inline bool is_missing_token(std::string_view cell) {
    if (cell.empty()) return true;
    if (cell.size() != 2) return false;
    const char a = static_cast<char>(std::tolower(static_cast<unsigned char>(cell[0])));
    const char b = static_cast<char>(std::tolower(static_cast<unsigned char>(cell[1])));
    return a == 'n' && b == 'a';
}

// Strict numeric parse: the whole token must be consumed and the value finite.
inline std::optional<double> parse_number(std::string_view cell) {
    double value = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    const auto result = std::from_chars(first, last, value);
    if (result.ec != std::errc() || result.ptr != last) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Outcome config
//
// Line format: `name,direction[,label]`, one outcome per line, in panel
// column order. Blank lines and `#` comments are skipped.
// ---------------------------------------------------------------------------

inline std::vector<OutcomeSpec> parse_outcome_config(std::istream& in) {
    std::vector<OutcomeSpec> outcomes;
    std::set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view stripped = detail::trim(line);
        if (stripped.empty() || stripped.front() == '#') continue;
        const auto fields = detail::split_csv_line(stripped);
        if (fields.size() < 2 || fields.size() > 3) {
            throw Error(ErrorCode::ConfigError,
                        "outcome config line " + std::to_string(line_no) +
                            ": expected `name,direction[,label]`");
        }
        OutcomeSpec spec;
        spec.name = fields[0];
        if (spec.name.empty()) {
            throw Error(ErrorCode::ConfigError,
                        "outcome config line " + std::to_string(line_no) + ": empty outcome name");
        }
        if (fields[1] == "higher_is_worse") {
            spec.direction = Direction::HigherIsWorse;
        } else if (fields[1] == "higher_is_better") {
            spec.direction = Direction::HigherIsBetter;
        } else {
            throw Error(ErrorCode::ConfigError,
                        "outcome config line " + std::to_string(line_no) +
                            ": direction must be higher_is_worse or higher_is_better, got `" +
                            fields[1] + "`");
        }
        if (fields.size() == 3) spec.label = fields[2];
        if (!seen.insert(spec.name).second) {
            throw Error(ErrorCode::ConfigError, "duplicate outcome name `" + spec.name + "`");
        }
        outcomes.push_back(std::move(spec));
    }
    if (outcomes.empty()) {
        throw Error(ErrorCode::ConfigError, "outcome config lists no outcomes");
    }
    return outcomes;
}

// ---------------------------------------------------------------------------
// Panel CSV
//
// Header: county_id,state_id,<outcome...>. Columns are reordered to follow
// the outcome config, not the file. Missing cells are empty or NA
// (case-insensitive); anything else non-numeric is a hard parse error.
// ---------------------------------------------------------------------------

inline PanelDataset parse_panel(std::istream& in, const std::vector<OutcomeSpec>& outcome_config) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::ParseError, "panel CSV is empty (missing header)");
    }
    const auto header = detail::split_csv_line(line);

    auto column_of = [&](std::string_view name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        return std::nullopt;
    };

    const auto county_col = column_of("county_id");
    const auto state_col = column_of("state_id");
    if (!county_col || !state_col) {
        throw Error(ErrorCode::ParseError, "panel header must contain county_id and state_id");
    }

    std::vector<std::size_t> outcome_cols;
    outcome_cols.reserve(outcome_config.size());
    for (const auto& spec : outcome_config) {
        const auto col = column_of(spec.name);
        if (!col) {
            throw Error(ErrorCode::ConfigError,
                        "configured outcome `" + spec.name + "` absent from panel header");
        }
        outcome_cols.push_back(*col);
    }

    PanelDataset panel;
    panel.outcomes = outcome_config;

    std::map<std::string, std::size_t> first_line_of_county;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": expected " +
                            std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
        }

        CountyObservation obs;
        obs.county_id = fields[*county_col];
        obs.state_id = fields[*state_col];
        if (obs.county_id.empty() || obs.state_id.empty()) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": empty county_id or state_id");
        }

        obs.values.reserve(outcome_config.size());
        for (std::size_t k = 0; k < outcome_cols.size(); ++k) {
            const std::string& cell = fields[outcome_cols[k]];
            if (detail::is_missing_token(cell)) {
                obs.values.emplace_back(std::nullopt);
                continue;
            }
            const auto value = detail::parse_number(cell);
            if (!value) {
                throw Error(ErrorCode::ParseError,
                            "line " + std::to_string(line_no) + ", column `" +
                                outcome_config[k].name + "`: cannot parse `" + cell +
                                "` as a number");
            }
            obs.values.emplace_back(*value);
        }

        const auto [it, inserted] = first_line_of_county.emplace(obs.county_id, line_no);
        if (!inserted) {
            throw Error(ErrorCode::DuplicateCounty,
                        "duplicate county_id `" + obs.county_id + "` at lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
        }
        panel.observations.push_back(std::move(obs));
    }
    return panel;
}

// Canonical serialization; re-parsing yields a value-identical panel.
inline void write_panel_csv(std::ostream& out, const PanelDataset& panel) {
    out << "county_id,state_id";
    for (const auto& spec : panel.outcomes) out << ',' << spec.name;
    out << '\n';
    for (const auto& obs : panel.observations) {
        out << obs.county_id << ',' << obs.state_id;
        for (const auto& value : obs.values) {
            out << ',';
            if (value) out << format_double(*value);
        }
        out << '\n';
    }
}

inline void write_outcome_config(std::ostream& out, const std::vector<OutcomeSpec>& outcomes) {
    for (const auto& spec : outcomes) {
        out << spec.name << ',' << to_string(spec.direction);
        if (!spec.label.empty()) out << ',' << spec.label;
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Group CSV: header `state_id,group`, group in {0, 1}
// ---------------------------------------------------------------------------

inline GroupMap parse_group_map(std::istream& in, std::vector<std::string>* warnings = nullptr) {
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::ParseError, "group CSV is empty (missing header)");
    }
    const auto header = detail::split_csv_line(line);
    if (header.size() != 2 || header[0] != "state_id" || header[1] != "group") {
        throw Error(ErrorCode::ParseError, "group CSV header must be `state_id,group`");
    }

    GroupMap groups;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != 2) {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": expected 2 fields");
        }
        const std::string& state = fields[0];
        int group = -1;
        if (fields[1] == "0") group = 0;
        else if (fields[1] == "1") group = 1;
        else {
            throw Error(ErrorCode::ParseError,
                        "line " + std::to_string(line_no) + ": group must be 0 or 1, got `" +
                            fields[1] + "`");
        }
        const auto [it, inserted] = groups.assignment.emplace(state, group);
        if (!inserted) {
            if (it->second != group) {
                throw Error(ErrorCode::ConflictingGroup,
                            "state `" + state + "` assigned to both groups (line " +
                                std::to_string(line_no) + ")");
            }
            if (warnings) {
                warnings->push_back("state `" + state + "` listed more than once with group " +
                                    std::to_string(group) + "; deduplicated");
            }
        }
    }
    return groups;
}

inline void write_group_csv(std::ostream& out, const GroupMap& groups) {
    out << "state_id,group\n";
    for (const auto& [state, group] : groups.assignment) {
        out << state << ',' << group << '\n';
    }
}

// ---------------------------------------------------------------------------
// Validation
//
// Pure: the report is a function of (panel, groups, C). Downstream
// operations must reject any panel whose report carries errors.
// ---------------------------------------------------------------------------

inline ValidationReport validate_panel(const PanelDataset& panel, const GroupMap& groups,
                                       std::optional<int> subsample_C = std::nullopt) {
    ValidationReport report;
    const auto counts = panel.state_counts();

    if (panel.observations.empty()) {
        report.errors.push_back({"NO_OBSERVATIONS", "panel contains no observations", ""});
    }
    if (counts.size() < 2) {
        report.errors.push_back(
            {"TOO_FEW_STATES", "panel must contain at least 2 distinct states", ""});
    }

    // Every panel state needs a group.
    std::size_t n_group[2] = {0, 0};
    for (const auto& [state, n_s] : counts) {
        (void)n_s;
        const auto group = groups.group_of(state);
        if (!group) {
            report.errors.push_back(
                {"UNASSIGNED_STATE", "state `" + state + "` has no group assignment", state});
        } else {
            ++n_group[*group];
        }
    }
    for (int g : {0, 1}) {
        if (n_group[g] == 0) {
            report.errors.push_back(
                {"EMPTY_GROUP", "group " + std::to_string(g) + " contains no states", ""});
        }
    }

    // Missing-value census and imputability per (state, outcome).
    const std::size_t K = panel.outcome_count();
    std::map<std::string, std::vector<std::size_t>> present_per_state;
    for (const auto& [state, n_s] : counts) {
        (void)n_s;
        present_per_state.emplace(state, std::vector<std::size_t>(K, 0));
    }
    for (const auto& spec : panel.outcomes) report.missing_counts[spec.name] = 0;

    for (const auto& obs : panel.observations) {
        auto& present = present_per_state[obs.state_id];
        for (std::size_t k = 0; k < K; ++k) {
            if (obs.values[k]) {
                ++present[k];
            } else {
                ++report.missing_counts[panel.outcomes[k].name];
            }
        }
    }

    for (const auto& [state, present] : present_per_state) {
        for (std::size_t k = 0; k < K; ++k) {
            if (present[k] == 0) {
                report.errors.push_back({"UNIMPUTABLE_STATE_OUTCOME",
                                         "state `" + state + "` has no present values for outcome `" +
                                             panel.outcomes[k].name + "`; median imputation impossible",
                                         state});
            }
        }
    }

    for (const auto& [name, missing] : report.missing_counts) {
        if (missing > 0) {
            report.warnings.push_back({"MISSING_VALUES",
                                       "outcome `" + name + "` has " + std::to_string(missing) +
                                           " missing values (state-median imputation applies)",
                                       name});
        }
    }

    if (subsample_C) {
        for (const auto& [state, n_s] : counts) {
            if (static_cast<long long>(n_s) < *subsample_C) {
                report.warnings.push_back(
                    {"SUBSAMPLE_EXCLUDES_STATE",
                     "state `" + state + "` has " + std::to_string(n_s) + " counties, fewer than C=" +
                         std::to_string(*subsample_C) + "; it will be excluded by subsampling",
                     state});
            }
        }
    }

    return report;
}

}  // namespace rankfuse
