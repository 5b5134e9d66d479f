// rankfuse — distribution-free comparison of two groups of states on the
// joint distribution of multivariate county-level outcomes.
//
// Subcommands: validate, test, robustness, describe, simulate. All
// randomness flows from --seed; identical invocations produce byte-identical
// artifacts. Exit codes: 0 success, 1 I/O, 2 validation/config, 3 degenerate
// statistics.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rankfuse/rankfuse.hpp"

namespace {

using namespace rankfuse;

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Io:
            return 1;
        case ErrorCode::TooFewCounties:
        case ErrorCode::NoRetainedStates:
        case ErrorCode::GroupEmptied:
        case ErrorCode::GroupTooSmall:
        case ErrorCode::DegenerateVariance:
        case ErrorCode::ZeroMad:
            return 3;
        default:
            return 2;
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open `" + path + "` for reading");
    return in;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::Io, "cannot open `" + path + "` for writing");
    out << content;
    if (!out) throw Error(ErrorCode::Io, "failed writing `" + path + "`");
}

struct Inputs {
    PanelDataset panel;
    GroupMap groups;
};

Inputs load_inputs(const std::string& panel_path, const std::string& groups_path,
                   const std::string& outcomes_path, std::vector<std::string>* warnings) {
    auto outcomes_in = open_input(outcomes_path);
    const auto outcomes = parse_outcome_config(outcomes_in);
    auto panel_in = open_input(panel_path);
    auto groups_in = open_input(groups_path);
    Inputs inputs;
    inputs.panel = parse_panel(panel_in, outcomes);
    inputs.groups = parse_group_map(groups_in, warnings);
    return inputs;
}

void print_report(const ValidationReport& report) {
    for (const auto& item : report.errors) {
        std::cerr << "error[" << item.code << "] " << item.message;
        if (!item.location.empty()) std::cerr << " (" << item.location << ")";
        std::cerr << '\n';
    }
    for (const auto& item : report.warnings) {
        std::cerr << "warning[" << item.code << "] " << item.message;
        if (!item.location.empty()) std::cerr << " (" << item.location << ")";
        std::cerr << '\n';
    }
}

// Validate, print the report, and say whether the run may continue.
bool check_inputs(const Inputs& inputs, std::optional<int> C) {
    const auto report = validate_panel(inputs.panel, inputs.groups, C);
    print_report(report);
    return report.ok();
}

Sidedness sidedness_from(const std::string& name) {
    return name == "two-sided" ? Sidedness::TwoSided : Sidedness::GreaterTreat;
}

PanelDataset to_panel(const AlignedMatrix& matrix) {
    PanelDataset panel;
    panel.outcomes = matrix.outcomes;
    panel.observations.reserve(matrix.rows.size());
    for (const auto& row : matrix.rows) {
        CountyObservation obs;
        obs.county_id = row.county_id;
        obs.state_id = row.state_id;
        obs.values.assign(row.values.begin(), row.values.end());
        panel.observations.push_back(std::move(obs));
    }
    return panel;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"rankfuse — rank-based comparison of two groups of states on multivariate county outcomes"};
    app.require_subcommand(1);
    int rc = 0;

    // ---- validate ---------------------------------------------------------
    auto* validate_cmd = app.add_subcommand("validate", "Check panel, group map, and outcome config");
    struct {
        std::string panel, groups, outcomes;
        int C = 0;
    } v;
    validate_cmd->add_option("--panel", v.panel, "Panel CSV")->required();
    validate_cmd->add_option("--groups", v.groups, "State-to-group CSV")->required();
    validate_cmd->add_option("--outcomes", v.outcomes, "Outcome config")->required();
    validate_cmd->add_option("--counties-per-state", v.C, "Intended subsample size C")
        ->check(CLI::PositiveNumber);
    validate_cmd->callback([&] {
        std::vector<std::string> group_warnings;
        const Inputs inputs = load_inputs(v.panel, v.groups, v.outcomes, &group_warnings);
        for (const auto& w : group_warnings) std::cerr << "warning[DUPLICATE_ASSIGNMENT] " << w << '\n';
        const auto report = validate_panel(inputs.panel, inputs.groups,
                                           v.C > 0 ? std::optional<int>(v.C) : std::nullopt);
        print_report(report);
        std::cout << report.errors.size() << " errors, " << report.warnings.size()
                  << " warnings\n";
        if (!report.ok()) rc = 2;
    });

    // ---- test -------------------------------------------------------------
    auto* test_cmd = app.add_subcommand("test", "Run the rank test on a panel");
    struct {
        std::string panel, groups, outcomes;
        int C = 0;
        std::uint64_t seed = 0;
        std::string sidedness = "greater";
        std::string out, summaries_out, plan_out, plan_in;
    } t;
    test_cmd->add_option("--panel", t.panel, "Panel CSV")->required();
    test_cmd->add_option("--groups", t.groups, "State-to-group CSV")->required();
    test_cmd->add_option("--outcomes", t.outcomes, "Outcome config")->required();
    auto* c_opt = test_cmd->add_option("--counties-per-state", t.C,
                                       "Subsample C counties per state before ranking")
                      ->check(CLI::PositiveNumber);
    auto* seed_opt =
        test_cmd->add_option("--seed", t.seed, "Subsampling seed")->capture_default_str();
    test_cmd->add_option("--sidedness", t.sidedness, "Decision rule")
        ->check(CLI::IsMember({"greater", "two-sided"}))
        ->capture_default_str();
    test_cmd->add_option("--out", t.out, "Result JSON path (stdout when omitted)");
    test_cmd->add_option("--summaries-out", t.summaries_out, "State rank summaries CSV path");
    test_cmd->add_option("--plan-out", t.plan_out, "Write the subsample plan JSON here");
    test_cmd->add_option("--plan-in", t.plan_in, "Replay a previously written subsample plan")
        ->excludes(c_opt)
        ->excludes(seed_opt);
    test_cmd->callback([&] {
        const Inputs inputs = load_inputs(t.panel, t.groups, t.outcomes, nullptr);
        if (!check_inputs(inputs, t.C > 0 ? std::optional<int>(t.C) : std::nullopt)) {
            rc = 2;
            return;
        }

        const AlignedMatrix matrix = align_and_impute(inputs.panel);
        std::optional<SubsamplePlan> plan;
        if (!t.plan_in.empty()) {
            auto plan_stream = open_input(t.plan_in);
            plan = plan_from_json(plan_stream);
        } else if (t.C > 0) {
            plan = plan_subsample(matrix, t.C, t.seed);
        }
        if (!t.plan_out.empty() && !plan) {
            throw Error(ErrorCode::ConfigError,
                        "--plan-out requires --counties-per-state or --plan-in");
        }

        const AlignedMatrix working = plan ? apply_subsample(matrix, *plan) : matrix;
        const RankTable table = rank_table(working);
        const auto summaries = state_rank_summaries(table, working);
        TestResult result = lrst_test(summaries, inputs.groups, sidedness_from(t.sidedness));
        if (plan) result.C = plan->C;

        // All statistics succeeded; only now touch the filesystem.
        if (!t.plan_out.empty()) write_file(t.plan_out, plan_to_json(*plan));
        const std::string json = test_result_to_json(result);
        if (t.out.empty()) {
            std::cout << json;
        } else {
            write_file(t.out, json);
        }
        if (!t.summaries_out.empty()) {
            std::ofstream summaries_stream(t.summaries_out, std::ios::binary);
            if (!summaries_stream) {
                throw Error(ErrorCode::Io, "cannot open `" + t.summaries_out + "` for writing");
            }
            write_summaries_csv(summaries_stream, summaries, inputs.groups);
        }
    });

    // ---- robustness -------------------------------------------------------
    auto* robust_cmd =
        app.add_subcommand("robustness", "Subsample-robustness protocol over several C values");
    struct {
        std::string panel, groups, outcomes;
        std::vector<int> c_values = {30, 40, 50};
        std::size_t replicates = 200;
        std::vector<double> alphas = {0.05, 0.10};
        std::uint64_t seed = 0;
        std::string sidedness = "greater";
        std::string out, table;
        int threads = 1;
    } r;
    robust_cmd->add_option("--panel", r.panel, "Panel CSV")->required();
    robust_cmd->add_option("--groups", r.groups, "State-to-group CSV")->required();
    robust_cmd->add_option("--outcomes", r.outcomes, "Outcome config")->required();
    robust_cmd->add_option("--c-values", r.c_values, "Comma-separated C values")
        ->delimiter(',')
        ->capture_default_str();
    robust_cmd->add_option("--replicates", r.replicates, "Subsample replicates per C")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    robust_cmd->add_option("--alpha", r.alphas, "Comma-separated rejection levels")
        ->delimiter(',')
        ->capture_default_str();
    robust_cmd->add_option("--seed", r.seed, "Master seed")->capture_default_str();
    robust_cmd->add_option("--sidedness", r.sidedness, "Decision rule")
        ->check(CLI::IsMember({"greater", "two-sided"}))
        ->capture_default_str();
    robust_cmd->add_option("--out", r.out, "Summary JSON path (stdout when omitted)");
    robust_cmd->add_option("--table", r.table, "Plain-text table path");
    robust_cmd->add_option("--threads", r.threads, "Worker threads (outputs independent of N)")
        ->envname("RANKFUSE_THREADS")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    robust_cmd->callback([&] {
        const Inputs inputs = load_inputs(r.panel, r.groups, r.outcomes, nullptr);
        if (!check_inputs(inputs, std::nullopt)) {
            rc = 2;
            return;
        }
        RobustnessConfig cfg;
        cfg.C_values = r.c_values;
        cfg.replicates = r.replicates;
        cfg.alpha_levels = r.alphas;
        cfg.master_seed = r.seed;
        cfg.sidedness = sidedness_from(r.sidedness);
        const RobustnessSummary summary = run_robustness(inputs.panel, inputs.groups, cfg, r.threads);
        const std::string json = robustness_to_json(summary);
        if (r.out.empty()) {
            std::cout << json;
        } else {
            write_file(r.out, json);
        }
        if (!r.table.empty()) write_file(r.table, summarize_table(summary));
    });

    // ---- describe ---------------------------------------------------------
    auto* describe_cmd =
        app.add_subcommand("describe", "Cross-outcome correlations and MAD-standardized differences");
    struct {
        std::string panel, groups, outcomes;
        std::string method = "pearson";
        std::string correlation_out = "correlation.csv";
        std::string std_diffs_out = "std_diffs.csv";
    } d;
    describe_cmd->add_option("--panel", d.panel, "Panel CSV")->required();
    describe_cmd->add_option("--groups", d.groups, "State-to-group CSV")->required();
    describe_cmd->add_option("--outcomes", d.outcomes, "Outcome config")->required();
    describe_cmd->add_option("--method", d.method, "Correlation method")
        ->check(CLI::IsMember({"pearson", "spearman"}))
        ->capture_default_str();
    describe_cmd->add_option("--correlation-out", d.correlation_out, "Correlation matrix CSV path")
        ->capture_default_str();
    describe_cmd->add_option("--std-diffs-out", d.std_diffs_out, "Standardized differences CSV path")
        ->capture_default_str();
    describe_cmd->callback([&] {
        const Inputs inputs = load_inputs(d.panel, d.groups, d.outcomes, nullptr);
        if (!check_inputs(inputs, std::nullopt)) {
            rc = 2;
            return;
        }
        const AlignedMatrix matrix = align_and_impute(inputs.panel);
        const auto method = d.method == "spearman" ? CorrelationMethod::Spearman
                                                   : CorrelationMethod::Pearson;
        const DescriptiveSummary summary = describe(matrix, inputs.groups, method);
        for (const auto& w : summary.correlation.warnings) std::cerr << "warning " << w << '\n';
        for (const auto& w : summary.std_diffs.warnings) std::cerr << "warning " << w << '\n';
        write_file(d.correlation_out, write_correlation_csv(summary.correlation));
        write_file(d.std_diffs_out, write_std_diffs_csv(summary.std_diffs));
    });

    // ---- simulate ---------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "Generate a synthetic panel with known structure");
    struct {
        SimScenario scenario;
        std::string panel_out = "panel.csv";
        std::string groups_out = "groups.csv";
        std::string outcomes_out = "outcomes.cfg";
    } s;
    simulate_cmd->add_option("--m1", s.scenario.m1, "Group-1 states")->required();
    simulate_cmd->add_option("--m0", s.scenario.m0, "Group-0 states")->required();
    simulate_cmd->add_option("--n", s.scenario.n, "Counties per state")->required();
    simulate_cmd->add_option("--k", s.scenario.K, "Outcomes")->required();
    simulate_cmd->add_option("--shift", s.scenario.shift, "Burden shift subtracted for group-1 states")
        ->capture_default_str();
    simulate_cmd->add_option("--rho-within", s.scenario.rho_within, "Within-state equicorrelation [0,1)")
        ->capture_default_str();
    simulate_cmd->add_option("--rho-outcome", s.scenario.rho_outcome, "Cross-outcome equicorrelation [0,1)")
        ->capture_default_str();
    simulate_cmd->add_option("--seed", s.scenario.seed, "Generator seed")->capture_default_str();
    simulate_cmd->add_option("--panel-out", s.panel_out, "Panel CSV path")->capture_default_str();
    simulate_cmd->add_option("--groups-out", s.groups_out, "Group CSV path")->capture_default_str();
    simulate_cmd->add_option("--outcomes-out", s.outcomes_out, "Outcome config path")
        ->capture_default_str();
    simulate_cmd->callback([&] {
        const auto [matrix, groups] = simulate_panel(s.scenario);
        const PanelDataset panel = to_panel(matrix);

        std::ofstream panel_stream(s.panel_out, std::ios::binary);
        if (!panel_stream) throw Error(ErrorCode::Io, "cannot open `" + s.panel_out + "` for writing");
        write_panel_csv(panel_stream, panel);

        std::ofstream groups_stream(s.groups_out, std::ios::binary);
        if (!groups_stream) throw Error(ErrorCode::Io, "cannot open `" + s.groups_out + "` for writing");
        write_group_csv(groups_stream, groups);

        std::ofstream outcomes_stream(s.outcomes_out, std::ios::binary);
        if (!outcomes_stream) {
            throw Error(ErrorCode::Io, "cannot open `" + s.outcomes_out + "` for writing");
        }
        write_outcome_config(outcomes_stream, panel.outcomes);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const Error& e) {
        std::cerr << "error[" << to_string(e.code()) << "] " << e.what() << '\n';
        return exit_code_for(e.code());
    }
    return rc;
}
