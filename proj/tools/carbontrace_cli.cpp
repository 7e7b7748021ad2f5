// Command-line front end: snapshot runs, load sweeps, attribution dumps, and
// self-checks over a grid case file.
//
// Exit codes: 0 success, 1 parse/validation problem, 2 infeasible dispatch,
// 3 broken internal identity.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "carbontrace/case_io.hpp"
#include "carbontrace/dispatch.hpp"
#include "carbontrace/emissions.hpp"
#include "carbontrace/errors.hpp"
#include "carbontrace/flowgraph.hpp"
#include "carbontrace/network.hpp"
#include "carbontrace/report_io.hpp"
#include "carbontrace/tracing.hpp"

namespace {

using namespace carbontrace;
namespace fs = std::filesystem;

struct RunConfig {
    std::string case_path;
    double load_factor = 1.0;
    std::vector<double> factors{0.2, 0.4, 0.6, 0.8, 1.0};
    std::string epsilon = "auto";
    std::string output_dir = ".";
    std::vector<std::string> formats{"csv"};
    std::string dispatch_in;
    std::string dispatch_out;
    bool emit_flowgraph = false;
    bool emit_contrib = false;
};

bool wants(const RunConfig& cfg, const std::string& fmt) {
    return std::find(cfg.formats.begin(), cfg.formats.end(), fmt) != cfg.formats.end();
}

MarginalOptions marginal_options(const RunConfig& cfg) {
    MarginalOptions opts;
    if (cfg.epsilon != "auto") {
        double eps = 0.0;
        try {
            size_t used = 0;
            eps = std::stod(cfg.epsilon, &used);
            if (used != cfg.epsilon.size()) eps = 0.0;
        } catch (const std::exception&) {
            eps = 0.0;
        }
        if (eps <= 0.0) throw ValidationError("--epsilon must be > 0 or \"auto\"");
        opts.epsilon = eps;
    }
    return opts;
}

Network load_case(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
        throw ValidationError("output directory " + cfg.output_dir + " is not usable");
    Network net = load_network(cfg.case_path);
    for (const std::string& w : net.warnings()) std::cerr << "warning: " << w << "\n";
    return net;
}

void print_report_table(const Network& net, const EmissionReport& rep) {
    std::printf("%6s %14s %16s %14s %14s\n", "bus", "demand_mw", "emission_lbs_h",
                "avg_rate", "marginal_rate");
    for (int i = 0; i < net.bus_count(); ++i) {
        std::string avg = rep.average_rate[i] ? csv_num(*rep.average_rate[i]) : "-";
        std::string mar = rep.marginal_rate[i] ? csv_num(*rep.marginal_rate[i]) : "-";
        if (rep.marginal_note[i] == MarginalNote::PerturbationInfeasible)
            mar = "undef(capacity)";
        std::printf("%6d %14s %16s %14s %14s\n", net.bus_id(i), csv_num(rep.demand[i]).c_str(),
                    csv_num(rep.node_total_emission[i]).c_str(), avg.c_str(), mar.c_str());
    }
    std::printf("system emission: %s lbs CO2/h\n", csv_num(rep.system_emission).c_str());
    std::printf("system cost:     %s $/h\n", csv_num(rep.system_cost).c_str());
}

void write_side_artifacts(const RunConfig& cfg, const ScenarioRun& run,
                          const std::string& suffix = "") {
    fs::path dir(cfg.output_dir);
    if (cfg.emit_flowgraph)
        write_flowgraph_csv(run.net, run.graph, dir / ("flowgraph" + suffix + ".csv"));
    if (cfg.emit_contrib) {
        if (wants(cfg, "csv"))
            write_contrib_csv(run.net, run.contributions, dir / ("contrib" + suffix + ".csv"));
        if (wants(cfg, "json"))
            write_contrib_json(run.net, run.contributions, dir / ("contrib" + suffix + ".json"));
    }
    if (!cfg.dispatch_out.empty() && suffix.empty())
        write_dispatch_json(run.dispatch, cfg.dispatch_out);
}

ScenarioRun run_pipeline(const RunConfig& cfg, const Network& net, double factor,
                         bool compute_marginal) {
    ScenarioOptions opts;
    opts.marginal = marginal_options(cfg);
    opts.compute_marginal = compute_marginal;
    if (!cfg.dispatch_in.empty()) opts.dispatch = load_dispatch(cfg.dispatch_in);
    return run_scenario(net, factor, opts);
}

int cmd_run(const RunConfig& cfg) {
    Network net = load_case(cfg);
    ScenarioRun run = run_pipeline(cfg, net, cfg.load_factor, cfg.dispatch_in.empty());
    fs::path dir(cfg.output_dir);
    if (wants(cfg, "csv")) write_report_csv(run.net, run.report, dir / "report.csv");
    if (wants(cfg, "json")) write_report_json(run.net, run.report, dir / "report.json");
    write_side_artifacts(cfg, run);
    print_report_table(run.net, run.report);
    return 0;
}

int cmd_sweep(const RunConfig& cfg) {
    Network net = load_case(cfg);
    fs::path dir(cfg.output_dir);
    std::vector<SweepSummaryRow> summary;
    bool any_infeasible = false;
    for (double f : cfg.factors) {
        if (f < 0.0) throw ValidationError("sweep factors must be >= 0");
        try {
            ScenarioRun run = run_pipeline(cfg, net, f, cfg.dispatch_in.empty());
            std::string suffix = "_" + csv_num(f);
            if (wants(cfg, "csv"))
                write_report_csv(run.net, run.report, dir / ("report" + suffix + ".csv"));
            if (wants(cfg, "json"))
                write_report_json(run.net, run.report, dir / ("report" + suffix + ".json"));
            write_side_artifacts(cfg, run, suffix);
            summary.push_back(summarize_report(run.report));
            std::printf("factor %-6s emission %14s lbs/h   cost %14s $/h\n",
                        csv_num(f).c_str(), csv_num(run.report.system_emission).c_str(),
                        csv_num(run.report.system_cost).c_str());
        } catch (const InfeasibleError& e) {
            any_infeasible = true;
            SweepSummaryRow row;
            row.factor = f;
            row.feasible = false;
            summary.push_back(row);
            std::printf("factor %-6s infeasible (%s)\n", csv_num(f).c_str(), e.what());
        }
    }
    if (wants(cfg, "csv")) write_sweep_summary_csv(summary, dir / "summary.csv");
    if (wants(cfg, "json")) write_sweep_summary_json(summary, dir / "summary.json");
    return any_infeasible ? 2 : 0;
}

int cmd_trace(const RunConfig& cfg) {
    Network net = load_case(cfg);
    RunConfig cfg2 = cfg;
    cfg2.emit_contrib = true;
    ScenarioRun run = run_pipeline(cfg2, net, cfg.load_factor, false);
    write_side_artifacts(cfg2, run);
    for (int k = 0; k < run.net.generator_count(); ++k) {
        std::printf("generator %d (bus %d): %s MW over %zu buses\n",
                    run.net.generator(k).id, run.net.generator(k).bus,
                    csv_num(run.dispatch.generation[k]).c_str(),
                    run.contributions.reachable_set(k).size());
    }
    return 0;
}

int cmd_check(const RunConfig& cfg) {
    Network net = load_case(cfg);
    Network scaled = scale_loads(net, cfg.load_factor);
    bool ok = true;
    auto line = [&](const char* name, bool pass, const std::string& detail) {
        std::printf("check: %-24s %s%s%s\n", name, pass ? "PASS" : "FAIL",
                    detail.empty() ? "" : "  ", detail.c_str());
        ok = ok && pass;
    };

    DispatchResult d;
    try {
        d = cfg.dispatch_in.empty() ? solve_dcopf(scaled) : load_dispatch(cfg.dispatch_in);
    } catch (const InfeasibleError& e) {
        std::printf("dispatch infeasible: %s\n", e.what());
        return 2;
    }
    std::vector<Violation> bad = verify_dispatch(scaled, d);
    line("dispatch feasibility", bad.empty(),
         bad.empty() ? "" : bad.front().describe(scaled));
    if (!bad.empty()) {
        std::printf("remaining checks skipped\n");
        return 3;
    }

    std::optional<FlowGraph> graph;
    try {
        graph = FlowGraph::build(scaled, d);
        line("flow orientation acyclic", true, "");
    } catch (const CycleError& e) {
        line("flow orientation acyclic", false, e.what());
        std::printf("remaining checks skipped\n");
        return 3;
    }

    try {
        ContributionMatrix m = trace_all(scaled, *graph);
        double max_row = 0.0, max_col = 0.0;
        for (int i = 0; i < scaled.bus_count(); ++i)
            max_row = std::max(max_row, std::abs(m.row_sum(i) - scaled.demand(i)));
        for (int k = 0; k < scaled.generator_count(); ++k)
            max_col = std::max(max_col,
                               std::abs(m.column_sum(k) -
                                        graph->injection(scaled.generator_bus_index(k))));
        line("demand recovery", max_row <= kFeasTol,
             "max residual " + csv_num(max_row) + " MW");
        line("generation recovery", max_col <= kFeasTol,
             "max residual " + csv_num(max_col) + " MW");

        AverageRates rates = average_rates(scaled, m);
        double nodal = 0.0, by_gen = 0.0;
        for (double e : rates.node_total_emission) nodal += e;
        for (int k = 0; k < scaled.generator_count(); ++k)
            by_gen += scaled.generator(k).emission_rate * d.generation[k];
        line("emission conservation", std::abs(nodal - by_gen) <= 1e-4,
             "residual " + csv_num(std::abs(nodal - by_gen)) + " lbs/h");

        bool covered = true;
        for (int i = 0; i < scaled.bus_count() && covered; ++i) {
            if (scaled.demand(i) <= kFeasTol) continue;
            bool any = false;
            for (int k = 0; k < scaled.generator_count() && !any; ++k)
                any = m.node(i, k) > 0.0;
            covered = any;
        }
        line("demand coverage", covered, "");
    } catch (const InternalError& e) {
        line("attribution identities", false, e.what());
    }

    return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carbon attribution for DC power dispatch"};
    app.require_subcommand(1);

    RunConfig cfg;
    auto add_common = [&](CLI::App* sub, bool with_factor) {
        sub->add_option("--case", cfg.case_path, "grid case file (JSON)")->required();
        if (with_factor)
            sub->add_option("--load-factor", cfg.load_factor, "uniform demand scaling");
        sub->add_option("--out", cfg.output_dir, "output directory")
            ->default_val(".");
        sub->add_option("--format", cfg.formats, "output formats: csv and/or json")
            ->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--dispatch-in", cfg.dispatch_in,
                        "use this dispatch result instead of solving");
        sub->add_option("--dispatch-out", cfg.dispatch_out, "write the dispatch result here");
        sub->add_flag("--emit-flowgraph", cfg.emit_flowgraph, "write flowgraph CSV");
        sub->add_flag("--emit-contrib", cfg.emit_contrib, "write contribution files");
        sub->add_option("--epsilon", cfg.epsilon, "marginal perturbation in MW, or \"auto\"");
    };

    CLI::App* run = app.add_subcommand("run", "one snapshot: rates per bus plus reports");
    add_common(run, true);
    CLI::App* sweep = app.add_subcommand("sweep", "reports across load factors");
    add_common(sweep, false);
    sweep->add_option("--factors", cfg.factors, "load factors to sweep");
    CLI::App* trace = app.add_subcommand("trace", "dump the generator attribution matrix");
    add_common(trace, true);
    CLI::App* check = app.add_subcommand("check", "run the pipeline self-checks");
    add_common(check, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (run->parsed()) return cmd_run(cfg);
        if (sweep->parsed()) return cmd_sweep(cfg);
        if (trace->parsed()) return cmd_trace(cfg);
        if (check->parsed()) return cmd_check(cfg);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const InfeasibleError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
