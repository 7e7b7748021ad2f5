#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "carbontrace/dispatch.hpp"
#include "carbontrace/errors.hpp"
#include "carbontrace/flowgraph.hpp"
#include "carbontrace/network.hpp"
#include "carbontrace/tracing.hpp"

namespace carbontrace {

enum class MarginalNote {
    Computed,                 // forward-difference re-solve
    FastPath,                 // node without inflow: rate equals the local generator's
    PerturbationInfeasible,   // system cannot absorb the demand increment
    NotComputed,              // marginal evaluation was not requested / not possible
};

inline const char* to_string(MarginalNote n) {
    switch (n) {
        case MarginalNote::Computed: return "computed";
        case MarginalNote::FastPath: return "fast_path";
        case MarginalNote::PerturbationInfeasible: return "perturbation_infeasible";
        case MarginalNote::NotComputed: return "not_computed";
    }
    return "?";
}

struct AverageRates {
    std::vector<double> node_total_emission;            // lbs CO2/h per bus
    std::vector<std::optional<double>> average_rate;    // lbs CO2/MWh; empty when demand is 0
};

// Nodal emission totals and average rates from an attribution matrix:
// e_i = sum_k gamma_k * contribution(i, k), delta_i = e_i / demand_i.
// Zero-demand buses get no rate at all rather than a misleading zero.
inline AverageRates average_rates(const Network& net, const ContributionMatrix& m) {
    AverageRates out;
    out.node_total_emission.assign(net.bus_count(), 0.0);
    out.average_rate.assign(net.bus_count(), std::nullopt);
    for (int i = 0; i < net.bus_count(); ++i) {
        double e = 0.0;
        for (int k = 0; k < net.generator_count(); ++k)
            e += net.generator(k).emission_rate * m.node(i, k);
        out.node_total_emission[i] = e;
        double d = net.demand(i);
        if (d > 0.0) out.average_rate[i] = e / d;
    }
    return out;
}

using DispatchSolver = std::function<DispatchResult(const Network&)>;

struct MarginalOptions {
    // Demand increment in MW; unset means per-bus max(1e-4 * demand, 1e-3).
    std::optional<double> epsilon{};
    // Multiplier on the increment; the step-halving consistency diagnostic
    // re-runs with 0.5 here.
    double epsilon_scale = 1.0;
    // Skip re-solves for buses with no inflow (their marginal rate is the
    // local generator's). Disable to force the forward difference everywhere.
    bool use_fast_path = true;
    // 0 = one worker per hardware thread.
    unsigned max_threads = 0;
    DispatchSolver solver{};
};

inline double default_epsilon(double demand) { return std::max(1e-4 * demand, 1e-3); }

struct MarginalRates {
    std::vector<std::optional<double>> rate;  // lbs CO2/MWh
    std::vector<MarginalNote> note;
};

// Locational marginal emission rates by forward difference: bump one bus's
// demand by epsilon, re-run dispatch -> flow graph -> trace, and difference
// that bus's attributed emission. Each bus re-solve is independent, so they
// run on a small worker pool; assembly order is fixed by bus index.
inline MarginalRates marginal_rates_from_base(const Network& net, const FlowGraph& base_graph,
                                              const std::vector<double>& base_node_emission,
                                              const MarginalOptions& opts = {}) {
    const int buses = net.bus_count();
    MarginalRates out;
    out.rate.assign(buses, std::nullopt);
    out.note.assign(buses, MarginalNote::NotComputed);

    DispatchSolver solver = opts.solver ? opts.solver
                                        : DispatchSolver([](const Network& n) { return solve_dcopf(n); });
    std::vector<double> base_demands = net.demands();

    auto eval_bus = [&](int i) {
        double eps =
            (opts.epsilon ? *opts.epsilon : default_epsilon(base_demands[i])) * opts.epsilon_scale;
        // No-inflow shortcut. Two guards keep it from lying: the local
        // generator must actually be running, and the bus must be able to
        // absorb the increment locally (bound headroom or shrinkable exports).
        if (opts.use_fast_path && base_graph.in_edges(i).empty()) {
            auto k = net.generator_at(i);
            if (k && base_graph.injection(i) > 0.0) {
                double absorbable = net.generator(*k).p_max - base_graph.injection(i) +
                                    base_graph.outflow_total(i);
                if (absorbable > eps) {
                    out.rate[i] = net.generator(*k).emission_rate;
                    out.note[i] = MarginalNote::FastPath;
                    return;
                }
            }
        }
        std::vector<double> bumped = base_demands;
        bumped[i] += eps;
        try {
            Network perturbed = net.with_demands(bumped);
            DispatchResult d = solver(perturbed);
            FlowGraph g = FlowGraph::build(perturbed, d);
            ContributionMatrix m = trace_all(perturbed, g);
            double e = 0.0;
            for (int k = 0; k < net.generator_count(); ++k)
                e += net.generator(k).emission_rate * m.node(i, k);
            out.rate[i] = (e - base_node_emission[i]) / eps;
            out.note[i] = MarginalNote::Computed;
        } catch (const InfeasibleError&) {
            out.note[i] = MarginalNote::PerturbationInfeasible;
        }
    };

    unsigned workers = opts.max_threads ? opts.max_threads
                                        : std::max(1u, std::thread::hardware_concurrency());
    workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max(1, buses)));
    if (workers <= 1 || buses <= 1) {
        for (int i = 0; i < buses; ++i) eval_bus(i);
    } else {
        std::vector<std::future<void>> tasks;
        tasks.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
            tasks.push_back(std::async(std::launch::async, [&, w] {
                for (int i = static_cast<int>(w); i < buses; i += static_cast<int>(workers))
                    eval_bus(i);
            }));
        for (auto& t : tasks) t.get();
    }
    return out;
}

// Convenience form matching the pipeline contract: derives the base solution
// itself, then differences against it.
inline MarginalRates marginal_rates(const Network& net, const MarginalOptions& opts = {}) {
    DispatchSolver solver = opts.solver ? opts.solver
                                        : DispatchSolver([](const Network& n) { return solve_dcopf(n); });
    DispatchResult d = solver(net);
    FlowGraph g = FlowGraph::build(net, d);
    ContributionMatrix m = trace_all(net, g);
    AverageRates base = average_rates(net, m);
    return marginal_rates_from_base(net, g, base.node_total_emission, opts);
}

struct EmissionReport {
    std::vector<double> demand;                         // MW per bus (after scaling)
    std::vector<double> node_total_emission;            // lbs CO2/h
    std::vector<std::optional<double>> average_rate;    // lbs CO2/MWh
    std::vector<std::optional<double>> marginal_rate;   // lbs CO2/MWh
    std::vector<MarginalNote> marginal_note;
    double system_emission = 0.0;  // lbs CO2/h
    double system_cost = 0.0;      // $
    double load_factor = 1.0;
};

// Everything one load snapshot produces, kept together so callers can export
// intermediate artifacts without recomputing.
struct ScenarioRun {
    Network net;  // scaled
    DispatchResult dispatch;
    FlowGraph graph;
    ContributionMatrix contributions;
    EmissionReport report;
};

struct ScenarioOptions {
    MarginalOptions marginal{};
    bool compute_marginal = true;
    // When set, used instead of the internal dispatch (it is re-checked with
    // verify_dispatch). Marginal rates are skipped in that mode: a forward
    // difference against an externally produced base would mix two solvers.
    std::optional<DispatchResult> dispatch{};
};

inline ScenarioRun run_scenario(const Network& base, double load_factor,
                                const ScenarioOptions& opts = {}) {
    Network net = scale_loads(base, load_factor);
    DispatchResult dispatch;
    try {
        if (opts.dispatch) {
            dispatch = *opts.dispatch;
            std::vector<Violation> bad = verify_dispatch(net, dispatch);
            if (!bad.empty())
                throw ValidationError("supplied dispatch rejected: " + bad.front().describe(net));
        } else {
            DispatchSolver solver = opts.marginal.solver
                                        ? opts.marginal.solver
                                        : DispatchSolver([](const Network& n) { return solve_dcopf(n); });
            dispatch = solver(net);
        }
    } catch (const InfeasibleError& e) {
        std::ostringstream os;
        os << "load factor " << load_factor << ": " << e.what();
        throw InfeasibleError(os.str());
    }

    FlowGraph graph = FlowGraph::build(net, dispatch);
    ContributionMatrix contributions = trace_all(net, graph);
    AverageRates avg = average_rates(net, contributions);

    EmissionReport rep;
    rep.demand = net.demands();
    rep.node_total_emission = avg.node_total_emission;
    rep.average_rate = avg.average_rate;
    rep.load_factor = load_factor;
    rep.system_cost = dispatch.objective_cost;
    rep.system_emission = 0.0;
    for (double e : rep.node_total_emission) rep.system_emission += e;

    // A node fed only by its own generator reports that generator's rate
    // exactly; the traced value agrees to rounding but would smear the digits.
    for (int i = 0; i < net.bus_count(); ++i) {
        if (!graph.in_edges(i).empty()) continue;
        auto k = net.generator_at(i);
        if (k && rep.average_rate[i]) rep.average_rate[i] = net.generator(*k).emission_rate;
    }

    double max_gamma = 1.0;
    double total_by_generator = 0.0;
    for (int k = 0; k < net.generator_count(); ++k) {
        total_by_generator += net.generator(k).emission_rate * dispatch.generation[k];
        max_gamma = std::max(max_gamma, net.generator(k).emission_rate);
    }
    if (std::abs(rep.system_emission - total_by_generator) > kFeasTol * max_gamma) {
        std::ostringstream os;
        os << "emission conservation broken: nodal total " << rep.system_emission
           << " vs generator total " << total_by_generator << " lbs/h";
        throw InternalError(os.str());
    }

    if (opts.compute_marginal && !opts.dispatch) {
        MarginalRates mu =
            marginal_rates_from_base(net, graph, rep.node_total_emission, opts.marginal);
        rep.marginal_rate = std::move(mu.rate);
        rep.marginal_note = std::move(mu.note);
    } else {
        rep.marginal_rate.assign(net.bus_count(), std::nullopt);
        rep.marginal_note.assign(net.bus_count(), MarginalNote::NotComputed);
    }

    return ScenarioRun{std::move(net), std::move(dispatch), std::move(graph),
                       std::move(contributions), std::move(rep)};
}

// Thin wrapper for callers that only want the report.
inline EmissionReport emission_report(const Network& base, double load_factor,
                                      const ScenarioOptions& opts = {}) {
    return run_scenario(base, load_factor, opts).report;
}

}  // namespace carbontrace
