#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carbontrace/errors.hpp"
#include "carbontrace/flowgraph.hpp"
#include "carbontrace/network.hpp"

namespace carbontrace {

struct InflowShares {
    double demand_share = 0.0;
    std::vector<std::pair<int, double>> outflow_shares;  // (edge index, MW)
};

// Splits power arriving at a node across local demand and outgoing edges,
// proportionally to their magnitudes. The returned pieces sum to the input
// exactly: the demand share is taken as the residual of the edge shares (the
// last edge share absorbs it when the node has no local demand).
inline InflowShares share_inflow(double inflow, int node, const FlowGraph& g) {
    if (inflow < 0.0) throw ValidationError("share_inflow: negative inflow");
    InflowShares r;
    const std::vector<int>& outs = g.out_edges(node);
    r.outflow_shares.reserve(outs.size());
    if (inflow == 0.0) {
        for (int e : outs) r.outflow_shares.emplace_back(e, 0.0);
        return r;
    }
    double demand = g.withdrawal(node);
    double denom = demand + g.outflow_total(node);
    if (denom <= 0.0) {
        std::ostringstream os;
        os << "share_inflow: node " << node << " receives " << inflow
           << " MW but has no demand and no outflow";
        throw InternalError(os.str());
    }
    double assigned = 0.0;
    for (int e : outs) {
        double share = inflow * (g.edge(e).flow / denom);
        r.outflow_shares.emplace_back(e, share);
        assigned += share;
    }
    if (demand > 0.0) {
        r.demand_share = std::max(0.0, inflow - assigned);
    } else if (!outs.empty()) {
        // No local demand: fold the rounding residual into the last edge.
        auto& last = r.outflow_shares.back();
        last.second = std::max(0.0, last.second + (inflow - assigned));
    }
    return r;
}

struct TraceColumn {
    std::vector<double> node_mw;  // per bus, contribution to local demand
    std::vector<double> edge_mw;  // per flow-graph edge
};

// One generator's contribution to every demand and every directed edge.
//
// The reachable subgraph is processed in topological order: all traced inflow
// arriving at a node is accumulated first and split once. This visits each
// node and edge a single time yet computes the same values as splitting every
// inflow path separately (the split is linear in the inflow).
inline TraceColumn trace_generator(int gen, const Network& net, const FlowGraph& g) {
    const int n = g.node_count();
    TraceColumn col;
    col.node_mw.assign(n, 0.0);
    col.edge_mw.assign(g.edge_count(), 0.0);

    int root = net.generator_bus_index(gen);
    double seed = g.injection(root);
    if (seed < 0.0)
        throw ValidationError("trace_generator: negative generation at bus " +
                              std::to_string(net.bus_id(root)));
    if (seed == 0.0) return col;

    std::vector<double> traced_inflow(n, 0.0);
    traced_inflow[root] = seed;  // the injection enters the split like any inflow
    for (int node : g.topological_order()) {
        double arriving = traced_inflow[node];
        if (arriving <= 0.0) continue;
        InflowShares s = share_inflow(arriving, node, g);
        col.node_mw[node] = s.demand_share;
        for (const auto& [e, share] : s.outflow_shares) {
            col.edge_mw[e] = share;
            traced_inflow[g.edge(e).head] += share;
        }
    }
    return col;
}

// Generator-to-demand and generator-to-line attribution for one dispatch.
// node(i, k) is generator k's MW serving bus i's demand; line(l, k) its MW on
// line l's oriented flow. Conservation identities are checked at assembly.
class ContributionMatrix {
public:
    ContributionMatrix(int buses, int gens, int lines)
        : buses_(buses),
          gens_(gens),
          lines_(lines),
          node_(static_cast<size_t>(buses) * gens, 0.0),
          line_(static_cast<size_t>(lines) * gens, 0.0),
          reachable_(gens) {}

    int bus_count() const { return buses_; }
    int generator_count() const { return gens_; }
    int line_count() const { return lines_; }

    double node(int bus, int gen) const { return node_[static_cast<size_t>(bus) * gens_ + gen]; }
    double line(int l, int gen) const { return line_[static_cast<size_t>(l) * gens_ + gen]; }

    double& node(int bus, int gen) { return node_[static_cast<size_t>(bus) * gens_ + gen]; }
    double& line(int l, int gen) { return line_[static_cast<size_t>(l) * gens_ + gen]; }

    double row_sum(int bus) const {
        double t = 0.0;
        for (int k = 0; k < gens_; ++k) t += node(bus, k);
        return t;
    }
    double column_sum(int gen) const {
        double t = 0.0;
        for (int i = 0; i < buses_; ++i) t += node(i, gen);
        return t;
    }
    double line_sum(int l) const {
        double t = 0.0;
        for (int k = 0; k < gens_; ++k) t += line(l, k);
        return t;
    }

    // Buses drawing a meaningful share (> kFeasTol) from generator k.
    const std::vector<int>& reachable_set(int gen) const { return reachable_[gen]; }

    void set_reachable(int gen, std::vector<int> s) { reachable_[gen] = std::move(s); }

private:
    int buses_, gens_, lines_;
    std::vector<double> node_, line_;
    std::vector<std::vector<int>> reachable_;
};

// Traces every generator and assembles the full attribution. Verifies the
// conservation identities (rows reproduce demands, columns reproduce
// generation, line totals reproduce oriented flows) before returning.
inline ContributionMatrix trace_all(const Network& net, const FlowGraph& g) {
    const int buses = net.bus_count();
    const int gens = net.generator_count();
    ContributionMatrix m(buses, gens, net.line_count());

    for (int k = 0; k < gens; ++k) {
        TraceColumn col = trace_generator(k, net, g);
        std::vector<int> reach;
        for (int i = 0; i < buses; ++i) {
            m.node(i, k) = col.node_mw[i];
            if (col.node_mw[i] > kFeasTol) reach.push_back(i);
        }
        for (int e = 0; e < g.edge_count(); ++e)
            if (g.edge(e).line >= 0) m.line(g.edge(e).line, k) = col.edge_mw[e];
        m.set_reachable(k, std::move(reach));
    }

    auto fail = [](const std::string& what, double residual) {
        std::ostringstream os;
        os << "contribution invariant broken: " << what << " (residual " << residual
           << " MW)";
        throw InternalError(os.str());
    };
    for (int i = 0; i < buses; ++i) {
        double r = m.row_sum(i) - net.demand(i);
        if (std::abs(r) > kFeasTol) fail("row sum vs demand at bus " + std::to_string(net.bus_id(i)), r);
    }
    for (int k = 0; k < gens; ++k) {
        double r = m.column_sum(k) - g.injection(net.generator_bus_index(k));
        if (std::abs(r) > kFeasTol)
            fail("column sum vs generation of generator " + std::to_string(net.generator(k).id), r);
    }
    std::vector<double> line_traced(net.line_count(), 0.0);
    for (int e = 0; e < g.edge_count(); ++e)
        if (g.edge(e).line >= 0) line_traced[g.edge(e).line] = g.edge(e).flow;
    for (int l = 0; l < net.line_count(); ++l) {
        double r = m.line_sum(l) - line_traced[l];
        if (std::abs(r) > kFeasTol)
            fail("line sum vs flow on line " + std::to_string(net.line(l).from) + "-" +
                     std::to_string(net.line(l).to),
                 r);
    }
    for (int i = 0; i < buses; ++i) {
        if (net.demand(i) <= kFeasTol) continue;
        bool covered = false;
        for (int k = 0; k < gens && !covered; ++k) covered = m.node(i, k) > 0.0;
        if (!covered)
            fail("bus " + std::to_string(net.bus_id(i)) + " demand served by no generator",
                 net.demand(i));
    }
    return m;
}

}  // namespace carbontrace
