#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "carbontrace/dispatch.hpp"
#include "carbontrace/errors.hpp"
#include "carbontrace/network.hpp"

namespace carbontrace {

// Line flows with magnitude at or below this are treated as zero and carry no
// edge; keeps every share denominator strictly positive.
inline constexpr double kFlowTol = 1e-7;

struct FlowEdge {
    int tail;     // bus index power leaves
    int head;     // bus index power enters
    int line;     // originating line index, -1 for synthetic test edges
    double flow;  // MW, > 0
};

// Directed acyclic orientation of a solved dispatch: every line with
// meaningful flow becomes one edge pointing the way power actually moves.
// Immutable once built; safe to share across threads.
class FlowGraph {
public:
    static FlowGraph build(const Network& net, const DispatchResult& d,
                           double flow_tol = kFlowTol);

    // Assembles a graph directly from parts, without the dispatch checks or
    // the acyclicity certificate. Meant for tests and hand-made fixtures.
    static FlowGraph from_parts(int node_count, std::vector<FlowEdge> edges,
                                std::vector<double> injections,
                                std::vector<double> withdrawals) {
        FlowGraph g;
        g.node_count_ = node_count;
        g.edges_ = std::move(edges);
        g.injections_ = std::move(injections);
        g.withdrawals_ = std::move(withdrawals);
        g.index_edges();
        return g;
    }

    int node_count() const { return node_count_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const std::vector<FlowEdge>& edges() const { return edges_; }
    const FlowEdge& edge(int e) const { return edges_[e]; }

    const std::vector<int>& out_edges(int node) const { return out_[node]; }
    const std::vector<int>& in_edges(int node) const { return in_[node]; }

    double injection(int node) const { return injections_[node]; }
    double withdrawal(int node) const { return withdrawals_[node]; }

    double inflow_total(int node) const {
        double t = 0.0;
        for (int e : in_[node]) t += edges_[e].flow;
        return t;
    }
    double outflow_total(int node) const {
        double t = 0.0;
        for (int e : out_[node]) t += edges_[e].flow;
        return t;
    }

    // Neighbor buses sending power in (N+) / receiving power (N-).
    std::vector<int> inflow_set(int node) const {
        std::vector<int> s;
        for (int e : in_[node]) s.push_back(edges_[e].tail);
        return s;
    }
    std::vector<int> outflow_set(int node) const {
        std::vector<int> s;
        for (int e : out_[node]) s.push_back(edges_[e].head);
        return s;
    }

    double balance_residual(int node) const {
        return injection(node) + inflow_total(node) - withdrawal(node) - outflow_total(node);
    }

    // Topological order over all nodes (cached when the graph was built from a
    // dispatch; computed on demand for hand-made graphs).
    std::vector<int> topological_order() const;

private:
    void index_edges() {
        out_.assign(node_count_, {});
        in_.assign(node_count_, {});
        for (int e = 0; e < edge_count(); ++e) {
            out_[edges_[e].tail].push_back(e);
            in_[edges_[e].head].push_back(e);
        }
    }

    int node_count_ = 0;
    std::vector<FlowEdge> edges_;
    std::vector<std::vector<int>> out_, in_;
    std::vector<double> injections_, withdrawals_;
    std::vector<int> topo_;  // empty until certified

    friend std::vector<int> check_acyclic(const FlowGraph&);
};

// Kahn's algorithm with an index-ordered heap, so the returned order is
// deterministic (ties go to the lowest bus index). Throws CycleError with one
// witness cycle when the graph is not a DAG.
inline std::vector<int> check_acyclic(const FlowGraph& g) {
    const int n = g.node_count();
    std::vector<int> indegree(n, 0);
    for (const FlowEdge& e : g.edges()) ++indegree[e.head];

    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int i = 0; i < n; ++i)
        if (indegree[i] == 0) ready.push(i);

    std::vector<int> order;
    order.reserve(n);
    while (!ready.empty()) {
        int u = ready.top();
        ready.pop();
        order.push_back(u);
        for (int e : g.out_edges(u))
            if (--indegree[g.edge(e).head] == 0) ready.push(g.edge(e).head);
    }
    if (static_cast<int>(order.size()) == n) return order;

    // Some nodes never cleared: walk backwards through still-blocked nodes
    // until one repeats, then emit that loop in flow direction.
    std::vector<int> visit_pos(n, -1);
    int cur = 0;
    while (indegree[cur] == 0) ++cur;
    std::vector<int> walk;
    while (visit_pos[cur] < 0) {
        visit_pos[cur] = static_cast<int>(walk.size());
        walk.push_back(cur);
        for (int e : g.in_edges(cur)) {
            if (indegree[g.edge(e).tail] > 0) {
                cur = g.edge(e).tail;
                break;
            }
        }
    }
    std::vector<int> cycle(walk.begin() + visit_pos[cur], walk.end());
    std::reverse(cycle.begin(), cycle.end());  // backward walk -> flow direction
    std::ostringstream os;
    os << "directed cycle in flow graph:";
    for (int v : cycle) os << " " << v;
    throw CycleError(os.str(), cycle);
}

inline std::vector<int> FlowGraph::topological_order() const {
    if (!topo_.empty() || node_count_ == 0) return topo_;
    return check_acyclic(*this);
}

inline FlowGraph FlowGraph::build(const Network& net, const DispatchResult& d,
                                  double flow_tol) {
    std::vector<Violation> bad = verify_dispatch(net, d);
    if (!bad.empty()) {
        std::ostringstream os;
        os << "dispatch invalid: " << bad.front().describe(net);
        if (bad.size() > 1) os << " (and " << bad.size() - 1 << " more)";
        throw ValidationError(os.str());
    }

    FlowGraph g;
    g.node_count_ = net.bus_count();
    g.injections_.assign(net.bus_count(), 0.0);
    g.withdrawals_.resize(net.bus_count());
    for (int i = 0; i < net.bus_count(); ++i) g.withdrawals_[i] = net.demand(i);
    for (int k = 0; k < net.generator_count(); ++k)
        g.injections_[net.generator_bus_index(k)] += d.generation[k];

    for (int l = 0; l < net.line_count(); ++l) {
        double f = d.line_flows[l];
        if (f > flow_tol)
            g.edges_.push_back({net.line_from_index(l), net.line_to_index(l), l, f});
        else if (f < -flow_tol)
            g.edges_.push_back({net.line_to_index(l), net.line_from_index(l), l, -f});
    }
    g.index_edges();

    for (int i = 0; i < net.bus_count(); ++i) {
        double slack = kFeasTol +
                       flow_tol * static_cast<double>(net.adjacent(i).size());
        if (std::abs(g.balance_residual(i)) > slack) {
            std::ostringstream os;
            os << "flow graph balance broken at bus " << net.bus_id(i) << ": residual "
               << g.balance_residual(i) << " MW";
            throw InternalError(os.str());
        }
    }

    g.topo_ = check_acyclic(g);
    return g;
}

}  // namespace carbontrace
