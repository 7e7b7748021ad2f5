#include <catch2/catch_amalgamated.hpp>

#include "carbontrace/case_io.hpp"
#include "carbontrace/dispatch.hpp"
#include "carbontrace/flowgraph.hpp"
#include "support/fixtures.hpp"

using namespace carbontrace;
using Catch::Approx;

TEST_CASE("edges point the way power flows") {
    SECTION("positive flow keeps the line orientation") {
        Network net = testing::two_bus(50.0, 100.0);  // cheap gen at bus 1 exports
        DispatchResult d = solve_dcopf(net);
        REQUIRE(d.line_flows[0] > 0);
        FlowGraph g = FlowGraph::build(net, d);
        REQUIRE(g.edge_count() == 1);
        CHECK(g.edge(0).tail == 0);
        CHECK(g.edge(0).head == 1);
        CHECK(g.edge(0).flow == Approx(50.0));
        CHECK(g.inflow_set(1) == std::vector<int>{0});
        CHECK(g.outflow_set(0) == std::vector<int>{1});
    }
    SECTION("negative flow reverses the edge") {
        // Cheap generator at bus 2 feeds demand at bus 1 through line (1,2).
        Network net({{1, 60.0}, {2, 0.0}}, {{1, 2, 500.0, -100.0, 100.0}},
                    {{1, 1, 50.0, 0.0, 200.0, 900.0}, {2, 2, 5.0, 0.0, 200.0, 300.0}}, 1);
        DispatchResult d = solve_dcopf(net);
        REQUIRE(d.line_flows[0] < 0);
        FlowGraph g = FlowGraph::build(net, d);
        REQUIRE(g.edge_count() == 1);
        CHECK(g.edge(0).tail == 1);
        CHECK(g.edge(0).head == 0);
        CHECK(g.edge(0).flow == Approx(60.0));
    }
    SECTION("flows below the tolerance carry no edge") {
        Network net = testing::two_bus(50.0, /*demand=*/0.0);
        DispatchResult d;
        d.generation = {0.0, 0.0};
        d.angles = {0.0, -1e-9 / 500.0};  // flow of 1e-9 MW
        d.line_flows = {1e-9};
        d.objective_cost = 0.0;
        REQUIRE(verify_dispatch(net, d).empty());
        FlowGraph g = FlowGraph::build(net, d);
        CHECK(g.edge_count() == 0);
    }
}

TEST_CASE("invalid dispatch is rejected at build") {
    Network net = testing::two_bus();
    DispatchResult d = solve_dcopf(net);
    d.generation[0] += 25.0;
    CHECK_THROWS_AS(FlowGraph::build(net, d), ValidationError);
}

TEST_CASE("nodal balance holds on the flow graph") {
    Network net = scale_loads(load_network(testing::cases_dir() + "/six_bus.json"), 0.8);
    FlowGraph g = FlowGraph::build(net, solve_dcopf(net));
    for (int i = 0; i < g.node_count(); ++i)
        CHECK(std::abs(g.balance_residual(i)) < kFeasTol + 12 * kFlowTol);
    CHECK(g.edge_count() <= net.line_count());
}

TEST_CASE("check_acyclic orders every bus deterministically") {
    SECTION("no edges: ascending bus order") {
        FlowGraph g = FlowGraph::from_parts(4, {}, {0, 0, 0, 0}, {0, 0, 0, 0});
        CHECK(check_acyclic(g) == std::vector<int>{0, 1, 2, 3});
    }
    SECTION("solved case yields a valid order") {
        Network net = load_network(testing::cases_dir() + "/six_bus.json");
        FlowGraph g = FlowGraph::build(net, solve_dcopf(net));
        std::vector<int> order = check_acyclic(g);
        REQUIRE(order.size() == 6);
        std::vector<int> pos(6);
        for (int i = 0; i < 6; ++i) pos[order[i]] = i;
        for (const FlowEdge& e : g.edges()) CHECK(pos[e.tail] < pos[e.head]);
        CHECK(check_acyclic(g) == order);  // stable across calls
    }
    SECTION("hand-built cycle is rejected with a witness") {
        FlowGraph g = FlowGraph::from_parts(
            4, {{1, 2, -1, 10.0}, {2, 3, -1, 10.0}, {3, 1, -1, 10.0}},
            {0, 0, 0, 0}, {0, 0, 0, 0});
        try {
            check_acyclic(g);
            FAIL("cycle not detected");
        } catch (const CycleError& e) {
            std::vector<int> cyc = e.cycle();
            std::sort(cyc.begin(), cyc.end());
            CHECK(cyc == std::vector<int>{1, 2, 3});
        }
    }
}
