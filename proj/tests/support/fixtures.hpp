#pragma once

#include <string>
#include <vector>

#include "carbontrace/network.hpp"

namespace carbontrace::testing {

inline std::string cases_dir() {
#ifdef CARBONTRACE_CASES_DIR
    return CARBONTRACE_CASES_DIR;
#else
    return "cases";
#endif
}

// One bus, one generator, local demand.
inline Network single_bus(double demand = 40.0, double cost = 10.0, double p_max = 100.0,
                          double gamma = 500.0) {
    return Network({{1, demand}}, {}, {{1, 1, cost, 0.0, p_max, gamma}}, 1);
}

// Two buses joined by one line; generator at each bus, demand at bus 2.
inline Network two_bus(double line_limit = 50.0, double demand = 100.0, double cost1 = 1.0,
                       double cost2 = 10.0, double gamma1 = 800.0, double gamma2 = 300.0) {
    return Network({{1, 0.0}, {2, demand}}, {{1, 2, 500.0, -line_limit, line_limit}},
                   {{1, 1, cost1, 0.0, 200.0, gamma1}, {2, 2, cost2, 0.0, 200.0, gamma2}}, 1);
}

}  // namespace carbontrace::testing
