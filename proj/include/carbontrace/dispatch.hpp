#pragma once

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "carbontrace/errors.hpp"
#include "carbontrace/network.hpp"
#include "carbontrace/simplex.hpp"

namespace carbontrace {

struct DispatchResult {
    std::vector<double> generation;  // MW per generator
    std::vector<double> angles;      // radians per bus
    std::vector<double> line_flows;  // signed MW per line, positive from -> to
    double objective_cost = 0.0;     // $
};

struct Violation {
    enum class Kind { GenerationBound, FlowBound, NodalBalance, FlowMismatch, ReferenceAngle };
    Kind kind;
    int index;         // generator / line / bus index, by kind
    double magnitude;  // MW (radians for ReferenceAngle)

    std::string describe(const Network& net) const {
        std::ostringstream os;
        switch (kind) {
            case Kind::GenerationBound:
                os << "generator " << net.generator(index).id << " outside [p_min, p_max] by "
                   << magnitude << " MW";
                break;
            case Kind::FlowBound:
                os << "line " << net.line(index).from << "-" << net.line(index).to
                   << " outside flow limits by " << magnitude << " MW";
                break;
            case Kind::NodalBalance:
                os << "bus " << net.bus_id(index) << " balance residual " << magnitude
                   << " MW";
                break;
            case Kind::FlowMismatch:
                os << "line " << net.line(index).from << "-" << net.line(index).to
                   << " flow disagrees with angles by " << magnitude << " MW";
                break;
            case Kind::ReferenceAngle:
                os << "reference bus angle is " << magnitude << " rad, expected 0";
                break;
        }
        return os.str();
    }
};

// Checks a dispatch against the network: generation bounds, line flow limits,
// angle/flow consistency, nodal balance, and the reference angle pin. Empty
// result means the dispatch is usable for flow tracing.
inline std::vector<Violation> verify_dispatch(const Network& net, const DispatchResult& d,
                                              double tol = kFeasTol) {
    const int buses = net.bus_count();
    const int lines = net.line_count();
    const int gens = net.generator_count();
    if (static_cast<int>(d.generation.size()) != gens ||
        static_cast<int>(d.angles.size()) != buses ||
        static_cast<int>(d.line_flows.size()) != lines) {
        std::ostringstream os;
        os << "dispatch dimensions (" << d.generation.size() << " gen, " << d.angles.size()
           << " bus, " << d.line_flows.size() << " line) do not match network (" << gens
           << ", " << buses << ", " << lines << ")";
        throw ValidationError(os.str());
    }

    std::vector<Violation> out;
    for (int k = 0; k < gens; ++k) {
        const Generator& g = net.generator(k);
        if (d.generation[k] < g.p_min - tol)
            out.push_back({Violation::Kind::GenerationBound, k, g.p_min - d.generation[k]});
        else if (d.generation[k] > g.p_max + tol)
            out.push_back({Violation::Kind::GenerationBound, k, d.generation[k] - g.p_max});
    }
    for (int l = 0; l < lines; ++l) {
        const Line& ln = net.line(l);
        double f = d.line_flows[l];
        if (f < ln.limit_low - tol)
            out.push_back({Violation::Kind::FlowBound, l, ln.limit_low - f});
        else if (f > ln.limit_high + tol)
            out.push_back({Violation::Kind::FlowBound, l, f - ln.limit_high});
        double from_angles =
            ln.susceptance * (d.angles[net.line_from_index(l)] - d.angles[net.line_to_index(l)]);
        if (std::abs(f - from_angles) > tol)
            out.push_back({Violation::Kind::FlowMismatch, l, std::abs(f - from_angles)});
    }
    for (int i = 0; i < buses; ++i) {
        double residual = -net.demand(i);
        if (auto k = net.generator_at(i)) residual += d.generation[*k];
        for (const Network::Adjacent& a : net.adjacent(i)) {
            const Line& ln = net.line(a.line);
            residual -= a.orientation * ln.susceptance *
                        (d.angles[net.line_from_index(a.line)] - d.angles[net.line_to_index(a.line)]);
        }
        if (std::abs(residual) > tol)
            out.push_back({Violation::Kind::NodalBalance, i, std::abs(residual)});
    }
    if (std::abs(d.angles[net.reference_index()]) > 1e-9)
        out.push_back({Violation::Kind::ReferenceAngle, net.reference_index(),
                       std::abs(d.angles[net.reference_index()])});
    return out;
}

namespace detail {

// Variable layout: [theta (N) | p_g (K) | flow (L)].
inline lp::Problem build_opf_lp(const Network& net) {
    const int buses = net.bus_count();
    const int gens = net.generator_count();
    const int lines = net.line_count();
    const int n = buses + gens + lines;
    const int m = buses + lines;

    lp::Problem p;
    p.A = Eigen::MatrixXd::Zero(m, n);
    p.b = Eigen::VectorXd::Zero(m);
    p.c = Eigen::VectorXd::Zero(n);
    p.lower = Eigen::VectorXd::Constant(n, -lp::kInf);
    p.upper = Eigen::VectorXd::Constant(n, lp::kInf);

    for (int k = 0; k < gens; ++k) {
        const Generator& g = net.generator(k);
        int col = buses + k;
        p.c[col] = g.cost;
        p.lower[col] = g.p_min;
        p.upper[col] = g.p_max;
        p.A(net.generator_bus_index(k), col) = 1.0;
    }
    for (int l = 0; l < lines; ++l) {
        const Line& ln = net.line(l);
        int a = net.line_from_index(l);
        int bidx = net.line_to_index(l);
        // Balance rows: p_g - d = sum of beta (theta_i - theta_j) over neighbors.
        p.A(a, a) -= ln.susceptance;
        p.A(a, bidx) += ln.susceptance;
        p.A(bidx, bidx) -= ln.susceptance;
        p.A(bidx, a) += ln.susceptance;
        // Flow definition row with a bounded flow variable.
        int frow = buses + l;
        int fcol = buses + gens + l;
        p.A(frow, fcol) = 1.0;
        p.A(frow, a) = -ln.susceptance;
        p.A(frow, bidx) = ln.susceptance;
        p.lower[fcol] = ln.limit_low;
        p.upper[fcol] = ln.limit_high;
    }
    for (int i = 0; i < buses; ++i) p.b[i] = net.demand(i);
    p.lower[net.reference_index()] = 0.0;
    p.upper[net.reference_index()] = 0.0;
    return p;
}

inline std::string describe_infeasible_rows(const Network& net, const std::vector<int>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < rows.size(); ++i) {
        if (i) os << ", ";
        int r = rows[i];
        if (r < net.bus_count())
            os << "bus " << net.bus_id(r) << " balance";
        else {
            const Line& ln = net.line(r - net.bus_count());
            os << "line " << ln.from << "-" << ln.to << " flow";
        }
    }
    return os.str();
}

inline DispatchResult extract_dispatch(const Network& net, const Eigen::VectorXd& x) {
    const int buses = net.bus_count();
    DispatchResult d;
    d.angles.assign(x.data(), x.data() + buses);
    d.generation.assign(x.data() + buses, x.data() + buses + net.generator_count());
    // Snap solver dust on the generator bounds so downstream consumers see
    // clean [p_min, p_max] values; anything larger is a real violation and
    // stays visible.
    for (int k = 0; k < net.generator_count(); ++k) {
        const Generator& g = net.generator(k);
        double& v = d.generation[k];
        if (v < g.p_min && v > g.p_min - 1e-7) v = g.p_min;
        if (v > g.p_max && v < g.p_max + 1e-7) v = g.p_max;
    }
    d.line_flows.resize(net.line_count());
    d.objective_cost = 0.0;
    for (int l = 0; l < net.line_count(); ++l) {
        const Line& ln = net.line(l);
        d.line_flows[l] =
            ln.susceptance * (d.angles[net.line_from_index(l)] - d.angles[net.line_to_index(l)]);
    }
    for (int k = 0; k < net.generator_count(); ++k)
        d.objective_cost += net.generator(k).cost * d.generation[k];
    return d;
}

}  // namespace detail

// Cost-minimizing DC dispatch. Returns a vertex solution; when the optimal
// face is degenerate, ties are broken by sequential re-solves that pick the
// lexicographically smallest generation vector, so results are reproducible
// run to run and independent of solver internals.
inline DispatchResult solve_dcopf(const Network& net) {
    lp::Problem p = detail::build_opf_lp(net);
    lp::Solution sol = lp::solve(p);
    if (sol.status == lp::Status::Infeasible)
        throw InfeasibleError("dispatch infeasible: " +
                              detail::describe_infeasible_rows(net, sol.infeasible_rows));
    if (sol.status != lp::Status::Optimal)
        throw InternalError("dispatch LP reported an unbounded ray");

    if (sol.alternate_optima && net.generator_count() > 0) {
        const int buses = net.bus_count();
        const int gens = net.generator_count();
        const int n = static_cast<int>(p.A.cols());
        double scale = std::max(1.0, std::abs(sol.objective));
        double band = 1e-8 * scale;

        // One extra row pins total cost to the optimal value (within a thin
        // band for numerics); each pass then minimizes one generator in turn.
        lp::Problem q;
        q.A = Eigen::MatrixXd::Zero(p.A.rows() + 1, n + 1);
        q.A.topLeftCorner(p.A.rows(), n) = p.A;
        q.b = Eigen::VectorXd::Zero(p.A.rows() + 1);
        q.b.head(p.A.rows()) = p.b;
        q.c = Eigen::VectorXd::Zero(n + 1);
        q.lower = Eigen::VectorXd::Zero(n + 1);
        q.upper = Eigen::VectorXd::Zero(n + 1);
        q.lower.head(n) = p.lower;
        q.upper.head(n) = p.upper;
        for (int k = 0; k < gens; ++k) q.A(p.A.rows(), buses + k) = net.generator(k).cost;
        q.A(p.A.rows(), n) = 1.0;
        q.b[p.A.rows()] = sol.objective + band;
        q.lower[n] = 0.0;
        q.upper[n] = 2.0 * band;

        for (int k = 0; k < gens; ++k) {
            q.c.setZero();
            q.c[buses + k] = 1.0;
            lp::Solution step = lp::solve(q);
            if (step.status != lp::Status::Optimal)
                throw InternalError("dispatch tie-break LP failed unexpectedly");
            double v = step.x[buses + k];
            // Pin within a hair of the minimizer, without leaving the
            // generator's real operating range.
            q.lower[buses + k] = std::max(p.lower[buses + k], v - 1e-9);
            q.upper[buses + k] = std::min(p.upper[buses + k], v + 1e-9);
            sol.x = step.x.head(n);
        }
    }
    return detail::extract_dispatch(net, sol.x);
}

}  // namespace carbontrace
