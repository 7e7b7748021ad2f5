#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "carbontrace/dispatch.hpp"
#include "carbontrace/emissions.hpp"
#include "carbontrace/errors.hpp"
#include "carbontrace/flowgraph.hpp"
#include "carbontrace/network.hpp"
#include "carbontrace/tracing.hpp"

namespace carbontrace {

// All CSV numbers go through one formatter (9 significant digits) so repeated
// runs produce byte-identical files.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline std::string csv_num(const std::optional<double>& v) {
    return v ? csv_num(*v) : std::string("nan");
}

namespace detail {
inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write " + path.string());
    return out;
}
}  // namespace detail

// ---- emission report ----

inline void write_report_csv(const Network& net, const EmissionReport& rep,
                             const std::filesystem::path& path) {
    std::ofstream out = detail::open_out(path);
    out << "bus,demand_mw,total_emission,avg_rate,marginal_rate\n";
    for (int i = 0; i < net.bus_count(); ++i)
        out << net.bus_id(i) << ',' << csv_num(rep.demand[i]) << ','
            << csv_num(rep.node_total_emission[i]) << ',' << csv_num(rep.average_rate[i])
            << ',' << csv_num(rep.marginal_rate[i]) << '\n';
}

inline nlohmann::json report_to_json(const Network& net, const EmissionReport& rep) {
    nlohmann::json doc;
    doc["load_factor"] = rep.load_factor;
    doc["system_emission"] = rep.system_emission;
    doc["system_cost"] = rep.system_cost;
    doc["rows"] = nlohmann::json::array();
    for (int i = 0; i < net.bus_count(); ++i) {
        nlohmann::json row{{"bus", net.bus_id(i)},
                           {"demand_mw", rep.demand[i]},
                           {"total_emission", rep.node_total_emission[i]}};
        row["avg_rate"] = rep.average_rate[i] ? nlohmann::json(*rep.average_rate[i])
                                              : nlohmann::json(nullptr);
        row["marginal_rate"] = rep.marginal_rate[i] ? nlohmann::json(*rep.marginal_rate[i])
                                                    : nlohmann::json(nullptr);
        row["marginal_note"] = to_string(rep.marginal_note[i]);
        doc["rows"].push_back(row);
    }
    return doc;
}

inline void write_report_json(const Network& net, const EmissionReport& rep,
                              const std::filesystem::path& path) {
    detail::open_out(path) << report_to_json(net, rep).dump(2) << "\n";
}

// ---- sweep summary ----

struct SweepSummaryRow {
    double factor = 0.0;
    bool feasible = true;
    std::optional<double> mean_avg, std_avg, mean_marginal, std_marginal;
    double system_emission = 0.0;
    double system_cost = 0.0;
};

inline SweepSummaryRow summarize_report(const EmissionReport& rep) {
    SweepSummaryRow row;
    row.factor = rep.load_factor;
    row.system_emission = rep.system_emission;
    row.system_cost = rep.system_cost;
    auto stats = [](const std::vector<std::optional<double>>& xs)
        -> std::pair<std::optional<double>, std::optional<double>> {
        double sum = 0.0;
        int n = 0;
        for (const auto& x : xs)
            if (x) {
                sum += *x;
                ++n;
            }
        if (n == 0) return {std::nullopt, std::nullopt};
        double mean = sum / n;
        double var = 0.0;
        for (const auto& x : xs)
            if (x) var += (*x - mean) * (*x - mean);
        return {mean, std::sqrt(var / n)};
    };
    std::tie(row.mean_avg, row.std_avg) = stats(rep.average_rate);
    std::tie(row.mean_marginal, row.std_marginal) = stats(rep.marginal_rate);
    return row;
}

inline void write_sweep_summary_csv(const std::vector<SweepSummaryRow>& rows,
                                    const std::filesystem::path& path) {
    std::ofstream out = detail::open_out(path);
    out << "factor,status,mean_avg_rate,std_avg_rate,mean_marginal_rate,std_marginal_rate,"
           "system_emission,system_cost\n";
    for (const SweepSummaryRow& r : rows) {
        out << csv_num(r.factor) << ',' << (r.feasible ? "ok" : "infeasible") << ','
            << csv_num(r.mean_avg) << ',' << csv_num(r.std_avg) << ','
            << csv_num(r.mean_marginal) << ',' << csv_num(r.std_marginal) << ','
            << csv_num(r.system_emission) << ',' << csv_num(r.system_cost) << '\n';
    }
}

inline void write_sweep_summary_json(const std::vector<SweepSummaryRow>& rows,
                                     const std::filesystem::path& path) {
    nlohmann::json doc = nlohmann::json::array();
    auto opt = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const SweepSummaryRow& r : rows)
        doc.push_back({{"factor", r.factor},
                       {"status", r.feasible ? "ok" : "infeasible"},
                       {"mean_avg_rate", opt(r.mean_avg)},
                       {"std_avg_rate", opt(r.std_avg)},
                       {"mean_marginal_rate", opt(r.mean_marginal)},
                       {"std_marginal_rate", opt(r.std_marginal)},
                       {"system_emission", r.system_emission},
                       {"system_cost", r.system_cost}});
    detail::open_out(path) << doc.dump(2) << "\n";
}

// ---- contribution matrix ----

inline void write_contrib_csv(const Network& net, const ContributionMatrix& m,
                              const std::filesystem::path& path) {
    std::ofstream out = detail::open_out(path);
    out << "bus,generator,mw\n";
    for (int i = 0; i < net.bus_count(); ++i)
        for (int k = 0; k < net.generator_count(); ++k)
            out << net.bus_id(i) << ',' << net.generator(k).id << ',' << csv_num(m.node(i, k))
                << '\n';
}

inline nlohmann::json contrib_to_json(const Network& net, const ContributionMatrix& m) {
    nlohmann::json doc;
    doc["node_contrib"] = nlohmann::json::array();
    for (int i = 0; i < net.bus_count(); ++i)
        for (int k = 0; k < net.generator_count(); ++k)
            doc["node_contrib"].push_back({{"bus", net.bus_id(i)},
                                           {"generator", net.generator(k).id},
                                           {"mw", m.node(i, k)}});
    doc["line_contrib"] = nlohmann::json::array();
    for (int l = 0; l < net.line_count(); ++l)
        for (int k = 0; k < net.generator_count(); ++k)
            doc["line_contrib"].push_back({{"from", net.line(l).from},
                                           {"to", net.line(l).to},
                                           {"generator", net.generator(k).id},
                                           {"mw", m.line(l, k)}});
    doc["reachable_sets"] = nlohmann::json::array();
    for (int k = 0; k < net.generator_count(); ++k) {
        nlohmann::json buses = nlohmann::json::array();
        for (int i : m.reachable_set(k)) buses.push_back(net.bus_id(i));
        doc["reachable_sets"].push_back(
            {{"generator", net.generator(k).id}, {"buses", buses}});
    }
    return doc;
}

inline void write_contrib_json(const Network& net, const ContributionMatrix& m,
                               const std::filesystem::path& path) {
    detail::open_out(path) << contrib_to_json(net, m).dump(2) << "\n";
}

// ---- flow graph ----

inline void write_flowgraph_csv(const Network& net, const FlowGraph& g,
                                const std::filesystem::path& path) {
    std::ofstream out = detail::open_out(path);
    out << "tail,head,flow_mw\n";
    for (const FlowEdge& e : g.edges())
        out << net.bus_id(e.tail) << ',' << net.bus_id(e.head) << ',' << csv_num(e.flow)
            << '\n';
}

// ---- dispatch result ----

inline nlohmann::json dispatch_to_json(const DispatchResult& d) {
    return {{"generation", d.generation},
            {"angles", d.angles},
            {"line_flows", d.line_flows},
            {"objective_cost", d.objective_cost}};
}

inline void write_dispatch_json(const DispatchResult& d, const std::filesystem::path& path) {
    detail::open_out(path) << dispatch_to_json(d).dump(2) << "\n";
}

inline DispatchResult parse_dispatch(const nlohmann::json& doc) {
    DispatchResult d;
    try {
        doc.at("generation").get_to(d.generation);
        doc.at("angles").get_to(d.angles);
        doc.at("line_flows").get_to(d.line_flows);
        d.objective_cost = doc.at("objective_cost").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("dispatch file: ") + e.what());
    }
    return d;
}

inline DispatchResult load_dispatch(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open dispatch file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("dispatch file " + path.string() + ": " + e.what());
    }
    return parse_dispatch(doc);
}

}  // namespace carbontrace
