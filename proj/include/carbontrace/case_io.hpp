#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "carbontrace/errors.hpp"
#include "carbontrace/network.hpp"

namespace carbontrace {

namespace detail {

inline double require_number(const nlohmann::json& j, const char* field,
                             const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_number())
        throw ParseError(ctx + ": missing or non-numeric field \"" + field + "\"");
    return j[field].get<double>();
}

inline int require_int(const nlohmann::json& j, const char* field, const std::string& ctx) {
    if (!j.contains(field) || !j[field].is_number_integer())
        throw ParseError(ctx + ": missing or non-integer field \"" + field + "\"");
    return j[field].get<int>();
}

}  // namespace detail

// Case-file schema:
//   {"buses":[{"id":int,"demand":float}],
//    "lines":[{"from":int,"to":int,"susceptance":float,"limit":float}],
//    "generators":[{"id":int,"bus":int,"cost":float,"p_min":float,"p_max":float,
//                   "emission_rate":float}],
//    "reference_bus":int}
// A line's "limit" L means flow bounds [-L, +L]; asymmetric bounds may be given
// as "limit_low"/"limit_high" instead.
inline Network parse_network(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ParseError("case file: top level must be a JSON object");
    for (const char* key : {"buses", "lines", "generators"})
        if (!doc.contains(key) || !doc[key].is_array())
            throw ParseError(std::string("case file: missing array \"") + key + "\"");
    if (!doc.contains("reference_bus"))
        throw ParseError("case file: missing \"reference_bus\"");

    std::vector<Bus> buses;
    for (const auto& jb : doc["buses"]) {
        Bus b;
        b.id = detail::require_int(jb, "id", "bus entry");
        b.demand = detail::require_number(jb, "demand", "bus " + std::to_string(b.id));
        buses.push_back(b);
    }

    std::vector<Line> lines;
    for (const auto& jl : doc["lines"]) {
        Line ln;
        ln.from = detail::require_int(jl, "from", "line entry");
        ln.to = detail::require_int(jl, "to", "line entry");
        std::string ctx = "line " + std::to_string(ln.from) + "-" + std::to_string(ln.to);
        ln.susceptance = detail::require_number(jl, "susceptance", ctx);
        bool has_sym = jl.contains("limit");
        bool has_asym = jl.contains("limit_low") || jl.contains("limit_high");
        if (has_sym && has_asym)
            throw ParseError(ctx + ": give either \"limit\" or \"limit_low\"/\"limit_high\"");
        if (has_sym) {
            double lim = detail::require_number(jl, "limit", ctx);
            if (lim < 0.0) throw ParseError(ctx + ": \"limit\" must be >= 0");
            ln.limit_low = -lim;
            ln.limit_high = lim;
        } else if (has_asym) {
            ln.limit_low = detail::require_number(jl, "limit_low", ctx);
            ln.limit_high = detail::require_number(jl, "limit_high", ctx);
        } else {
            throw ParseError(ctx + ": missing flow limit");
        }
        lines.push_back(ln);
    }

    std::vector<Generator> gens;
    for (const auto& jg : doc["generators"]) {
        Generator g;
        g.id = detail::require_int(jg, "id", "generator entry");
        std::string ctx = "generator " + std::to_string(g.id);
        g.bus = detail::require_int(jg, "bus", ctx);
        g.cost = detail::require_number(jg, "cost", ctx);
        g.p_min = detail::require_number(jg, "p_min", ctx);
        g.p_max = detail::require_number(jg, "p_max", ctx);
        g.emission_rate = detail::require_number(jg, "emission_rate", ctx);
        gens.push_back(g);
    }

    if (!doc["reference_bus"].is_number_integer())
        throw ParseError("case file: \"reference_bus\" must be an integer");

    return Network(std::move(buses), std::move(lines), std::move(gens),
                   doc["reference_bus"].get<int>());
}

inline Network load_network(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open case file " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("case file " + path.string() + ": " + e.what());
    }
    return parse_network(doc);
}

inline nlohmann::json network_to_json(const Network& net) {
    nlohmann::json doc;
    doc["buses"] = nlohmann::json::array();
    for (int i = 0; i < net.bus_count(); ++i)
        doc["buses"].push_back({{"id", net.bus_id(i)}, {"demand", net.demand(i)}});
    doc["lines"] = nlohmann::json::array();
    for (const Line& ln : net.lines()) {
        nlohmann::json jl{{"from", ln.from}, {"to", ln.to}, {"susceptance", ln.susceptance}};
        if (ln.limit_high == -ln.limit_low) {
            jl["limit"] = ln.limit_high;
        } else {
            jl["limit_low"] = ln.limit_low;
            jl["limit_high"] = ln.limit_high;
        }
        doc["lines"].push_back(jl);
    }
    doc["generators"] = nlohmann::json::array();
    for (const Generator& g : net.generators())
        doc["generators"].push_back({{"id", g.id},
                                     {"bus", g.bus},
                                     {"cost", g.cost},
                                     {"p_min", g.p_min},
                                     {"p_max", g.p_max},
                                     {"emission_rate", g.emission_rate}});
    doc["reference_bus"] = net.reference_bus();
    return doc;
}

inline void save_network(const Network& net, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write case file " + path.string());
    out << network_to_json(net).dump(2) << "\n";
}

}  // namespace carbontrace
