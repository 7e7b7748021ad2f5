#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "carbontrace/errors.hpp"

namespace carbontrace {

// Absolute feasibility tolerance for power quantities, in MW.
inline constexpr double kFeasTol = 1e-6;

struct Bus {
    int id = 0;
    double demand = 0.0;  // MW
};

struct Line {
    int from = 0;
    int to = 0;
    double susceptance = 0.0;  // MW per radian of angle difference
    double limit_low = 0.0;    // MW, <= 0
    double limit_high = 0.0;   // MW, >= 0
};

struct Generator {
    int id = 0;
    int bus = 0;
    double cost = 0.0;           // $/MWh
    double p_min = 0.0;          // MW
    double p_max = 0.0;          // MW
    double emission_rate = 0.0;  // lbs CO2/MWh
};

// Immutable grid description. Buses are renumbered to contiguous internal
// indices 0..N-1 at construction; all reporting maps back to the original ids.
//
// Demands are stored as base values plus one multiplicative scale so that
// repeated load scalings compose exactly: scaling by a then by b yields
// bit-identical demands to scaling by a*b once.
class Network {
public:
    Network(std::vector<Bus> buses, std::vector<Line> lines,
            std::vector<Generator> generators, int reference_bus)
        : buses_(std::move(buses)),
          lines_(std::move(lines)),
          generators_(std::move(generators)),
          reference_bus_(reference_bus) {
        validate_and_index();
    }

    int bus_count() const { return static_cast<int>(buses_.size()); }
    int line_count() const { return static_cast<int>(lines_.size()); }
    int generator_count() const { return static_cast<int>(generators_.size()); }

    double demand(int bus_idx) const { return buses_[bus_idx].demand * demand_scale_; }

    std::vector<double> demands() const {
        std::vector<double> d(buses_.size());
        for (int i = 0; i < bus_count(); ++i) d[i] = demand(i);
        return d;
    }

    double total_demand() const {
        double t = 0.0;
        for (int i = 0; i < bus_count(); ++i) t += demand(i);
        return t;
    }

    double demand_scale() const { return demand_scale_; }

    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<Generator>& generators() const { return generators_; }

    const Line& line(int l) const { return lines_[l]; }
    const Generator& generator(int k) const { return generators_[k]; }

    int line_from_index(int l) const { return line_from_idx_[l]; }
    int line_to_index(int l) const { return line_to_idx_[l]; }
    int generator_bus_index(int k) const { return gen_bus_idx_[k]; }

    int reference_bus() const { return reference_bus_; }
    int reference_index() const { return ref_idx_; }

    int bus_id(int idx) const { return buses_[idx].id; }

    int bus_index(int id) const {
        auto it = id_to_index_.find(id);
        if (it == id_to_index_.end())
            throw ValidationError("unknown bus id " + std::to_string(id));
        return it->second;
    }

    // Index of the generator sitting at this bus, if any.
    std::optional<int> generator_at(int bus_idx) const {
        int g = gen_at_bus_[bus_idx];
        if (g < 0) return std::nullopt;
        return g;
    }

    struct Adjacent {
        int line;            // line index
        int other;           // bus index at the far end
        double orientation;  // +1 if this bus is the line's from end, -1 otherwise
    };

    const std::vector<Adjacent>& adjacent(int bus_idx) const { return adj_[bus_idx]; }

    // Non-fatal observations from validation (e.g. capacity short of demand).
    const std::vector<std::string>& warnings() const { return warnings_; }

    // Copy with every demand multiplied by factor; topology untouched.
    Network scaled_loads(double factor) const {
        if (factor < 0.0 || std::isnan(factor))
            throw ValidationError("load scale factor must be >= 0, got " +
                                  std::to_string(factor));
        Network copy(*this);
        copy.demand_scale_ = demand_scale_ * factor;
        copy.refresh_warnings();
        return copy;
    }

    // Copy with demands replaced (by internal bus index); used for nodal
    // perturbations. The scale resets to 1.
    Network with_demands(const std::vector<double>& new_demands) const {
        if (static_cast<int>(new_demands.size()) != bus_count())
            throw ValidationError("with_demands: expected " + std::to_string(bus_count()) +
                                  " values, got " + std::to_string(new_demands.size()));
        Network copy(*this);
        for (int i = 0; i < copy.bus_count(); ++i) {
            if (new_demands[i] < 0.0)
                throw ValidationError("bus " + std::to_string(bus_id(i)) +
                                      ": negative demand");
            copy.buses_[i].demand = new_demands[i];
        }
        copy.demand_scale_ = 1.0;
        copy.refresh_warnings();
        return copy;
    }

    friend bool operator==(const Network& a, const Network& b) {
        if (a.bus_count() != b.bus_count() || a.line_count() != b.line_count() ||
            a.generator_count() != b.generator_count() ||
            a.reference_bus_ != b.reference_bus_)
            return false;
        for (int i = 0; i < a.bus_count(); ++i)
            if (a.buses_[i].id != b.buses_[i].id || a.demand(i) != b.demand(i))
                return false;
        for (int l = 0; l < a.line_count(); ++l) {
            const Line &x = a.lines_[l], &y = b.lines_[l];
            if (x.from != y.from || x.to != y.to || x.susceptance != y.susceptance ||
                x.limit_low != y.limit_low || x.limit_high != y.limit_high)
                return false;
        }
        for (int k = 0; k < a.generator_count(); ++k) {
            const Generator &x = a.generators_[k], &y = b.generators_[k];
            if (x.id != y.id || x.bus != y.bus || x.cost != y.cost ||
                x.p_min != y.p_min || x.p_max != y.p_max ||
                x.emission_rate != y.emission_rate)
                return false;
        }
        return true;
    }

private:
    void validate_and_index() {
        if (buses_.empty()) throw ValidationError("network has no buses");

        id_to_index_.reserve(buses_.size());
        for (int i = 0; i < bus_count(); ++i) {
            const Bus& bus = buses_[i];
            if (!id_to_index_.emplace(bus.id, i).second)
                throw ValidationError("duplicate bus id " + std::to_string(bus.id));
            if (bus.demand < 0.0)
                throw ValidationError("bus " + std::to_string(bus.id) + ": negative demand");
        }

        auto ref_it = id_to_index_.find(reference_bus_);
        if (ref_it == id_to_index_.end())
            throw ValidationError("reference bus " + std::to_string(reference_bus_) +
                                  " not in buses");
        ref_idx_ = ref_it->second;

        line_from_idx_.resize(lines_.size());
        line_to_idx_.resize(lines_.size());
        adj_.assign(buses_.size(), {});
        std::unordered_map<long long, int> seen_pairs;
        for (int l = 0; l < line_count(); ++l) {
            const Line& ln = lines_[l];
            std::string tag = "line " + std::to_string(ln.from) + "-" + std::to_string(ln.to);
            if (ln.from == ln.to) throw ValidationError(tag + ": self loop");
            auto fi = id_to_index_.find(ln.from);
            auto ti = id_to_index_.find(ln.to);
            if (fi == id_to_index_.end())
                throw ValidationError(tag + ": unknown bus " + std::to_string(ln.from));
            if (ti == id_to_index_.end())
                throw ValidationError(tag + ": unknown bus " + std::to_string(ln.to));
            if (ln.susceptance <= 0.0)
                throw ValidationError(tag + ": susceptance must be > 0");
            if (!(ln.limit_low <= 0.0 && 0.0 <= ln.limit_high))
                throw ValidationError(tag +
                                      ": flow limits must satisfy limit_low <= 0 <= limit_high");
            int a = std::min(fi->second, ti->second);
            int b = std::max(fi->second, ti->second);
            long long key = static_cast<long long>(a) * buses_.size() + b;
            if (!seen_pairs.emplace(key, l).second)
                throw ValidationError("duplicate " + tag);
            line_from_idx_[l] = fi->second;
            line_to_idx_[l] = ti->second;
            adj_[fi->second].push_back({l, ti->second, +1.0});
            adj_[ti->second].push_back({l, fi->second, -1.0});
        }

        gen_bus_idx_.resize(generators_.size());
        gen_at_bus_.assign(buses_.size(), -1);
        std::unordered_map<int, int> gen_ids;
        for (int k = 0; k < generator_count(); ++k) {
            const Generator& g = generators_[k];
            std::string tag = "generator " + std::to_string(g.id);
            if (!gen_ids.emplace(g.id, k).second)
                throw ValidationError("duplicate generator id " + std::to_string(g.id));
            auto bi = id_to_index_.find(g.bus);
            if (bi == id_to_index_.end())
                throw ValidationError(tag + ": unknown bus " + std::to_string(g.bus));
            if (!(0.0 <= g.p_min && g.p_min <= g.p_max))
                throw ValidationError(tag + ": bounds must satisfy 0 <= p_min <= p_max");
            if (g.emission_rate < 0.0)
                throw ValidationError(tag + ": negative emission_rate");
            if (gen_at_bus_[bi->second] >= 0)
                throw ValidationError(
                    "bus " + std::to_string(g.bus) + ": multiple generators (" +
                    std::to_string(generators_[gen_at_bus_[bi->second]].id) + " and " +
                    std::to_string(g.id) +
                    "); pre-aggregate them or model distinct buses");
            gen_bus_idx_[k] = bi->second;
            gen_at_bus_[bi->second] = k;
        }

        check_connected();
        refresh_warnings();
    }

    void check_connected() const {
        std::vector<char> seen(buses_.size(), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        int visited = 1;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            for (const Adjacent& a : adj_[i]) {
                if (!seen[a.other]) {
                    seen[a.other] = 1;
                    ++visited;
                    stack.push_back(a.other);
                }
            }
        }
        if (visited != bus_count()) throw ValidationError("disconnected graph");
    }

    void refresh_warnings() {
        warnings_.clear();
        double cap = 0.0;
        for (const Generator& g : generators_) cap += g.p_max;
        double dem = total_demand();
        if (cap + kFeasTol < dem) {
            std::ostringstream os;
            os << "total generation capacity " << cap << " MW below total demand " << dem
               << " MW";
            warnings_.push_back(os.str());
        }
    }

    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<Generator> generators_;
    int reference_bus_ = 0;
    double demand_scale_ = 1.0;

    std::unordered_map<int, int> id_to_index_;
    std::vector<int> line_from_idx_;
    std::vector<int> line_to_idx_;
    std::vector<int> gen_bus_idx_;
    std::vector<int> gen_at_bus_;
    std::vector<std::vector<Adjacent>> adj_;
    int ref_idx_ = 0;
    std::vector<std::string> warnings_;
};

inline Network scale_loads(const Network& net, double factor) {
    return net.scaled_loads(factor);
}

}  // namespace carbontrace
