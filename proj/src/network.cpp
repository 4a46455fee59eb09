#include "opf/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>

#include <json.hpp>

namespace opf {

using nlohmann::ordered_json;

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError(msg);
}

// Strict object access: every key must be known, required keys must exist.
class ObjectReader {
public:
    ObjectReader(const ordered_json& j, std::string path) : j_(j), path_(std::move(path)) {
        require(j.is_object(), path_ + ": expected an object");
    }

    double number(const std::string& key) const {
        const auto& v = at(key);
        require(v.is_number(), path_ + "." + key + ": expected a number");
        return v.get<double>();
    }

    std::optional<double> opt_number(const std::string& key) const {
        if (!j_.contains(key)) return std::nullopt;
        return number(key);
    }

    int integer(const std::string& key) const {
        const auto& v = at(key);
        require(v.is_number_integer(), path_ + "." + key + ": expected an integer");
        return v.get<int>();
    }

    std::string text(const std::string& key) const {
        const auto& v = at(key);
        require(v.is_string(), path_ + "." + key + ": expected a string");
        return v.get<std::string>();
    }

    bool flag(const std::string& key, bool fallback) const {
        if (!j_.contains(key)) return fallback;
        const auto& v = j_.at(key);
        require(v.is_boolean(), path_ + "." + key + ": expected a boolean");
        return v.get<bool>();
    }

    const ordered_json& array(const std::string& key) const {
        const auto& v = at(key);
        require(v.is_array(), path_ + "." + key + ": expected an array");
        return v;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    // Rejects keys outside the schema instead of silently dropping them.
    void check_known(std::initializer_list<const char*> known) const {
        for (const auto& [key, value] : j_.items()) {
            (void)value;
            if (std::find_if(known.begin(), known.end(),
                             [&](const char* k) { return key == k; }) == known.end()) {
                throw ValidationError(path_ + ": unknown field '" + key + "'");
            }
        }
    }

    const std::string& path() const { return path_; }

private:
    const ordered_json& at(const std::string& key) const {
        require(j_.contains(key), path_ + ": missing field '" + key + "'");
        return j_.at(key);
    }

    const ordered_json& j_;
    std::string path_;
};

BusKind kind_from_string(const std::string& s, const std::string& path) {
    if (s == "slack") return BusKind::Slack;
    if (s == "generator") return BusKind::Generator;
    if (s == "load") return BusKind::Load;
    throw ValidationError(path + ": bus type must be slack|generator|load, got '" + s + "'");
}

const char* kind_to_string(BusKind k) {
    switch (k) {
        case BusKind::Slack: return "slack";
        case BusKind::Generator: return "generator";
        case BusKind::Load: return "load";
    }
    return "?";
}

}  // namespace

Network Network::from_parts(PerUnitBase base, std::vector<Bus> buses, std::vector<Line> lines,
                            std::vector<Generator> generators, std::optional<double> slack_v) {
    require(base.mva > 0.0, "base_mva must be positive");
    require(base.kv > 0.0, "base_kv must be positive");
    const int n = static_cast<int>(buses.size());
    require(n >= 1, "a case needs at least one bus");

    std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (int k = 0; k < n; ++k) {
        require(buses[k].id == k, "bus ids must be 0..n-1 without gaps (bus " +
                                      std::to_string(buses[k].id) + " out of place)");
    }

    int slack_count = 0;
    for (const Bus& b : buses) {
        const std::string at = "bus " + std::to_string(b.id);
        require(b.v_min > 0.0, at + ": V_min must be > 0");
        require(b.v_min <= b.v_max, at + ": V_min must not exceed V_max");
        if (b.kind == BusKind::Slack) {
            ++slack_count;
            require(b.id == 0, "the slack bus must have id 0");
        }
    }
    require(slack_count == 1, "exactly one slack bus is required, found " +
                                  std::to_string(slack_count));

    std::set<std::pair<int, int>> seen_pairs;
    for (const Line& l : lines) {
        const std::string at =
            "line " + std::to_string(l.from) + "-" + std::to_string(l.to);
        require(l.from >= 0 && l.from < n && l.to >= 0 && l.to < n, at + ": endpoint out of range");
        require(l.from != l.to, at + ": endpoints must differ");
        const auto key = std::minmax(l.from, l.to);
        require(seen_pairs.insert(key).second, at + ": duplicate line (up to orientation)");
        require(std::abs(l.admittance) > 0.0, at + ": zero admittance");
        if (l.dv_max) require(*l.dv_max > 0.0, at + ": dv_max must be > 0");
        if (l.s_max) require(*l.s_max > 0.0, at + ": s_max must be > 0");
        require(l.dv_max || l.s_max, at + ": a line needs dv_max or s_max");
    }

    std::vector<int> gen_at_bus(n, -1);
    for (int g = 0; g < static_cast<int>(generators.size()); ++g) {
        const Generator& gen = generators[g];
        const std::string at = "generator at bus " + std::to_string(gen.bus);
        require(gen.bus >= 0 && gen.bus < n, at + ": bus out of range");
        require(gen_at_bus[gen.bus] < 0, at + ": no more than one generator per bus");
        gen_at_bus[gen.bus] = g;
        require(gen.p_min <= gen.p_max, at + ": P_min must not exceed P_max");
        require(gen.q_min <= gen.q_max, at + ": Q_min must not exceed Q_max");
        require(gen.c2 >= 0.0, at + ": quadratic cost coefficient must be >= 0");
        const BusKind kind = buses[gen.bus].kind;
        require(kind != BusKind::Load,
                at + ": a bus hosting a generator must be declared slack or generator");
    }
    for (const Bus& b : buses) {
        if (b.kind == BusKind::Generator) {
            require(gen_at_bus[b.id] >= 0, "bus " + std::to_string(b.id) +
                                               ": declared generator but no unit attached");
        }
    }

    // Connectivity over the undirected line graph, from the slack.
    std::vector<std::vector<int>> adjacency(n);
    for (const Line& l : lines) {
        adjacency[l.from].push_back(l.to);
        adjacency[l.to].push_back(l.from);
    }
    for (auto& nbrs : adjacency) std::sort(nbrs.begin(), nbrs.end());
    std::vector<bool> reached(n, false);
    std::queue<int> frontier;
    frontier.push(0);
    reached[0] = true;
    while (!frontier.empty()) {
        const int k = frontier.front();
        frontier.pop();
        for (int m : adjacency[k]) {
            if (!reached[m]) {
                reached[m] = true;
                frontier.push(m);
            }
        }
    }
    for (int k = 0; k < n; ++k) {
        require(reached[k], "disconnected case: bus " + std::to_string(k) +
                                " is unreachable from the slack");
    }

    if (slack_v) require(*slack_v > 0.0, "slack voltage override must be > 0");
    const double sv = slack_v.value_or(1.0);
    require(sv >= buses[0].v_min && sv <= buses[0].v_max,
            "slack voltage outside the slack bus magnitude bounds");

    Network net;
    net.base_ = base;
    net.slack_v_ = sv;
    net.buses_ = std::move(buses);
    net.lines_ = std::move(lines);
    net.generators_ = std::move(generators);
    net.adjacency_ = std::move(adjacency);
    net.gen_at_bus_ = std::move(gen_at_bus);
    return net;
}

const std::vector<int>& Network::neighbors(int bus) const {
    require(bus >= 0 && bus < num_buses(), "neighbors: bus out of range");
    return adjacency_[bus];
}

std::optional<int> Network::line_index(int l, int m) const {
    for (int i = 0; i < num_lines(); ++i) {
        const Line& ln = lines_[i];
        if ((ln.from == l && ln.to == m) || (ln.from == m && ln.to == l)) return i;
    }
    return std::nullopt;
}

std::complex<double> Network::admittance_of(int l, int m) const {
    const auto idx = line_index(l, m);
    if (!idx) {
        throw ValidationError("no line between buses " + std::to_string(l) + " and " +
                              std::to_string(m));
    }
    return lines_[*idx].admittance;
}

const Generator* Network::generator_at(int bus) const {
    const auto idx = generator_index(bus);
    return idx ? &generators_[*idx] : nullptr;
}

std::optional<int> Network::generator_index(int bus) const {
    if (bus < 0 || bus >= num_buses() || gen_at_bus_[bus] < 0) return std::nullopt;
    return gen_at_bus_[bus];
}

BusPartition bus_partition(const Network& net) {
    BusPartition p;
    p.slack = 0;
    for (const Bus& b : net.buses()) {
        if (b.kind == BusKind::Slack) continue;
        if (b.kind == BusKind::Generator) {
            p.generator.push_back(b.id);
        } else if (b.renewable) {
            p.renewable.push_back(b.id);
        } else {
            p.load.push_back(b.id);
        }
    }
    return p;
}

Network parse_case_json(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("case document is not valid JSON: ") + e.what());
    }

    ObjectReader root(doc, "case");
    root.check_known({"base_mva", "base_kv", "slack_voltage_kv", "buses", "lines", "generators"});
    PerUnitBase base;
    base.mva = root.number("base_mva");
    base.kv = root.number("base_kv");
    require(base.mva > 0.0, "case.base_mva: must be positive");
    require(base.kv > 0.0, "case.base_kv: must be positive");

    std::optional<double> slack_v;
    if (root.has("slack_voltage_kv")) slack_v = base.voltage_to_pu(root.number("slack_voltage_kv"));

    std::vector<Bus> buses;
    {
        const auto& arr = root.array("buses");
        for (size_t i = 0; i < arr.size(); ++i) {
            ObjectReader r(arr[i], "buses[" + std::to_string(i) + "]");
            r.check_known({"id", "type", "vmin_kv", "vmax_kv", "load_mw", "load_mvar",
                           "renewable"});
            Bus b;
            b.id = r.integer("id");
            b.kind = kind_from_string(r.text("type"), r.path());
            b.renewable = r.flag("renewable", false);
            b.v_min = base.voltage_to_pu(r.number("vmin_kv"));
            b.v_max = base.voltage_to_pu(r.number("vmax_kv"));
            b.p_load = base.power_to_pu(r.opt_number("load_mw").value_or(0.0));
            b.q_load = base.power_to_pu(r.opt_number("load_mvar").value_or(0.0));
            buses.push_back(b);
        }
    }

    std::vector<Line> lines;
    {
        const auto& arr = root.array("lines");
        for (size_t i = 0; i < arr.size(); ++i) {
            ObjectReader r(arr[i], "lines[" + std::to_string(i) + "]");
            r.check_known({"from", "to", "r_ohm", "x_ohm", "dv_max_kv", "s_max_mva"});
            Line l;
            l.from = r.integer("from");
            l.to = r.integer("to");
            const std::complex<double> z(base.impedance_to_pu(r.number("r_ohm")),
                                         base.impedance_to_pu(r.number("x_ohm")));
            require(std::abs(z) > 0.0, r.path() + ": zero impedance");
            l.admittance = 1.0 / z;
            if (auto dv = r.opt_number("dv_max_kv")) l.dv_max = base.voltage_to_pu(*dv);
            if (auto sm = r.opt_number("s_max_mva")) l.s_max = base.power_to_pu(*sm);
            lines.push_back(l);
        }
    }

    std::vector<Generator> gens;
    {
        const auto& arr = root.array("generators");
        for (size_t i = 0; i < arr.size(); ++i) {
            ObjectReader r(arr[i], "generators[" + std::to_string(i) + "]");
            r.check_known({"bus", "pmin_mw", "pmax_mw", "qmin_mvar", "qmax_mvar", "cost",
                           "pset_mw", "vset_kv"});
            Generator g;
            g.bus = r.integer("bus");
            g.p_min = base.power_to_pu(r.number("pmin_mw"));
            g.p_max = base.power_to_pu(r.number("pmax_mw"));
            g.q_min = base.power_to_pu(r.number("qmin_mvar"));
            g.q_max = base.power_to_pu(r.number("qmax_mvar"));
            const auto& cost = r.array("cost");
            require(cost.size() == 3, r.path() + ".cost: expected [c2, c1, c0]");
            for (const auto& c : cost) {
                require(c.is_number(), r.path() + ".cost: expected numbers");
            }
            // Cost is declared on MW; rescale so it applies to per-unit power.
            g.c2 = cost[0].get<double>() * base.mva * base.mva;
            g.c1 = cost[1].get<double>() * base.mva;
            g.c0 = cost[2].get<double>();
            if (auto p = r.opt_number("pset_mw")) g.p_set = base.power_to_pu(*p);
            if (auto v = r.opt_number("vset_kv")) g.v_set = base.voltage_to_pu(*v);
            gens.push_back(g);
        }
    }

    return Network::from_parts(base, std::move(buses), std::move(lines), std::move(gens),
                               slack_v);
}

Network parse_case(const std::string& text) {
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) continue;
        if (c == '{') return parse_case_json(text);
        break;
    }
    return parse_case_matpower(text);
}

Network load_case(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open case file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

std::string serialize_case(const Network& net) {
    const PerUnitBase& base = net.base();
    ordered_json doc;
    doc["base_mva"] = base.mva;
    doc["base_kv"] = base.kv;
    if (net.slack_voltage() != 1.0) {
        doc["slack_voltage_kv"] = base.voltage_to_kv(net.slack_voltage());
    }

    doc["buses"] = ordered_json::array();
    for (const Bus& b : net.buses()) {
        ordered_json j;
        j["id"] = b.id;
        j["type"] = kind_to_string(b.kind);
        if (b.renewable) j["renewable"] = true;
        j["vmin_kv"] = base.voltage_to_kv(b.v_min);
        j["vmax_kv"] = base.voltage_to_kv(b.v_max);
        if (b.p_load != 0.0) j["load_mw"] = base.power_to_mw(b.p_load);
        if (b.q_load != 0.0) j["load_mvar"] = base.power_to_mw(b.q_load);
        doc["buses"].push_back(j);
    }

    doc["lines"] = ordered_json::array();
    for (const Line& l : net.lines()) {
        const std::complex<double> z = 1.0 / l.admittance;
        ordered_json j;
        j["from"] = l.from;
        j["to"] = l.to;
        j["r_ohm"] = base.impedance_to_ohm(z.real());
        j["x_ohm"] = base.impedance_to_ohm(z.imag());
        if (l.dv_max) j["dv_max_kv"] = base.voltage_to_kv(*l.dv_max);
        if (l.s_max) j["s_max_mva"] = base.power_to_mw(*l.s_max);
        doc["lines"].push_back(j);
    }

    doc["generators"] = ordered_json::array();
    for (const Generator& g : net.generators()) {
        ordered_json j;
        j["bus"] = g.bus;
        j["pmin_mw"] = base.power_to_mw(g.p_min);
        j["pmax_mw"] = base.power_to_mw(g.p_max);
        j["qmin_mvar"] = base.power_to_mw(g.q_min);
        j["qmax_mvar"] = base.power_to_mw(g.q_max);
        j["cost"] = {g.c2 / (base.mva * base.mva), g.c1 / base.mva, g.c0};
        if (g.p_set) j["pset_mw"] = base.power_to_mw(*g.p_set);
        if (g.v_set) j["vset_kv"] = base.voltage_to_kv(*g.v_set);
        doc["generators"].push_back(j);
    }

    return doc.dump(2) + "\n";
}

}  // namespace opf
