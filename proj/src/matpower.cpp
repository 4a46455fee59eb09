#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <sstream>
#include <vector>

#include "opf/network.hpp"

namespace opf {

namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw ValidationError("matpower: " + msg);
}

std::string strip_comments(const std::string& text) {
    std::string out;
    out.reserve(text.size());
    bool in_comment = false;
    for (char c : text) {
        if (c == '%') in_comment = true;
        if (c == '\n') in_comment = false;
        if (!in_comment) out.push_back(c);
    }
    return out;
}

struct Assignment {
    std::string name;   // e.g. "baseMVA", "bus"
    std::string value;  // raw text between '=' and ';'
};

// Collects every `mpc.<name> = <value>;` assignment in the file.
std::vector<Assignment> collect_assignments(const std::string& text) {
    std::vector<Assignment> out;
    size_t pos = 0;
    while ((pos = text.find("mpc.", pos)) != std::string::npos) {
        size_t name_start = pos + 4;
        size_t name_end = name_start;
        while (name_end < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[name_end])) ||
                text[name_end] == '_')) {
            ++name_end;
        }
        size_t eq = text.find('=', name_end);
        require(eq != std::string::npos, "expected '=' after mpc." + text.substr(name_start, name_end - name_start));
        size_t end;
        size_t scan = eq + 1;
        while (scan < text.size() && std::isspace(static_cast<unsigned char>(text[scan]))) ++scan;
        if (scan < text.size() && text[scan] == '[') {
            end = text.find(']', scan);
            require(end != std::string::npos, "unterminated matrix");
            end = text.find(';', end);
        } else {
            end = text.find(';', eq);
        }
        require(end != std::string::npos, "missing ';' terminator");
        out.push_back({text.substr(name_start, name_end - name_start),
                       text.substr(eq + 1, end - eq - 1)});
        pos = end;
    }
    return out;
}

double parse_scalar(const std::string& raw, const std::string& name) {
    std::istringstream in(raw);
    double v;
    require(static_cast<bool>(in >> v), name + ": expected a number");
    return v;
}

std::vector<std::vector<double>> parse_matrix(const std::string& raw, const std::string& name) {
    const size_t open = raw.find('[');
    const size_t close = raw.rfind(']');
    require(open != std::string::npos && close != std::string::npos && close > open,
            name + ": expected a bracketed matrix");
    std::string body = raw.substr(open + 1, close - open - 1);
    // Rows end at ';' or newline.
    for (char& c : body) {
        if (c == '\n' || c == '\r') c = ';';
        if (c == ',') c = ' ';
    }
    std::vector<std::vector<double>> rows;
    std::istringstream lines(body);
    std::string row_text;
    while (std::getline(lines, row_text, ';')) {
        std::istringstream row(row_text);
        std::vector<double> vals;
        double v;
        while (row >> v) vals.push_back(v);
        std::string leftover;
        if (row.clear(), row >> leftover) {
            require(false, name + ": non-numeric token '" + leftover + "'");
        }
        if (!vals.empty()) rows.push_back(std::move(vals));
    }
    require(!rows.empty(), name + ": empty matrix");
    const size_t width = rows.front().size();
    for (const auto& r : rows) {
        require(r.size() == width, name + ": ragged matrix rows");
    }
    return rows;
}

}  // namespace

Network parse_case_matpower(const std::string& text) {
    const std::string clean = strip_comments(text);
    require(clean.find("mpc.") != std::string::npos, "no mpc.* assignments found");

    std::map<std::string, std::string> fields;
    for (const Assignment& a : collect_assignments(clean)) {
        require(!fields.count(a.name), "duplicate assignment mpc." + a.name);
        fields[a.name] = a.value;
    }
    static const std::vector<std::string> supported = {"version", "baseMVA", "bus", "branch",
                                                       "gen", "gencost"};
    for (const auto& [name, value] : fields) {
        (void)value;
        require(std::find(supported.begin(), supported.end(), name) != supported.end(),
                "unsupported table mpc." + name);
    }
    for (const char* needed : {"baseMVA", "bus", "branch", "gen"}) {
        require(fields.count(needed), "missing required table mpc." + std::string(needed));
    }

    PerUnitBase base;
    base.mva = parse_scalar(fields["baseMVA"], "baseMVA");
    require(base.mva > 0.0, "baseMVA must be positive");

    const auto bus_rows = parse_matrix(fields["bus"], "bus");
    const auto branch_rows = parse_matrix(fields["branch"], "branch");
    const auto gen_rows = parse_matrix(fields["gen"], "gen");

    // bus: BUS_I TYPE PD QD GS BS AREA VM VA BASE_KV ZONE VMAX VMIN
    require(bus_rows.front().size() >= 13, "bus table needs >= 13 columns");

    double base_kv = 0.0;
    std::map<int, int> id_map;  // BUS_I -> model id (slack becomes 0)
    int slack_bus_i = -1;
    for (const auto& r : bus_rows) {
        const int type = static_cast<int>(r[1]);
        if (type == 3) {
            require(slack_bus_i < 0, "more than one reference bus");
            slack_bus_i = static_cast<int>(r[0]);
        }
    }
    require(slack_bus_i >= 0, "no reference (type 3) bus");
    id_map[slack_bus_i] = 0;
    int next_id = 1;
    for (const auto& r : bus_rows) {
        const int bus_i = static_cast<int>(r[0]);
        if (bus_i == slack_bus_i) continue;
        require(!id_map.count(bus_i), "duplicate bus number " + std::to_string(bus_i));
        id_map[bus_i] = next_id++;
    }

    std::vector<Bus> buses(bus_rows.size());
    std::optional<double> slack_v;
    for (const auto& r : bus_rows) {
        const int bus_i = static_cast<int>(r[0]);
        const int type = static_cast<int>(r[1]);
        const std::string at = "bus " + std::to_string(bus_i);
        Bus b;
        b.id = id_map.at(bus_i);
        switch (type) {
            case 1: b.kind = BusKind::Load; break;
            case 2: b.kind = BusKind::Generator; break;
            case 3: b.kind = BusKind::Slack; break;
            default: require(false, at + ": unsupported bus type " + std::to_string(type));
        }
        b.p_load = r[2] / base.mva;
        b.q_load = r[3] / base.mva;
        require(r[4] == 0.0 && r[5] == 0.0, at + ": shunt elements (GS/BS) are not supported");
        if (base_kv == 0.0) {
            base_kv = r[9];
        } else {
            require(r[9] == base_kv, at + ": all buses must share one BASE_KV (no transformers)");
        }
        b.v_max = r[11];
        b.v_min = r[12];
        if (type == 3 && r[7] > 0.0 && r[7] != 1.0) slack_v = r[7];
        buses[b.id] = b;
    }
    require(base_kv > 0.0, "BASE_KV must be positive");
    base.kv = base_kv;

    // branch: F_BUS T_BUS R X B RATEA RATEB RATEC TAP SHIFT STATUS [...]
    require(branch_rows.front().size() >= 11, "branch table needs >= 11 columns");
    std::vector<Line> lines;
    for (const auto& r : branch_rows) {
        const std::string at = "branch " + std::to_string(static_cast<int>(r[0])) + "-" +
                               std::to_string(static_cast<int>(r[1]));
        require(id_map.count(static_cast<int>(r[0])) && id_map.count(static_cast<int>(r[1])),
                at + ": unknown endpoint");
        require(r[4] == 0.0, at + ": line charging (B) is not supported");
        require(r[8] == 0.0 || r[8] == 1.0, at + ": off-nominal tap ratios are not supported");
        require(r[9] == 0.0, at + ": phase shifters are not supported");
        require(r[10] == 1.0, at + ": out-of-service branches are not supported");
        Line l;
        l.from = id_map.at(static_cast<int>(r[0]));
        l.to = id_map.at(static_cast<int>(r[1]));
        const std::complex<double> z(r[2], r[3]);  // already per-unit
        require(std::abs(z) > 0.0, at + ": zero impedance");
        l.admittance = 1.0 / z;
        if (r[5] > 0.0) l.s_max = r[5] / base.mva;  // RATE_A; 0 means unlimited
        lines.push_back(l);
    }

    // gen: BUS PG QG QMAX QMIN VG MBASE STATUS PMAX PMIN [...]
    require(gen_rows.front().size() >= 10, "gen table needs >= 10 columns");
    std::vector<Generator> gens;
    for (const auto& r : gen_rows) {
        const std::string at = "generator at bus " + std::to_string(static_cast<int>(r[0]));
        require(id_map.count(static_cast<int>(r[0])), at + ": unknown bus");
        require(r[7] == 1.0, at + ": out-of-service generators are not supported");
        Generator g;
        g.bus = id_map.at(static_cast<int>(r[0]));
        g.p_set = r[1] / base.mva;
        g.v_set = r[5];
        g.q_max = r[3] / base.mva;
        g.q_min = r[4] / base.mva;
        g.p_max = r[8] / base.mva;
        g.p_min = r[9] / base.mva;
        gens.push_back(g);
    }

    // gencost: MODEL STARTUP SHUTDOWN NCOST c_{n-1} ... c_0  (polynomial, degree <= 2)
    if (fields.count("gencost")) {
        const auto cost_rows = parse_matrix(fields["gencost"], "gencost");
        require(cost_rows.size() == gens.size(),
                "gencost must have one row per generator");
        for (size_t i = 0; i < cost_rows.size(); ++i) {
            const auto& r = cost_rows[i];
            const std::string at = "gencost row " + std::to_string(i + 1);
            require(r.size() >= 4, at + ": needs >= 4 columns");
            require(static_cast<int>(r[0]) == 2,
                    at + ": only polynomial cost model 2 is supported");
            require(r[1] == 0.0 && r[2] == 0.0,
                    at + ": startup/shutdown costs are not supported");
            const int ncost = static_cast<int>(r[3]);
            require(ncost >= 1 && ncost <= 3, at + ": polynomial degree must be <= 2");
            require(static_cast<int>(r.size()) == 4 + ncost, at + ": coefficient count mismatch");
            double c2 = 0.0, c1 = 0.0, c0 = 0.0;
            if (ncost == 3) {
                c2 = r[4];
                c1 = r[5];
                c0 = r[6];
            } else if (ncost == 2) {
                c1 = r[4];
                c0 = r[5];
            } else {
                c0 = r[4];
            }
            // Declared on MW; rescale to per-unit power.
            gens[i].c2 = c2 * base.mva * base.mva;
            gens[i].c1 = c1 * base.mva;
            gens[i].c0 = c0;
        }
    }

    return Network::from_parts(base, std::move(buses), std::move(lines), std::move(gens),
                               slack_v);
}

}  // namespace opf
