#pragma once

#include <complex>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "opf/errors.hpp"

namespace opf {

enum class BusKind { Slack, Generator, Load };

/// One bus. Electrical quantities are per-unit on the network base.
struct Bus {
    int id = 0;
    BusKind kind = BusKind::Load;
    bool renewable = false;  // a renewable source is attached here
    double v_min = 0.0;      // |V| lower bound
    double v_max = 0.0;      // |V| upper bound
    double p_load = 0.0;     // nominal active load P^L0
    double q_load = 0.0;     // nominal reactive load Q^L0
};

/// One line, stored by its series admittance y = g + b*i (per-unit).
/// Case files specify the series impedance; the parser inverts it.
struct Line {
    int from = 0;
    int to = 0;
    std::complex<double> admittance;
    std::optional<double> dv_max;  // |V_from - V_to| limit
    std::optional<double> s_max;   // apparent-power limit (reporting surrogate)
};

/// One generating unit. Cost is c2*P^2 + c1*P + c0 with P per-unit,
/// cost in currency per unit time.
struct Generator {
    int bus = 0;
    double p_min = 0.0;
    double p_max = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double c2 = 0.0;
    double c1 = 0.0;
    double c0 = 0.0;
    std::optional<double> p_set;  // dispatch setpoint for plain power-flow runs
    std::optional<double> v_set;  // |V| setpoint for plain power-flow runs

    double cost(double p) const { return (c2 * p + c1) * p + c0; }
};

/// Per-unit base of a case. Conversions are plain ratios so that
/// to_physical(to_per_unit(x)) == x up to rounding.
struct PerUnitBase {
    double mva = 100.0;
    double kv = 1.0;

    double z_base() const { return kv * kv / mva; }
    double power_to_pu(double mw) const { return mw / mva; }
    double power_to_mw(double pu) const { return pu * mva; }
    double voltage_to_pu(double v_kv) const { return v_kv / kv; }
    double voltage_to_kv(double pu) const { return pu * kv; }
    double impedance_to_pu(double ohm) const { return ohm / z_base(); }
    double impedance_to_ohm(double pu) const { return pu * z_base(); }
};

/// Disjoint cover of the bus ids: {slack} + generator buses + renewable-only
/// buses + plain load buses. A bus hosting both a generator and loads counts
/// as a generator bus.
struct BusPartition {
    int slack = 0;
    std::vector<int> generator;  // set G
    std::vector<int> renewable;  // set R (renewable flag, not slack/generator)
    std::vector<int> load;       // set D
};

/// Immutable, validated network model: the single source of topology truth.
/// All quantities per-unit. Safe to share across threads once constructed.
class Network {
public:
    /// Validates every invariant (unique slack at id 0, connectivity,
    /// bound ordering, one generator per bus, ...) and builds the adjacency
    /// map. Throws ValidationError on the first violation found.
    static Network from_parts(PerUnitBase base, std::vector<Bus> buses, std::vector<Line> lines,
                              std::vector<Generator> generators,
                              std::optional<double> slack_v = std::nullopt);

    int num_buses() const { return static_cast<int>(buses_.size()); }
    int num_lines() const { return static_cast<int>(lines_.size()); }
    const std::vector<Bus>& buses() const { return buses_; }
    const std::vector<Line>& lines() const { return lines_; }
    const std::vector<Generator>& generators() const { return generators_; }
    const PerUnitBase& base() const { return base_; }

    /// Fixed slack voltage magnitude (1.0 unless the case overrides it).
    double slack_voltage() const { return slack_v_; }

    /// Neighbors N_k; symmetric by construction.
    const std::vector<int>& neighbors(int bus) const;

    /// Y_{lm} of the line joining l and m; symmetric in its arguments.
    /// Throws ValidationError if (l, m) is not a line.
    std::complex<double> admittance_of(int l, int m) const;

    /// Index into lines() for the pair, or nullopt.
    std::optional<int> line_index(int l, int m) const;

    /// The generator on `bus`, or nullptr. At most one exists.
    const Generator* generator_at(int bus) const;

    /// Index into generators() for the unit on `bus`, or nullopt.
    std::optional<int> generator_index(int bus) const;

private:
    Network() = default;

    PerUnitBase base_;
    double slack_v_ = 1.0;
    std::vector<Bus> buses_;
    std::vector<Line> lines_;
    std::vector<Generator> generators_;
    std::vector<std::vector<int>> adjacency_;
    std::vector<int> gen_at_bus_;  // -1 when none
};

BusPartition bus_partition(const Network& net);

/// Parse a case document. JSON documents (leading '{') follow the schema in
/// docs/case-format.md; anything else is tried as a MATPOWER-style .m subset.
/// All physical quantities are converted to per-unit on the declared base.
Network parse_case(const std::string& text);
Network parse_case_json(const std::string& text);
Network parse_case_matpower(const std::string& text);

/// Read + parse, mapping filesystem problems to IoError.
Network load_case(const std::filesystem::path& path);

/// Emit the JSON case document (physical units) for a parsed network.
/// parse_case(serialize_case(net)) reproduces the network field-by-field.
std::string serialize_case(const Network& net);

}  // namespace opf
