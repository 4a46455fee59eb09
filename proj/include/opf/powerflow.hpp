#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

#include "opf/network.hpp"

namespace opf {

/// Per-bus polar voltages. The slack angle is the reference (theta_0 = 0).
struct ComplexVoltageState {
    Eigen::VectorXd magnitude;
    Eigen::VectorXd angle;

    std::complex<double> phasor(int k) const {
        return std::polar(magnitude(k), angle(k));
    }
    int size() const { return static_cast<int>(magnitude.size()); }
};

enum class BusRole { Slack, PV, PQ };

/// What is specified where: slack fixes (|V|, theta), PV buses fix (P, |V|),
/// PQ buses fix (P, Q). `p_gen` carries the dispatched generator power at PV
/// buses; `p_other`/`q_other` carry the remaining net injection
/// (renewable minus load), so reported generator outputs can be recovered
/// from the solved state.
struct InjectionSpec {
    std::vector<BusRole> role;
    Eigen::VectorXd v_set;    // used at slack + PV buses
    Eigen::VectorXd p_gen;    // generator P at PV buses, 0 elsewhere
    Eigen::VectorXd p_other;  // renewable - load, active
    Eigen::VectorXd q_other;  // renewable - load, reactive

    /// Net specified injection P at bus k (valid for PV and PQ rows).
    double p_injection(int k) const { return p_gen(k) + p_other(k); }
    double q_injection(int k) const { return q_other(k); }

    /// Spec from the case's generator setpoints and nominal loads.
    /// Generators on PV buses need a p_set (error otherwise); v_set
    /// defaults to 1. Renewable nominal output is treated as zero here.
    static InjectionSpec from_setpoints(const Network& net);
};

struct LineFlow {
    int line = 0;                       // index into net.lines()
    std::complex<double> from_to;       // S at the `from` end
    std::complex<double> to_from;       // S at the `to` end
};

struct PowerFlowSolution {
    ComplexVoltageState state;
    double slack_p_gen = 0.0;  // P^G at the slack machine (0 if no unit)
    double slack_q_gen = 0.0;
    Eigen::VectorXd p_gen;     // generator P by bus (input at PV, computed at slack)
    Eigen::VectorXd q_gen;     // generator Q by bus (computed at PV + slack)
    std::vector<LineFlow> flows;
    int iterations = 0;
    double residual_norm = 0.0;
};

enum class LimitFamily { PL1, PL2, VL1, VL2, SMax };

struct LimitViolation {
    LimitFamily family;
    int index = 0;        // bus, line or generator index depending on family
    double value = 0.0;
    double bound = 0.0;
    double excess = 0.0;  // how far past the bound
    bool informational = false;  // apparent-power surrogate entries only
};

struct LimitReport {
    std::vector<LimitViolation> entries;

    /// True iff no enforced (non-informational) constraint is violated.
    bool clean() const {
        for (const auto& e : entries) {
            if (!e.informational) return false;
        }
        return true;
    }
    int count(LimitFamily f) const {
        int c = 0;
        for (const auto& e : entries) c += (e.family == f) ? 1 : 0;
        return c;
    }
};

struct PfOptions {
    double tolerance = 1e-8;  // infinity norm of the mismatch, per-unit
    int max_iterations = 30;
};

/// Mismatch of the balance equations at `state` for the given net complex
/// injections: dP_k = Re(s_inj_k) - sum over neighbors of
/// Re{V_k (V_k - V_l)^* Y_kl^*}, and dQ likewise with Im.
void pf_residual(const Network& net, const ComplexVoltageState& state,
                 const Eigen::VectorXcd& s_inj, Eigen::VectorXd& dp, Eigen::VectorXd& dq);

/// Power flowing out of every bus at `state` (the right-hand sums above).
Eigen::VectorXcd bus_injections(const Network& net, const ComplexVoltageState& state);

/// Analytic Jacobian of the mismatch with respect to [theta (non-slack); |V| (PQ)].
/// Row order matches the Newton system in solve_pf; exposed for testing.
Eigen::MatrixXd pf_jacobian(const Network& net, const ComplexVoltageState& state,
                            const InjectionSpec& spec);

/// Polar Newton-Raphson with flat start. Throws PfDivergence when the
/// mismatch cannot be brought under tolerance, NumericalError when the
/// Jacobian goes singular (voltage collapse or bad data).
PowerFlowSolution solve_pf(const Network& net, const InjectionSpec& spec,
                           const PfOptions& opts = {});

class PfDivergence : public NumericalError {
public:
    explicit PfDivergence(const std::string& msg) : NumericalError(msg) {}
};

/// Checks PL.1, PL.2, VL.1, VL.2 at a solved operating point. The
/// apparent-power surrogate is reported informationally when s_max is given.
LimitReport check_limits(const Network& net, const PowerFlowSolution& sol);

/// Linearized active-power model: P = B theta with the slack angle
/// eliminated. Signs follow the exact equations, so a line of admittance
/// g + b*i contributes -b * (theta_k - theta_l) to the injection at k.
class DcModel {
public:
    explicit DcModel(const Network& net);

    /// Reduced (n-1)x(n-1) operator over non-slack angles.
    const Eigen::MatrixXd& reduced_matrix() const { return b_reduced_; }

    /// Injections at every bus for a full angle vector.
    Eigen::VectorXd injections(const Eigen::VectorXd& theta_full) const;

    /// Full angle vector (theta_0 = 0) matching non-slack injections.
    Eigen::VectorXd solve_angles(const Eigen::VectorXd& p_nonslack) const;

    /// Active flow on each line, from -> to.
    Eigen::VectorXd line_flows(const Eigen::VectorXd& theta_full) const;

private:
    const Network* net_;
    Eigen::MatrixXd b_reduced_;
};

inline DcModel dc_linearize(const Network& net) { return DcModel(net); }

}  // namespace opf
