#include "opf/powerflow.hpp"

#include <Eigen/LU>
#include <cmath>

namespace opf {

InjectionSpec InjectionSpec::from_setpoints(const Network& net) {
    const int n = net.num_buses();
    InjectionSpec spec;
    spec.role.resize(n, BusRole::PQ);
    spec.v_set = Eigen::VectorXd::Ones(n);
    spec.p_gen = Eigen::VectorXd::Zero(n);
    spec.p_other = Eigen::VectorXd::Zero(n);
    spec.q_other = Eigen::VectorXd::Zero(n);

    for (const Bus& b : net.buses()) {
        spec.p_other(b.id) = -b.p_load;
        spec.q_other(b.id) = -b.q_load;
        if (b.kind == BusKind::Slack) {
            spec.role[b.id] = BusRole::Slack;
            spec.v_set(b.id) = net.slack_voltage();
        } else if (b.kind == BusKind::Generator) {
            spec.role[b.id] = BusRole::PV;
            const Generator* g = net.generator_at(b.id);
            if (!g->p_set) {
                throw ValidationError("generator at bus " + std::to_string(b.id) +
                                      " has no pset_mw; a plain power-flow run needs one");
            }
            spec.p_gen(b.id) = *g->p_set;
            spec.v_set(b.id) = g->v_set.value_or(1.0);
        }
    }
    return spec;
}

Eigen::VectorXcd bus_injections(const Network& net, const ComplexVoltageState& state) {
    const int n = net.num_buses();
    if (state.size() != n) throw ValidationError("pf: state dimension mismatch");
    Eigen::VectorXcd out = Eigen::VectorXcd::Zero(n);
    for (int k = 0; k < n; ++k) {
        const std::complex<double> vk = state.phasor(k);
        std::complex<double> acc = 0.0;
        for (int l : net.neighbors(k)) {
            const std::complex<double> y = net.admittance_of(k, l);
            acc += vk * std::conj(vk - state.phasor(l)) * std::conj(y);
        }
        out(k) = acc;
    }
    return out;
}

void pf_residual(const Network& net, const ComplexVoltageState& state,
                 const Eigen::VectorXcd& s_inj, Eigen::VectorXd& dp, Eigen::VectorXd& dq) {
    const int n = net.num_buses();
    if (s_inj.size() != n) throw ValidationError("pf_residual: injection dimension mismatch");
    const Eigen::VectorXcd calc = bus_injections(net, state);
    dp = s_inj.real() - calc.real();
    dq = s_inj.imag() - calc.imag();
}

namespace {

struct Unknowns {
    std::vector<int> theta_bus;  // buses with a free angle (all but slack)
    std::vector<int> vmag_bus;   // buses with a free magnitude (PQ)
    std::vector<int> p_row_bus;  // buses with a P equation (all but slack)
    std::vector<int> q_row_bus;  // buses with a Q equation (PQ)
};

Unknowns layout(const InjectionSpec& spec) {
    Unknowns u;
    for (int k = 0; k < static_cast<int>(spec.role.size()); ++k) {
        if (spec.role[k] != BusRole::Slack) {
            u.theta_bus.push_back(k);
            u.p_row_bus.push_back(k);
        }
        if (spec.role[k] == BusRole::PQ) {
            u.vmag_bus.push_back(k);
            u.q_row_bus.push_back(k);
        }
    }
    return u;
}

}  // namespace

Eigen::MatrixXd pf_jacobian(const Network& net, const ComplexVoltageState& state,
                            const InjectionSpec& spec) {
    const Unknowns u = layout(spec);
    const int n = net.num_buses();
    const int nt = static_cast<int>(u.theta_bus.size());
    const int nv = static_cast<int>(u.vmag_bus.size());

    std::vector<int> theta_col(n, -1), vmag_col(n, -1);
    for (int i = 0; i < nt; ++i) theta_col[u.theta_bus[i]] = i;
    for (int i = 0; i < nv; ++i) vmag_col[u.vmag_bus[i]] = nt + i;

    // Derivatives of the calculated injections; the mismatch is spec - calc,
    // so the Newton system uses J = d(calc)/du and steps u += J^{-1} * mismatch.
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(nt + nv, nt + nv);

    auto fill_row = [&](int row, int k, bool is_p) {
        const double vk = state.magnitude(k);
        double d_tk = 0.0;  // d calc / d theta_k
        double d_vk = 0.0;  // d calc / d |V_k|
        for (int l : net.neighbors(k)) {
            const std::complex<double> y = net.admittance_of(k, l);
            const double g = y.real();
            const double b = y.imag();
            const double vl = state.magnitude(l);
            const double t = state.angle(k) - state.angle(l);
            const double ct = std::cos(t);
            const double st = std::sin(t);
            double d_tl, d_vl;
            if (is_p) {
                // P term: g * (vk^2 - vk*vl*ct) - b * vk*vl*st
                d_tk += g * vk * vl * st - b * vk * vl * ct;
                d_tl = -g * vk * vl * st + b * vk * vl * ct;
                d_vk += g * (2.0 * vk - vl * ct) - b * vl * st;
                d_vl = -g * vk * ct - b * vk * st;
            } else {
                // Q term: -b * (vk^2 - vk*vl*ct) - g * vk*vl*st
                d_tk += -b * vk * vl * st - g * vk * vl * ct;
                d_tl = b * vk * vl * st + g * vk * vl * ct;
                d_vk += -b * (2.0 * vk - vl * ct) - g * vl * st;
                d_vl = b * vk * ct - g * vk * st;
            }
            if (theta_col[l] >= 0) jac(row, theta_col[l]) += d_tl;
            if (vmag_col[l] >= 0) jac(row, vmag_col[l]) += d_vl;
        }
        if (theta_col[k] >= 0) jac(row, theta_col[k]) += d_tk;
        if (vmag_col[k] >= 0) jac(row, vmag_col[k]) += d_vk;
    };

    int row = 0;
    for (int k : u.p_row_bus) fill_row(row++, k, true);
    for (int k : u.q_row_bus) fill_row(row++, k, false);
    return jac;
}

PowerFlowSolution solve_pf(const Network& net, const InjectionSpec& spec, const PfOptions& opts) {
    const int n = net.num_buses();
    if (static_cast<int>(spec.role.size()) != n) {
        throw ValidationError("solve_pf: spec dimension mismatch");
    }
    if (spec.role[0] != BusRole::Slack) throw ValidationError("solve_pf: bus 0 must be slack");

    const Unknowns u = layout(spec);
    const int nt = static_cast<int>(u.theta_bus.size());
    const int nv = static_cast<int>(u.vmag_bus.size());
    const int m = nt + nv;

    ComplexVoltageState state;
    state.angle = Eigen::VectorXd::Zero(n);
    state.magnitude = Eigen::VectorXd::Ones(n);
    for (int k = 0; k < n; ++k) {
        if (spec.role[k] != BusRole::PQ) state.magnitude(k) = spec.v_set(k);
    }

    auto mismatch = [&](const ComplexVoltageState& s) {
        const Eigen::VectorXcd calc = bus_injections(net, s);
        Eigen::VectorXd mis(m);
        int r = 0;
        for (int k : u.p_row_bus) mis(r++) = spec.p_injection(k) - calc(k).real();
        for (int k : u.q_row_bus) mis(r++) = spec.q_injection(k) - calc(k).imag();
        return mis;
    };

    int iters = 0;
    Eigen::VectorXd mis = mismatch(state);
    while (mis.lpNorm<Eigen::Infinity>() > opts.tolerance) {
        if (iters >= opts.max_iterations) {
            throw PfDivergence("power flow did not converge in " +
                               std::to_string(opts.max_iterations) + " iterations (residual " +
                               std::to_string(mis.lpNorm<Eigen::Infinity>()) + ")");
        }
        const Eigen::MatrixXd jac = pf_jacobian(net, state, spec);
        Eigen::FullPivLU<Eigen::MatrixXd> lu(jac);
        if (!lu.isInvertible()) {
            throw NumericalError("power flow Jacobian is singular");
        }
        const Eigen::VectorXd step = lu.solve(mis);
        for (int i = 0; i < nt; ++i) state.angle(u.theta_bus[i]) += step(i);
        for (int i = 0; i < nv; ++i) state.magnitude(u.vmag_bus[i]) += step(nt + i);
        ++iters;
        if (!state.magnitude.allFinite() || !state.angle.allFinite() ||
            state.magnitude.minCoeff() <= 0.0) {
            throw PfDivergence("power flow iteration left the physical region");
        }
        mis = mismatch(state);
        if (!mis.allFinite()) throw PfDivergence("power flow mismatch overflowed");
    }

    PowerFlowSolution sol;
    sol.state = state;
    sol.iterations = iters;
    sol.residual_norm = mis.lpNorm<Eigen::Infinity>();
    const Eigen::VectorXcd calc = bus_injections(net, state);
    sol.p_gen = Eigen::VectorXd::Zero(n);
    sol.q_gen = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < n; ++k) {
        if (spec.role[k] == BusRole::PV) {
            sol.p_gen(k) = spec.p_gen(k);
            sol.q_gen(k) = calc(k).imag() - spec.q_other(k);
        }
    }
    // The slack machine covers whatever the rest of the bus cannot.
    sol.slack_p_gen = calc(0).real() - spec.p_other(0);
    sol.slack_q_gen = calc(0).imag() - spec.q_other(0);
    sol.p_gen(0) = sol.slack_p_gen;
    sol.q_gen(0) = sol.slack_q_gen;

    for (int i = 0; i < net.num_lines(); ++i) {
        const Line& l = net.lines()[i];
        const std::complex<double> vf = state.phasor(l.from);
        const std::complex<double> vt = state.phasor(l.to);
        LineFlow f;
        f.line = i;
        f.from_to = vf * std::conj(vf - vt) * std::conj(l.admittance);
        f.to_from = vt * std::conj(vt - vf) * std::conj(l.admittance);
        sol.flows.push_back(f);
    }
    return sol;
}

LimitReport check_limits(const Network& net, const PowerFlowSolution& sol) {
    LimitReport report;
    auto add = [&](LimitFamily fam, int idx, double value, double bound, double excess,
                   bool info = false) {
        report.entries.push_back({fam, idx, value, bound, excess, info});
    };

    for (int g = 0; g < static_cast<int>(net.generators().size()); ++g) {
        const Generator& gen = net.generators()[g];
        const double p = sol.p_gen(gen.bus);
        const double q = sol.q_gen(gen.bus);
        if (p < gen.p_min) add(LimitFamily::PL1, g, p, gen.p_min, gen.p_min - p);
        if (p > gen.p_max) add(LimitFamily::PL1, g, p, gen.p_max, p - gen.p_max);
        if (q < gen.q_min) add(LimitFamily::PL2, g, q, gen.q_min, gen.q_min - q);
        if (q > gen.q_max) add(LimitFamily::PL2, g, q, gen.q_max, q - gen.q_max);
    }

    for (const Bus& b : net.buses()) {
        const double v = sol.state.magnitude(b.id);
        if (v < b.v_min) add(LimitFamily::VL1, b.id, v, b.v_min, b.v_min - v);
        if (v > b.v_max) add(LimitFamily::VL1, b.id, v, b.v_max, v - b.v_max);
    }

    for (int i = 0; i < net.num_lines(); ++i) {
        const Line& l = net.lines()[i];
        const double diff = std::abs(sol.state.phasor(l.from) - sol.state.phasor(l.to));
        if (l.dv_max && diff > *l.dv_max) {
            add(LimitFamily::VL2, i, diff, *l.dv_max, diff - *l.dv_max);
        }
        if (l.s_max) {
            const double s = std::max(std::abs(sol.flows[i].from_to),
                                      std::abs(sol.flows[i].to_from));
            if (s > *l.s_max) add(LimitFamily::SMax, i, s, *l.s_max, s - *l.s_max, true);
        }
    }
    return report;
}

DcModel::DcModel(const Network& net) : net_(&net) {
    const int n = net.num_buses();
    b_reduced_ = Eigen::MatrixXd::Zero(n - 1, n - 1);
    for (const Line& l : net.lines()) {
        const double w = -l.admittance.imag();  // -B of the series admittance
        const int k = l.from;
        const int m = l.to;
        if (k > 0) b_reduced_(k - 1, k - 1) += w;
        if (m > 0) b_reduced_(m - 1, m - 1) += w;
        if (k > 0 && m > 0) {
            b_reduced_(k - 1, m - 1) -= w;
            b_reduced_(m - 1, k - 1) -= w;
        }
    }
}

Eigen::VectorXd DcModel::injections(const Eigen::VectorXd& theta_full) const {
    const int n = net_->num_buses();
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
    for (const Line& l : net_->lines()) {
        const double w = -l.admittance.imag();
        const double f = w * (theta_full(l.from) - theta_full(l.to));
        p(l.from) += f;
        p(l.to) -= f;
    }
    return p;
}

Eigen::VectorXd DcModel::solve_angles(const Eigen::VectorXd& p_nonslack) const {
    const int n = net_->num_buses();
    if (p_nonslack.size() != n - 1) throw ValidationError("dc solve: dimension mismatch");
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(n);
    if (n > 1) {
        theta.tail(n - 1) = Eigen::FullPivLU<Eigen::MatrixXd>(b_reduced_).solve(p_nonslack);
    }
    return theta;
}

Eigen::VectorXd DcModel::line_flows(const Eigen::VectorXd& theta_full) const {
    Eigen::VectorXd f(net_->num_lines());
    for (int i = 0; i < net_->num_lines(); ++i) {
        const Line& l = net_->lines()[i];
        f(i) = -l.admittance.imag() * (theta_full(l.from) - theta_full(l.to));
    }
    return f;
}

}  // namespace opf
