#include "opf/relaxation.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace opf {

using conic::LinExpr;

Eigen::MatrixXcd HermitianLift::control_part() const {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Zero(w.rows(), w.cols());
    for (int k : control_buses) u(k, k) = w(k, k).real();
    return u;
}

Eigen::MatrixXcd HermitianLift::state_part() const { return w - control_part(); }

RankDiagnostic rank_check(const Eigen::MatrixXcd& w, double tol) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w, Eigen::EigenvaluesOnly);
    RankDiagnostic d;
    d.eigenvalues = es.eigenvalues().reverse();
    if (w.rows() == 1) {
        d.ratio = 0.0;
        d.rank_one = d.eigenvalues(0) > 0.0;
        return d;
    }
    const double l1 = d.eigenvalues(0);
    const double l2 = std::abs(d.eigenvalues(1));
    d.ratio = (l1 > 0.0) ? l2 / l1 : 1.0;
    d.rank_one = (l1 > 0.0) && d.ratio <= tol;
    return d;
}

ComplexVoltageState recover_voltages(const Eigen::MatrixXcd& w, const Network& net,
                                     double rank_tol, double* recon_error) {
    if (w.rows() != net.num_buses()) {
        throw ValidationError("recover_voltages: lift order does not match the case");
    }
    const RankDiagnostic diag = rank_check(w, rank_tol);
    if (!diag.rank_one) {
        throw RankDeficient("relaxation is not rank-one (lambda_2/lambda_1 = " +
                            std::to_string(diag.ratio) + "); voltage recovery declined");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(w);
    const int n = static_cast<int>(w.rows());
    const Eigen::VectorXcd v1 = es.eigenvectors().col(n - 1);
    if (std::abs(v1(0)) < 1e-9) {
        throw RankDeficient("dominant eigenvector vanishes at the slack bus");
    }
    ComplexVoltageState st;
    st.magnitude.resize(n);
    st.angle.resize(n);
    for (int k = 0; k < n; ++k) {
        st.magnitude(k) = std::sqrt(std::max(0.0, w(k, k).real()));
        st.angle(k) = std::arg(v1(k) * std::conj(v1(0)));
    }
    if (recon_error) {
        const double l1 = es.eigenvalues()(n - 1);
        const Eigen::MatrixXcd rank1 = l1 * v1 * v1.adjoint();
        const double denom = std::max(1e-300, w.norm());
        *recon_error = (w - rank1).norm() / denom;
    }
    return st;
}

NominalAssembly assemble_nominal(const Network& net) {
    const int n = net.num_buses();
    const int ng = static_cast<int>(net.generators().size());
    if (ng == 0) throw ValidationError("nominal opf needs at least one generator");

    conic::ProgramBuilder pb;
    NominalAssembly out;
    out.p_var.resize(ng);
    out.q_var.resize(ng);
    out.t_var.resize(ng);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators()[g];
        out.p_var[g] = pb.add_free("p[" + std::to_string(g) + "]");
        out.q_var[g] = pb.add_free("q[" + std::to_string(g) + "]");
        out.t_var[g] = pb.add_free("t[" + std::to_string(g) + "]");
        pb.add_box(LinExpr(out.p_var[g], 1.0), gen.p_min, gen.p_max, "pl1");
        pb.add_box(LinExpr(out.q_var[g], 1.0), gen.q_min, gen.q_max, "pl2");
        pb.add_quadratic_epigraph(out.t_var[g], out.p_var[g], gen.c2, gen.c1, gen.c0,
                                  "cost-epi");
        pb.add_cost(out.t_var[g], 1.0);
    }

    out.w_ref = pb.add_hermitian("W", n);
    const conic::HermitianRef& w = out.w_ref;

    // fixed slack voltage
    {
        auto [v, sc] = w.re_entry(0, 0);
        const double v0 = net.slack_voltage();
        pb.add_eq(LinExpr(v, sc), v0 * v0, "slack-voltage");
    }

    // balance rows per bus, exact image of the polar equations under W = VV*
    for (int k = 0; k < n; ++k) {
        const Bus& bus = net.buses()[k];
        LinExpr pe, qe;
        if (auto g = net.generator_index(k)) {
            pe.add(out.p_var[*g], 1.0);
            qe.add(out.q_var[*g], 1.0);
        }
        for (int l : net.neighbors(k)) {
            const std::complex<double> y = net.admittance_of(k, l);
            const double gkl = y.real();
            const double bkl = y.imag();
            auto [dv, dsc] = w.re_entry(k, k);
            // P: - sum G (W_kk - Re W_kl) + B Im W_kl ... moved to the left side
            pe.add(dv, -gkl * dsc);
            qe.add(dv, bkl * dsc);
            auto [rv, rsc] = w.re_entry(k, l);
            pe.add(rv, gkl * rsc);
            qe.add(rv, -bkl * rsc);
            auto [iv, isc] = w.im_entry(k, l);
            pe.add(iv, bkl * isc);
            qe.add(iv, gkl * isc);
        }
        pb.add_eq(pe, bus.p_load, "balance-p");
        pb.add_eq(qe, bus.q_load, "balance-q");
    }

    // voltage magnitude bounds on the diagonal
    for (int k = 0; k < n; ++k) {
        const Bus& bus = net.buses()[k];
        auto [dv, dsc] = w.re_entry(k, k);
        pb.add_box(LinExpr(dv, dsc), bus.v_min * bus.v_min, bus.v_max * bus.v_max, "vl1");
    }

    // line rows: W_ll + W_mm - W_lm - W_ml <= dv_max^2
    for (const Line& line : net.lines()) {
        if (!line.dv_max) continue;
        LinExpr e;
        auto [lv, lsc] = w.re_entry(line.from, line.from);
        auto [mv, msc] = w.re_entry(line.to, line.to);
        auto [rv, rsc] = w.re_entry(line.from, line.to);
        e.add(lv, lsc);
        e.add(mv, msc);
        e.add(rv, -2.0 * rsc);
        pb.add_le(e, (*line.dv_max) * (*line.dv_max), "vl2");
    }

    out.program = pb.build();
    return out;
}

RelaxedOpfSolution solve_nominal(const Network& net, const conic::SolverOptions& opts,
                                 double rank_tol) {
    NominalAssembly asmb = assemble_nominal(net);
    const conic::ConeSolution sol = conic::solve(asmb.program, opts);
    if (sol.status == conic::SolveStatus::PrimalInfeasible) {
        int worst = 0;
        for (int i = 1; i < sol.y.size(); ++i) {
            if (std::abs(sol.y(i)) > std::abs(sol.y(worst))) worst = i;
        }
        std::string hint = asmb.program.row_labels[worst];
        if (auto cut = hint.find(':'); cut != std::string::npos) hint = hint.substr(0, cut);
        throw InfeasibleError("nominal opf infeasible (blocked by " + hint + " constraints)",
                              hint);
    }
    if (sol.status != conic::SolveStatus::Optimal) {
        throw NumericalError("nominal opf solve ended with status " +
                             std::string(conic::to_string(sol.status)));
    }

    const int ng = static_cast<int>(net.generators().size());
    RelaxedOpfSolution out;
    out.conic = sol;
    out.objective = sol.primal_obj;
    out.p_gen.resize(ng);
    out.q_gen.resize(ng);
    for (int g = 0; g < ng; ++g) {
        out.p_gen(g) = sol.x(asmb.p_var[g]);
        out.q_gen(g) = sol.x(asmb.q_var[g]);
    }
    out.lift.w = conic::extract_hermitian(sol.x, asmb.w_ref);
    out.lift.control_buses = bus_partition(net).generator;
    out.rank = rank_check(out.lift.w, rank_tol);
    if (out.rank.rank_one) {
        out.recovered = recover_voltages(out.lift.w, net, rank_tol, &out.recovery_error);
    }
    return out;
}

}  // namespace opf
