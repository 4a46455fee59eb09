#include "opf/dispatch.hpp"

#include <algorithm>
#include <cmath>

namespace opf {

namespace {

double response(const Generator& g, double lam) {
    if (g.c2 > 0.0) {
        return std::clamp((lam - g.c1) / (2.0 * g.c2), g.p_min, g.p_max);
    }
    if (lam < g.c1) return g.p_min;
    if (lam > g.c1) return g.p_max;
    return g.p_min;  // plateau; surplus assigned after bisection
}

}  // namespace

DispatchResult solve_ed(const std::vector<Generator>& gens, double demand) {
    if (gens.empty()) throw ValidationError("economic dispatch needs at least one generator");
    double pmin = 0.0, pmax = 0.0;
    for (const Generator& g : gens) {
        pmin += g.p_min;
        pmax += g.p_max;
    }
    if (demand < pmin - 1e-12 || demand > pmax + 1e-12) {
        throw InfeasibleError("demand " + std::to_string(demand) +
                                  " outside aggregate capacity [" + std::to_string(pmin) + ", " +
                                  std::to_string(pmax) + "]",
                              "capacity");
    }

    double lo = gens[0].c1 + 2.0 * gens[0].c2 * gens[0].p_min;
    double hi = lo;
    for (const Generator& g : gens) {
        lo = std::min(lo, g.c1 + 2.0 * g.c2 * g.p_min);
        hi = std::max(hi, g.c1 + 2.0 * g.c2 * g.p_max);
    }
    lo -= 1.0;
    hi += 1.0;
    auto total = [&](double lam) {
        double t = 0.0;
        for (const Generator& g : gens) t += response(g, lam);
        return t;
    };
    while (hi - lo > 1e-10 * std::max(1.0, std::abs(hi))) {
        const double mid = 0.5 * (lo + hi);
        if (total(mid) < demand) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    double lam = 0.5 * (lo + hi);

    const int ng = static_cast<int>(gens.size());
    Eigen::VectorXd p(ng);
    const double band = 1e-7 * std::max(1.0, std::abs(lam));

    // exact resolution on the active set of quadratic units
    double fixed_sum = 0.0;
    double inv_slope = 0.0;
    double c1_over = 0.0;
    std::vector<int> interior;
    for (int k = 0; k < ng; ++k) {
        const Generator& g = gens[k];
        p(k) = response(g, lam);
        const bool clamped = (p(k) <= g.p_min + 0.0) || (p(k) >= g.p_max - 0.0);
        if (g.c2 > 0.0 && !clamped) {
            interior.push_back(k);
            inv_slope += 1.0 / (2.0 * g.c2);
            c1_over += g.c1 / (2.0 * g.c2);
        } else {
            fixed_sum += p(k);
        }
    }
    if (!interior.empty() && inv_slope > 0.0) {
        lam = (demand - fixed_sum + c1_over) / inv_slope;
        for (int k : interior) {
            p(k) = std::clamp((lam - gens[k].c1) / (2.0 * gens[k].c2), gens[k].p_min,
                              gens[k].p_max);
        }
    }

    // residual goes to linear units sitting on the marginal plateau
    double residual = demand - p.sum();
    if (std::abs(residual) > 1e-12) {
        for (int k = 0; k < ng && std::abs(residual) > 1e-12; ++k) {
            const Generator& g = gens[k];
            if (g.c2 > 0.0 || std::abs(g.c1 - lam) > band) continue;
            const double headroom = (residual > 0.0) ? g.p_max - p(k) : g.p_min - p(k);
            const double take = std::clamp(residual, std::min(0.0, headroom),
                                           std::max(0.0, headroom));
            p(k) += take;
            residual -= take;
        }
    }
    // final polish on any marginal quadratic unit
    if (std::abs(residual) > 1e-12) {
        for (int k = 0; k < ng && std::abs(residual) > 1e-12; ++k) {
            const Generator& g = gens[k];
            const double room = std::clamp(p(k) + residual, g.p_min, g.p_max) - p(k);
            p(k) += room;
            residual -= room;
        }
    }
    if (std::abs(residual) > 1e-9) {
        throw NumericalError("economic dispatch balance residual " + std::to_string(residual));
    }

    DispatchResult res;
    res.p_gen = p;
    res.price = lam;
    res.total_cost = 0.0;
    for (int k = 0; k < ng; ++k) res.total_cost += gens[k].cost(p(k));
    return res;
}

DcOpfResult solve_dc_opf(const Network& net, const Eigen::VectorXd& p_load,
                         const conic::SolverOptions& opts) {
    using conic::LinExpr;
    const int n = net.num_buses();
    if (p_load.size() != n) throw ValidationError("dc-opf: load vector dimension mismatch");
    const int ng = static_cast<int>(net.generators().size());
    if (ng == 0) throw ValidationError("dc-opf needs at least one generator");

    conic::ProgramBuilder pb;
    std::vector<int> p_var(ng), t_var(ng);
    for (int g = 0; g < ng; ++g) {
        const Generator& gen = net.generators()[g];
        p_var[g] = pb.add_free("p[" + std::to_string(g) + "]");
        t_var[g] = pb.add_free("t[" + std::to_string(g) + "]");
        pb.add_box(LinExpr(p_var[g], 1.0), gen.p_min, gen.p_max, "pl1");
        pb.add_quadratic_epigraph(t_var[g], p_var[g], gen.c2, gen.c1, gen.c0, "cost-epi");
        pb.add_cost(t_var[g], 1.0);
    }
    std::vector<int> th_var(n, -1);
    for (int k = 1; k < n; ++k) th_var[k] = pb.add_free("theta[" + std::to_string(k) + "]");

    // balance per bus: p_gen(k) - sum_l (-B_kl)(theta_k - theta_l) = load_k
    std::vector<int> balance_row(n);
    for (int k = 0; k < n; ++k) {
        LinExpr e;
        if (auto g = net.generator_index(k)) e.add(p_var[*g], 1.0);
        for (int l : net.neighbors(k)) {
            const double w = -net.admittance_of(k, l).imag();
            if (th_var[k] >= 0) e.add(th_var[k], -w);
            if (th_var[l] >= 0) e.add(th_var[l], w);
        }
        balance_row[k] = pb.add_eq(e, p_load(k), "balance");
    }

    // line limits: |theta_l - theta_m| within the angle surrogate
    for (int i = 0; i < net.num_lines(); ++i) {
        const Line& l = net.lines()[i];
        double bound;
        if (l.dv_max) {
            bound = *l.dv_max;
        } else if (l.s_max) {
            bound = *l.s_max / std::abs(l.admittance.imag());
        } else {
            continue;
        }
        LinExpr diff;
        if (th_var[l.from] >= 0) diff.add(th_var[l.from], 1.0);
        if (th_var[l.to] >= 0) diff.add(th_var[l.to], -1.0);
        pb.add_box(diff, -bound, bound, "vl2[" + std::to_string(i) + "]");
    }

    const conic::ConeProgram prog = pb.build();
    // linear-quadratic program; tight tolerances keep the 1e-9 balance contract
    conic::SolverOptions run = opts;
    run.feas_tol = std::min(opts.feas_tol, 1e-11);
    run.gap_tol = std::min(opts.gap_tol, 1e-11);
    const conic::ConeSolution sol = conic::solve(prog, run);
    if (sol.status == conic::SolveStatus::PrimalInfeasible) {
        // the certificate's heaviest rows name the blocking family
        int worst = 0;
        for (int i = 1; i < sol.y.size(); ++i) {
            if (std::abs(sol.y(i)) > std::abs(sol.y(worst))) worst = i;
        }
        std::string hint = prog.row_labels.empty() ? "" : prog.row_labels[worst];
        if (auto cut = hint.find(':'); cut != std::string::npos) hint = hint.substr(0, cut);
        if (auto cut = hint.find('['); cut != std::string::npos) hint = hint.substr(0, cut);
        throw InfeasibleError("dc-opf infeasible (blocked by " + hint + " constraints)", hint);
    }
    if (sol.status != conic::SolveStatus::Optimal) {
        throw NumericalError("dc-opf solve ended with status " +
                             std::string(conic::to_string(sol.status)));
    }

    DcOpfResult out;
    out.conic = sol;
    out.dispatch.p_gen.resize(ng);
    for (int g = 0; g < ng; ++g) out.dispatch.p_gen(g) = sol.x(p_var[g]);
    out.dispatch.total_cost = sol.primal_obj;
    out.angles = Eigen::VectorXd::Zero(n);
    for (int k = 1; k < n; ++k) out.angles(k) = sol.x(th_var[k]);
    out.bus_price.resize(n);
    for (int k = 0; k < n; ++k) out.bus_price(k) = sol.y(balance_row[k]);
    out.dispatch.price = out.bus_price(0);

    out.line_flows.resize(net.num_lines());
    out.line_duals = Eigen::VectorXd::Zero(net.num_lines());
    for (int i = 0; i < net.num_lines(); ++i) {
        const Line& l = net.lines()[i];
        out.line_flows(i) = -l.admittance.imag() * (out.angles(l.from) - out.angles(l.to));
        const std::string tag = "vl2[" + std::to_string(i) + "]";
        for (int r = 0; r < prog.num_rows(); ++r) {
            if (prog.row_labels[r].rfind(tag, 0) == 0) {
                out.line_duals(i) += std::abs(sol.y(r));
            }
        }
    }
    return out;
}

}  // namespace opf
