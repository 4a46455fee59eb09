#include "opf/swc.hpp"

#include <cmath>

#include "opf/stats.hpp"

namespace opf {

using conic::LinExpr;

SampleComplexitySpec::SampleComplexitySpec(double eps_, double beta_, int n_u_)
    : eps(eps_), beta(beta_), n_u(n_u_) {
    if (!(eps > 0.0 && eps < 1.0)) {
        throw ValidationError("risk level eps must lie in (0, 1)");
    }
    if (!(beta > 0.0 && beta < 1.0)) {
        throw ValidationError("confidence level beta must lie in (0, 1)");
    }
    if (n_u < 1) throw ValidationError("shared decision dimension n_u must be >= 1");
}

long n_swc_explicit(const SampleComplexitySpec& spec) {
    const double e = std::exp(1.0);
    const double bound =
        e / (spec.eps * (e - 1.0)) * (std::log(1.0 / spec.beta) + spec.n_u - 1.0);
    return static_cast<long>(std::ceil(bound));
}

long n_swc_exact(const SampleComplexitySpec& spec) {
    // tail(N) = P[Bin(N, eps) <= n_u - 1] is decreasing in N; bisect for the
    // smallest N with tail <= beta.
    const auto tail = [&](long n) {
        return stats::binomial_cdf(spec.n_u - 1, n, spec.eps);
    };
    long hi = std::max<long>(spec.n_u, 2);
    while (tail(hi) > spec.beta) hi *= 2;
    long lo = spec.n_u - 1;  // tail there is 1 > beta always
    while (lo + 1 < hi) {
        const long mid = lo + (hi - lo) / 2;
        if (tail(mid) <= spec.beta) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

int default_n_u(const Network& net) {
    const int n_g = static_cast<int>(bus_partition(net).generator.size());
    return 3 * n_g + 1;
}

Eigen::VectorXd apply_realtime(const ControlDecision& dec, const UncertaintyVector& delta) {
    return deploy(dec.p_gen, dec.alpha, delta);
}

SwcAssembly assemble_swc(const Network& net, const UncertaintyModel& model,
                         const ScenarioSet& scenarios, const SwcPenalties& penalties,
                         const std::vector<int>& l_prob) {
    if (scenarios.size() < 1) throw ValidationError("swc assembly needs scenarios");
    if (penalties.gamma_b < 0.0 || penalties.gamma_l < 0.0) {
        throw ValidationError("swc penalties must be nonnegative");
    }
    if (model.num_buses() != net.num_buses()) {
        throw ValidationError("swc: model and case bus counts differ");
    }
    for (int li : l_prob) {
        if (li < 0 || li >= net.num_lines()) {
            throw ValidationError("swc: l_prob references line " + std::to_string(li) +
                                  " outside the case");
        }
    }

    const int n = net.num_buses();
    const BusPartition part = bus_partition(net);
    const std::vector<int>& gbus = part.generator;
    const int n_g = static_cast<int>(gbus.size());
    if (n_g == 0) throw ValidationError("swc needs at least one non-slack generator");
    const Generator* slack_gen = net.generator_at(0);
    const int ngens = static_cast<int>(net.generators().size());
    const double v0sq = net.slack_voltage() * net.slack_voltage();

    conic::ProgramBuilder pb;
    SwcAssembly out;
    out.gen_buses = gbus;

    // ---- shared control variables: P^G, W^u, alpha, gamma ---------------
    out.p_var.resize(n_g);
    out.wu_var.resize(n_g);
    std::vector<int> t_var(n_g);
    for (int j = 0; j < n_g; ++j) {
        const Generator& g = *net.generator_at(gbus[j]);
        out.p_var[j] = pb.add_free("p[" + std::to_string(gbus[j]) + "]");
        t_var[j] = pb.add_free("t[" + std::to_string(gbus[j]) + "]");
        pb.add_quadratic_epigraph(t_var[j], out.p_var[j], g.c2, g.c1, g.c0, "cost-epi");
        out.wu_var[j] = pb.add_free("wu[" + std::to_string(gbus[j]) + "]");
        const Bus& bus = net.buses()[gbus[j]];
        pb.add_box(LinExpr(out.wu_var[j], 1.0), bus.v_min * bus.v_min, bus.v_max * bus.v_max,
                   "vl1");
    }
    out.alpha_offset = pb.add_nonneg_block("alpha", n_g);
    {
        LinExpr simplex;
        for (int j = 0; j < n_g; ++j) simplex.add(out.alpha_offset + j, 1.0);
        pb.add_eq(simplex, 1.0, "alpha-simplex");
    }
    out.gamma_var = pb.add_free("gamma");
    pb.add_cost(out.gamma_var, 1.0);

    // Tiny pull toward the uniform deployment makes alpha unique when the
    // uncertainty leaves it unconstrained.
    {
        const int reg = pb.add_free("alpha-reg");
        LinExpr head(reg, 0.5);
        head.constant = 0.5;
        std::vector<LinExpr> tails;
        LinExpr t0(reg, 0.5);
        t0.constant = -0.5;
        tails.push_back(t0);
        for (int j = 0; j < n_g; ++j) {
            LinExpr tj(out.alpha_offset + j, 1.0);
            tj.constant = -1.0 / n_g;
            tails.push_back(tj);
        }
        pb.add_soc_constraint(head, tails, "alpha-reg");
        pb.add_cost(reg, 1e-9);
    }

    // ---- per-scenario certificate blocks --------------------------------
    const int before_scenarios = pb.num_vars();
    out.w_refs.reserve(scenarios.size());
    out.q_var.resize(scenarios.size());
    out.slack_p_var.assign(scenarios.size(), -1);
    out.flow_var.resize(scenarios.size());

    for (int i = 0; i < scenarios.size(); ++i) {
        const UncertaintyVector& delta = scenarios.scenarios[i];
        if (delta.num_buses() != n) throw ValidationError("scenario dimension mismatch");
        const double mis = mismatch(delta);
        const std::string si = std::to_string(i);

        const conic::HermitianRef w = pb.add_hermitian("W[" + si + "]", n);
        out.w_refs.push_back(w);

        // reactive certificates for every unit, active + cost for the slack unit
        std::vector<int>& qv = out.q_var[i];
        qv.resize(ngens);
        for (int g = 0; g < ngens; ++g) {
            const Generator& gen = net.generators()[g];
            qv[g] = pb.add_free("q[" + si + "][" + std::to_string(gen.bus) + "]");
            pb.add_box(LinExpr(qv[g], 1.0), gen.q_min, gen.q_max, "pl2");
        }
        int slack_t = -1;
        if (slack_gen) {
            out.slack_p_var[i] = pb.add_free("p0[" + si + "]");
            pb.add_box(LinExpr(out.slack_p_var[i], 1.0), slack_gen->p_min, slack_gen->p_max,
                       "pl1");
            slack_t = pb.add_free("t0[" + si + "]");
            pb.add_quadratic_epigraph(slack_t, out.slack_p_var[i], slack_gen->c2,
                                      slack_gen->c1, slack_gen->c0, "cost-epi");
        }

        // W^[i] = W^u + W^x: the shared diagonal entries tie to wu, and the
        // slack corner is pinned to the reference voltage.
        for (int j = 0; j < n_g; ++j) {
            auto [dv, dsc] = w.re_entry(gbus[j], gbus[j]);
            LinExpr tie(dv, dsc);
            tie.add(out.wu_var[j], -1.0);
            pb.add_eq(tie, 0.0, "wu-tie");
        }
        {
            auto [dv, dsc] = w.re_entry(0, 0);
            pb.add_eq(LinExpr(dv, dsc), v0sq, "slack-voltage");
        }

        // balance rows, with the deployment response entering through alpha
        for (int k = 0; k < n; ++k) {
            const Bus& bus = net.buses()[k];
            LinExpr pe, qe;
            if (auto g = net.generator_index(k)) {
                if (k == 0) {
                    pe.add(out.slack_p_var[i], 1.0);
                } else {
                    int j = 0;
                    while (gbus[j] != k) ++j;
                    pe.add(out.p_var[j], 1.0);
                    pe.add(out.alpha_offset + j, mis);
                }
                qe.add(qv[*g], 1.0);
            }
            for (int l : net.neighbors(k)) {
                const std::complex<double> y = net.admittance_of(k, l);
                const double gkl = y.real();
                const double bkl = y.imag();
                auto [dv, dsc] = w.re_entry(k, k);
                pe.add(dv, -gkl * dsc);
                qe.add(dv, bkl * dsc);
                auto [rv, rsc] = w.re_entry(k, l);
                pe.add(rv, gkl * rsc);
                qe.add(rv, -bkl * rsc);
                auto [iv, isc] = w.im_entry(k, l);
                pe.add(iv, bkl * isc);
                qe.add(iv, gkl * isc);
            }
            const double p_rhs = bus.p_load + delta.load_delta(k).real() - model.p_r0()(k) -
                                 delta.renew_delta(k).real();
            const double q_rhs = bus.q_load + delta.load_delta(k).imag() - model.q_r0()(k) -
                                 delta.renew_delta(k).imag();
            pb.add_eq(pe, p_rhs, "balance-p");
            pb.add_eq(qe, q_rhs, "balance-q");
        }

        // voltage magnitude bounds at non-control buses (control buses are
        // bounded once through W^u)
        for (int k = 0; k < n; ++k) {
            if (k != 0 && net.buses()[k].kind == BusKind::Generator) continue;
            const Bus& bus = net.buses()[k];
            auto [dv, dsc] = w.re_entry(k, k);
            pb.add_box(LinExpr(dv, dsc), bus.v_min * bus.v_min, bus.v_max * bus.v_max, "vl1");
        }

        // line voltage-difference rows
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

        // deployment response stays within the active limits
        for (int j = 0; j < n_g; ++j) {
            const Generator& g = *net.generator_at(gbus[j]);
            LinExpr resp(out.p_var[j], 1.0);
            resp.add(out.alpha_offset + j, mis);
            pb.add_box(resp, g.p_min, g.p_max, "pl1");
        }

        // per-scenario epigraph: generation cost + penalties <= gamma
        LinExpr epi;
        for (int j = 0; j < n_g; ++j) epi.add(t_var[j], 1.0);
        if (slack_t >= 0) epi.add(slack_t, 1.0);
        if (penalties.gamma_b != 0.0) {
            for (int g = 0; g < ngens; ++g) epi.add(qv[g], penalties.gamma_b);
        }
        if (penalties.gamma_l > 0.0) {
            for (int li : l_prob) {
                const Line& line = net.lines()[li];
                // two modulus epigraphs per line, one per end
                for (int end = 0; end < 2; ++end) {
                    const int a = end == 0 ? line.from : line.to;
                    const int bph = end == 0 ? line.to : line.from;
                    const double gkl = line.admittance.real();
                    const double bkl = line.admittance.imag();
                    // z = W_aa - W_ab; modulus of z * y
                    LinExpr re_expr, im_expr;
                    auto [dv, dsc] = w.re_entry(a, a);
                    re_expr.add(dv, gkl * dsc);
                    im_expr.add(dv, bkl * dsc);
                    auto [rv, rsc] = w.re_entry(a, bph);
                    re_expr.add(rv, -gkl * rsc);
                    im_expr.add(rv, -bkl * rsc);
                    auto [iv, isc] = w.im_entry(a, bph);
                    re_expr.add(iv, bkl * isc);
                    im_expr.add(iv, -gkl * isc);
                    const int h = pb.add_free("L[" + si + "][" + std::to_string(li) + "][" +
                                              std::to_string(end) + "]");
                    pb.add_soc_constraint(LinExpr(h, 1.0), {re_expr, im_expr}, "line-flow");
                    epi.add(h, penalties.gamma_l);
                    out.flow_var[i].push_back(h);
                }
            }
        }
        LinExpr gamma_side(out.gamma_var, -1.0);
        gamma_side += epi;
        pb.add_le(gamma_side, 0.0, "gamma-epi");

        if (i == 0) {
            out.certificate_vars_per_scenario =
                ngens + (slack_gen ? 1 : 0) + conic::svec_dim(2 * n);
            out.vars_per_scenario = pb.num_vars() - before_scenarios;
        }
    }

    out.program = pb.build();
    return out;
}

SwcSolution solve_swc(const Network& net, const UncertaintyModel& model,
                      const SampleComplexitySpec& spec, std::uint64_t seed,
                      const SwcOptions& opts) {
    const long n_samples = opts.use_explicit_bound ? n_swc_explicit(spec) : n_swc_exact(spec);
    ScenarioSet scen = sample(model, static_cast<int>(n_samples), seed);
    scen.eps = spec.eps;
    scen.beta = spec.beta;

    std::vector<int> l_prob = opts.l_prob;
    if (l_prob.empty()) {
        for (int i = 0; i < net.num_lines(); ++i) l_prob.push_back(i);
    }

    SwcAssembly asmb = assemble_swc(net, model, scen, opts.penalties, l_prob);
    const conic::ConeSolution sol = conic::solve(asmb.program, opts.solver);
    if (sol.status == conic::SolveStatus::PrimalInfeasible) {
        throw InfeasibleError(
            "SwC program infeasible: some sampled scenario admits no certificate", "scenario");
    }
    if (sol.status != conic::SolveStatus::Optimal) {
        throw NumericalError("SwC solve ended with status " +
                             std::string(conic::to_string(sol.status)));
    }

    const int n_g = static_cast<int>(asmb.gen_buses.size());
    const int ngens = static_cast<int>(net.generators().size());
    SwcSolution out;
    out.conic = sol;
    out.objective = sol.x(asmb.gamma_var);

    ControlDecision& dec = out.decision;
    dec.gen_buses = asmb.gen_buses;
    dec.p_gen.resize(n_g);
    dec.w_u.resize(n_g);
    Eigen::VectorXd alpha(n_g);
    for (int j = 0; j < n_g; ++j) {
        dec.p_gen(j) = sol.x(asmb.p_var[j]);
        dec.w_u(j) = sol.x(asmb.wu_var[j]);
        alpha(j) = std::max(0.0, sol.x(asmb.alpha_offset + j));
    }
    dec.alpha = DeploymentVector::checked(alpha / alpha.sum());
    dec.gamma = out.objective;
    dec.eps = spec.eps;
    dec.beta = spec.beta;
    dec.n_samples = static_cast<int>(n_samples);
    dec.seed = seed;

    out.certificates.reserve(scen.size());
    for (int i = 0; i < scen.size(); ++i) {
        ScenarioCertificate cert;
        cert.w = conic::extract_hermitian(sol.x, asmb.w_refs[i]);
        cert.q_gen.resize(ngens);
        for (int g = 0; g < ngens; ++g) cert.q_gen(g) = sol.x(asmb.q_var[i][g]);
        cert.slack_p = asmb.slack_p_var[i] >= 0 ? sol.x(asmb.slack_p_var[i]) : 0.0;
        // nominal dispatch is what the objective charges, not the response
        double gen_cost = 0.0;
        for (int j = 0; j < n_g; ++j) {
            const Generator& g = *net.generator_at(asmb.gen_buses[j]);
            gen_cost += g.cost(dec.p_gen(j));
        }
        if (const Generator* g0 = net.generator_at(0)) gen_cost += g0->cost(cert.slack_p);
        cert.gen_cost = gen_cost;
        cert.q_penalty = opts.penalties.gamma_b * cert.q_gen.sum();
        cert.line_penalty = 0.0;
        for (int h : asmb.flow_var[i]) {
            cert.line_penalty += opts.penalties.gamma_l * sol.x(h);
        }
        out.certificates.push_back(std::move(cert));
    }
    return out;
}

ScenarioResidual recheck_scenario(const Network& net, const UncertaintyModel& model,
                                  const UncertaintyVector& delta, const ControlDecision& dec,
                                  const ScenarioCertificate& cert) {
    const int n = net.num_buses();
    ScenarioResidual out;
    const Eigen::VectorXd p_bar = apply_realtime(dec, delta);

    for (int k = 0; k < n; ++k) {
        const Bus& bus = net.buses()[k];
        std::complex<double> flow = 0.0;
        for (int l : net.neighbors(k)) {
            flow += (cert.w(k, k) - cert.w(k, l)) * std::conj(net.admittance_of(k, l));
        }
        double p_gen = 0.0, q_gen = 0.0;
        if (auto g = net.generator_index(k)) {
            q_gen = cert.q_gen(*g);
            if (k == 0) {
                p_gen = cert.slack_p;
            } else {
                for (int j = 0; j < static_cast<int>(dec.gen_buses.size()); ++j) {
                    if (dec.gen_buses[j] == k) p_gen = p_bar(j);
                }
            }
        }
        const double p_in = p_gen + model.p_r0()(k) + delta.renew_delta(k).real() -
                            bus.p_load - delta.load_delta(k).real();
        const double q_in = q_gen + model.q_r0()(k) + delta.renew_delta(k).imag() -
                            bus.q_load - delta.load_delta(k).imag();
        out.balance = std::max(out.balance, std::abs(p_in - flow.real()));
        out.balance = std::max(out.balance, std::abs(q_in - flow.imag()));
    }

    auto bound_gap = [](double v, double lo, double hi) {
        return std::max(0.0, std::max(lo - v, v - hi));
    };
    for (int g = 0; g < static_cast<int>(net.generators().size()); ++g) {
        const Generator& gen = net.generators()[g];
        out.bounds = std::max(out.bounds, bound_gap(cert.q_gen(g), gen.q_min, gen.q_max));
        if (gen.bus == 0) {
            out.bounds = std::max(out.bounds, bound_gap(cert.slack_p, gen.p_min, gen.p_max));
        }
    }
    for (int j = 0; j < static_cast<int>(dec.gen_buses.size()); ++j) {
        const Generator& gen = *net.generator_at(dec.gen_buses[j]);
        out.bounds = std::max(out.bounds, bound_gap(p_bar(j), gen.p_min, gen.p_max));
    }
    for (const Bus& bus : net.buses()) {
        const double wkk = cert.w(bus.id, bus.id).real();
        out.bounds = std::max(out.bounds, bound_gap(wkk, bus.v_min * bus.v_min,
                                                    bus.v_max * bus.v_max));
    }
    for (const Line& line : net.lines()) {
        if (!line.dv_max) continue;
        const double lhs = cert.w(line.from, line.from).real() +
                           cert.w(line.to, line.to).real() -
                           2.0 * cert.w(line.from, line.to).real();
        out.bounds = std::max(out.bounds, std::max(0.0, lhs - (*line.dv_max) * (*line.dv_max)));
    }
    return out;
}

}  // namespace opf
