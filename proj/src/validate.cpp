#include "opf/validate.hpp"

#include <cmath>
#include <mutex>
#include <thread>

#include "opf/stats.hpp"

namespace opf {

namespace {

ScenarioOutcome check_pf_newton(const Network& net, const UncertaintyModel& model,
                                const ControlDecision& dec, const UncertaintyVector& delta) {
    ScenarioOutcome out;
    out.method = CheckMethod::PfNewton;
    const int n = net.num_buses();

    const Eigen::VectorXd p_bar = apply_realtime(dec, delta);
    const Eigen::VectorXd v_set = dec.voltage_setpoints();

    InjectionSpec spec;
    spec.role.assign(n, BusRole::PQ);
    spec.v_set = Eigen::VectorXd::Ones(n);
    spec.p_gen = Eigen::VectorXd::Zero(n);
    spec.p_other = Eigen::VectorXd::Zero(n);
    spec.q_other = Eigen::VectorXd::Zero(n);
    spec.role[0] = BusRole::Slack;
    spec.v_set(0) = net.slack_voltage();
    for (int j = 0; j < static_cast<int>(dec.gen_buses.size()); ++j) {
        const int k = dec.gen_buses[j];
        spec.role[k] = BusRole::PV;
        spec.v_set(k) = v_set(j);
        spec.p_gen(k) = p_bar(j);
    }
    for (int k = 0; k < n; ++k) {
        const Bus& b = net.buses()[k];
        spec.p_other(k) = model.p_r0()(k) + delta.renew_delta(k).real() - b.p_load -
                          delta.load_delta(k).real();
        spec.q_other(k) = model.q_r0()(k) + delta.renew_delta(k).imag() - b.q_load -
                          delta.load_delta(k).imag();
    }

    PowerFlowSolution sol;
    try {
        sol = solve_pf(net, spec);
    } catch (const NumericalError&) {
        out.pf_diverged = true;
        out.feasible = false;
        return out;
    }

    const LimitReport rep = check_limits(net, sol);
    for (const LimitViolation& v : rep.entries) {
        if (v.informational) continue;
        switch (v.family) {
            case LimitFamily::PL1: ++out.pl1; break;
            case LimitFamily::PL2: ++out.pl2; break;
            case LimitFamily::VL1: ++out.vl1; break;
            case LimitFamily::VL2: ++out.vl2; break;
            default: break;
        }
    }
    out.feasible = rep.clean();
    return out;
}

ScenarioOutcome check_sdp(const Network& net, const UncertaintyModel& model,
                          const ControlDecision& dec, const UncertaintyVector& delta) {
    ScenarioOutcome out;
    out.method = CheckMethod::SdpFeasibility;

    ScenarioSet single;
    single.seed = delta.seed;
    single.scenarios.push_back(delta);
    SwcAssembly asmb = assemble_swc(net, model, single, {0.0, 0.0}, {});

    // pin the shared decision; presolve then eliminates the fixed frees
    std::vector<Eigen::Triplet<double>> extra;
    conic::ConeProgram prog = asmb.program;
    const int n_g = static_cast<int>(asmb.gen_buses.size());
    std::vector<std::pair<int, double>> pins;
    for (int j = 0; j < n_g; ++j) {
        pins.emplace_back(asmb.p_var[j], dec.p_gen(j));
        pins.emplace_back(asmb.wu_var[j], dec.w_u(j));
        pins.emplace_back(asmb.alpha_offset + j, dec.alpha.alpha(j));
    }
    const int old_rows = prog.num_rows();
    const int added = static_cast<int>(pins.size());
    Eigen::VectorXd b2(old_rows + added);
    b2.head(old_rows) = prog.b;
    for (int k = 0; k < prog.A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, k); it; ++it) {
            extra.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (int p = 0; p < added; ++p) {
        extra.emplace_back(old_rows + p, pins[p].first, 1.0);
        b2(old_rows + p) = pins[p].second;
        prog.row_labels.push_back("pin");
    }
    prog.A.resize(old_rows + added, prog.num_vars);
    prog.A.setFromTriplets(extra.begin(), extra.end());
    prog.A.makeCompressed();
    prog.b = b2;

    conic::SolverOptions opts;
    const conic::ConeSolution sol = conic::solve(prog, opts);
    out.feasible = sol.status == conic::SolveStatus::Optimal;
    if (!out.feasible) out.pf_diverged = (sol.status != conic::SolveStatus::PrimalInfeasible);
    return out;
}

}  // namespace

ScenarioOutcome check_scenario(const Network& net, const UncertaintyModel& model,
                               const ControlDecision& dec, const UncertaintyVector& delta,
                               CheckMethod method) {
    if (static_cast<int>(dec.gen_buses.size()) != dec.p_gen.size() ||
        dec.p_gen.size() != dec.w_u.size() || dec.p_gen.size() != dec.alpha.alpha.size()) {
        throw ValidationError("check_scenario: decision dimensions are inconsistent");
    }
    return method == CheckMethod::PfNewton ? check_pf_newton(net, model, dec, delta)
                                           : check_sdp(net, model, dec, delta);
}

RiskReport estimate_risk(const Network& net, const UncertaintyModel& model,
                         const ControlDecision& dec, int samples, double eta,
                         std::uint64_t seed, CheckMethod method, int threads) {
    if (samples < 1) throw ValidationError("estimate_risk: need at least one sample");
    if (!(eta > 0.0 && eta < 1.0)) throw ValidationError("estimate_risk: eta outside (0,1)");
    if (seed == dec.seed) {
        throw ValidationError(
            "estimate_risk: validation seed equals the training seed; draws must be fresh");
    }
    if (threads < 1) throw ValidationError("estimate_risk: threads must be >= 1");

    const ScenarioSet set = sample(model, samples, seed);
    std::vector<ScenarioOutcome> outcomes(set.size());
    const int workers = std::min<int>(threads, set.size());
    if (workers <= 1) {
        for (int i = 0; i < set.size(); ++i) {
            outcomes[i] = check_scenario(net, model, dec, set.scenarios[i], method);
        }
    } else {
        std::vector<std::thread> pool;
        std::exception_ptr first_error;
        std::mutex error_mutex;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                try {
                    for (int i = w; i < set.size(); i += workers) {
                        outcomes[i] = check_scenario(net, model, dec, set.scenarios[i], method);
                    }
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    RiskReport rep;
    rep.samples = samples;
    rep.eta = eta;
    rep.seed = seed;
    rep.declared_eps = dec.eps;
    rep.method = method;
    rep.unbounded_model = model.has_unbounded_support();
    // ordered reduction: the report is identical for any thread count
    for (int i = 0; i < set.size(); ++i) {
        const ScenarioOutcome& o = outcomes[i];
        if (!o.feasible) {
            ++rep.violations;
            if (model.is_tail_draw(set.scenarios[i])) ++rep.tail_violations;
        }
        rep.pl1 += (o.pl1 > 0);
        rep.pl2 += (o.pl2 > 0);
        rep.vl1 += (o.vl1 > 0);
        rep.vl2 += (o.vl2 > 0);
        rep.pf_infeasible += o.pf_diverged ? 1 : 0;
    }
    rep.p_hat = static_cast<double>(rep.violations) / samples;
    const stats::Interval iv = stats::clopper_pearson(rep.violations, samples, eta);
    rep.lower = iv.lower;
    rep.upper = iv.upper;
    rep.pass = dec.eps > 0.0 && rep.upper <= dec.eps;
    return rep;
}

}  // namespace opf
