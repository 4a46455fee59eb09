#include "opf/report.hpp"

#include <sstream>

namespace opf::report {

namespace {

json vec(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

Eigen::VectorXd unvec(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (size_t i = 0; i < arr.size(); ++i) v(static_cast<int>(i)) = arr[i].get<double>();
    return v;
}

json cvec(const Eigen::VectorXcd& v) {
    json arr = json::array();
    for (int i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

const char* family_name(LimitFamily f) {
    switch (f) {
        case LimitFamily::PL1: return "pl1";
        case LimitFamily::PL2: return "pl2";
        case LimitFamily::VL1: return "vl1";
        case LimitFamily::VL2: return "vl2";
        case LimitFamily::SMax: return "smax";
    }
    return "?";
}

}  // namespace

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hash_hex(const std::string& bytes) {
    std::ostringstream os;
    os << std::hex << fnv1a(bytes);
    return os.str();
}

json to_json(const ComplexVoltageState& st) {
    json j;
    j["magnitude_pu"] = vec(st.magnitude);
    j["angle_rad"] = vec(st.angle);
    return j;
}

json to_json(const LimitReport& rep) {
    json arr = json::array();
    for (const LimitViolation& v : rep.entries) {
        json e;
        e["family"] = family_name(v.family);
        e["index"] = v.index;
        e["value"] = v.value;
        e["bound"] = v.bound;
        e["excess"] = v.excess;
        e["informational"] = v.informational;
        arr.push_back(e);
    }
    json j;
    j["clean"] = rep.clean();
    j["entries"] = arr;
    return j;
}

json to_json(const Network& net, const PowerFlowSolution& sol) {
    json j;
    j["state"] = to_json(sol.state);
    j["iterations"] = sol.iterations;
    j["residual_norm"] = sol.residual_norm;
    j["slack_p_gen_pu"] = sol.slack_p_gen;
    j["slack_q_gen_pu"] = sol.slack_q_gen;
    j["p_gen_pu"] = vec(sol.p_gen);
    j["q_gen_pu"] = vec(sol.q_gen);
    json flows = json::array();
    for (const LineFlow& f : sol.flows) {
        const Line& l = net.lines()[f.line];
        json e;
        e["from"] = l.from;
        e["to"] = l.to;
        e["s_from_pu"] = {f.from_to.real(), f.from_to.imag()};
        e["s_to_pu"] = {f.to_from.real(), f.to_from.imag()};
        flows.push_back(e);
    }
    j["flows"] = flows;
    j["limits"] = to_json(check_limits(net, sol));
    return j;
}

json to_json(const DispatchResult& r) {
    json j;
    j["p_gen_pu"] = vec(r.p_gen);
    j["total_cost"] = r.total_cost;
    j["price"] = r.price;
    return j;
}

json to_json(const Network& net, const DcOpfResult& r) {
    json j;
    j["dispatch"] = to_json(r.dispatch);
    j["angles_rad"] = vec(r.angles);
    j["bus_price"] = vec(r.bus_price);
    j["line_flows_pu"] = vec(r.line_flows);
    j["line_duals"] = vec(r.line_duals);
    j["solver"] = {{"status", conic::to_string(r.conic.status)},
                   {"iterations", r.conic.iterations},
                   {"gap_rel", r.conic.gap_rel}};
    (void)net;
    return j;
}

json to_json(const RelaxedOpfSolution& r) {
    json j;
    j["p_gen_pu"] = vec(r.p_gen);
    j["q_gen_pu"] = vec(r.q_gen);
    j["objective"] = r.objective;
    j["rank"] = {{"eigenvalues", vec(r.rank.eigenvalues)},
                 {"ratio", r.rank.ratio},
                 {"rank_one", r.rank.rank_one}};
    if (r.recovered) {
        j["recovered_state"] = to_json(*r.recovered);
        j["recovery_error"] = r.recovery_error;
    }
    const int n = static_cast<int>(r.lift.w.rows());
    json diag = json::array();
    for (int k = 0; k < n; ++k) diag.push_back(r.lift.w(k, k).real());
    j["w_diagonal"] = diag;
    j["solver"] = {{"status", conic::to_string(r.conic.status)},
                   {"iterations", r.conic.iterations},
                   {"gap_rel", r.conic.gap_rel}};
    return j;
}

json to_json(const ControlDecision& d) {
    json j;
    j["gen_buses"] = d.gen_buses;
    j["p_gen_pu"] = vec(d.p_gen);
    j["w_u"] = vec(d.w_u);
    j["alpha"] = vec(d.alpha.alpha);
    j["gamma"] = d.gamma;
    j["eps"] = d.eps;
    j["beta"] = d.beta;
    j["n_samples"] = d.n_samples;
    j["train_seed"] = d.seed;
    return j;
}

ControlDecision decision_from_json(const json& j) {
    ControlDecision d;
    d.gen_buses = j.at("gen_buses").get<std::vector<int>>();
    d.p_gen = unvec(j.at("p_gen_pu"));
    d.w_u = unvec(j.at("w_u"));
    d.alpha = DeploymentVector::checked(unvec(j.at("alpha")));
    d.gamma = j.at("gamma").get<double>();
    d.eps = j.at("eps").get<double>();
    d.beta = j.at("beta").get<double>();
    d.n_samples = j.at("n_samples").get<int>();
    d.seed = j.at("train_seed").get<std::uint64_t>();
    if (static_cast<int>(d.gen_buses.size()) != d.p_gen.size() ||
        d.p_gen.size() != d.w_u.size() || d.p_gen.size() != d.alpha.alpha.size()) {
        throw ValidationError("decision document has inconsistent dimensions");
    }
    return d;
}

json to_json(const Network& net, const SwcSolution& s) {
    json j;
    j["decision"] = to_json(s.decision);
    j["gamma"] = s.objective;
    json slacks = json::array();
    for (size_t i = 0; i < s.certificates.size(); ++i) {
        const ScenarioCertificate& c = s.certificates[i];
        json e;
        e["i"] = i;
        e["q_gen_pu"] = vec(c.q_gen);
        if (net.generator_at(0)) e["slack_p_pu"] = c.slack_p;
        e["gen_cost"] = c.gen_cost;
        e["q_penalty"] = c.q_penalty;
        e["line_penalty"] = c.line_penalty;
        e["w_delta"] = cvec(c.w.diagonal());
        slacks.push_back(e);
    }
    j["certificates"] = slacks;
    j["solver"] = {{"status", conic::to_string(s.conic.status)},
                   {"iterations", s.conic.iterations},
                   {"gap_rel", s.conic.gap_rel},
                   {"presolve",
                    {{"duplicate_rows_removed", s.conic.presolve.duplicate_rows_removed},
                     {"fixed_vars_eliminated", s.conic.presolve.fixed_vars_eliminated}}}};
    return j;
}

json to_json(const RiskReport& r) {
    json j;
    j["samples"] = r.samples;
    j["violations"] = r.violations;
    j["p_hat"] = r.p_hat;
    j["eta"] = r.eta;
    j["lower"] = r.lower;
    j["upper"] = r.upper;
    j["declared_eps"] = r.declared_eps;
    j["pass"] = r.pass;
    j["method"] = r.method == CheckMethod::PfNewton ? "pf-newton" : "sdp-feasibility";
    j["unbounded_model"] = r.unbounded_model;
    j["tail_violations"] = r.tail_violations;
    j["breakdown"] = {{"pl1", r.pl1},
                      {"pl2", r.pl2},
                      {"vl1", r.vl1},
                      {"vl2", r.vl2},
                      {"pf_infeasible", r.pf_infeasible}};
    j["validate_seed"] = r.seed;
    return j;
}

}  // namespace opf::report
