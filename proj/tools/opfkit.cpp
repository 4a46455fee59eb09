// opfkit: command-line front end for the OPF toolkit. Subcommands cover the
// nominal chain (pf, ed, dcopf, acopf), the scenario design (samples, swc)
// and the Monte Carlo risk audit (validate). Every run writes a JSON report
// embedding the full configuration and input hashes.

#include <CLI11.hpp>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "opf/dispatch.hpp"
#include "opf/powerflow.hpp"
#include "opf/relaxation.hpp"
#include "opf/report.hpp"
#include "opf/stats.hpp"
#include "opf/swc.hpp"
#include "opf/uncertainty.hpp"
#include "opf/validate.hpp"

namespace {

using opf::report::json;

constexpr int kExitOk = 0;
constexpr int kExitInfeasible = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

struct RunConfig {
    std::string subcommand;
    std::string case_path;
    std::string model_path;
    std::string decision_path;
    std::string out_dir = ".";
    double eps = 0.1;
    double beta = 0.01;
    double eta = 0.05;
    double gamma_b = 0.0;
    double gamma_l = 0.0;
    std::string l_prob = "all";
    std::uint64_t train_seed = 1;
    std::uint64_t validate_seed = 2;
    int n_u = 0;  // 0 = derive from the case
    int samples = 1000;
    double demand_mw = -1.0;  // <0 = total case load
    double tol = 0.0;         // 0 = module defaults
    double rank_tol = 1e-5;
    int max_iter = 0;
    int threads = 1;
    std::string bound = "exact";
    std::string method = "pf-newton";
    std::string csv_path;
    std::string scenarios_out;
    std::string gamma_curve;  // comma-separated sample counts

    json to_json() const {
        json j;
        j["subcommand"] = subcommand;
        j["case"] = case_path;
        if (!model_path.empty()) j["model"] = model_path;
        if (!decision_path.empty()) j["decision"] = decision_path;
        j["out_dir"] = out_dir;
        j["eps"] = eps;
        j["beta"] = beta;
        j["eta"] = eta;
        j["gamma_b"] = gamma_b;
        j["gamma_l"] = gamma_l;
        j["l_prob"] = l_prob;
        j["train_seed"] = train_seed;
        j["validate_seed"] = validate_seed;
        j["n_u"] = n_u;
        j["samples"] = samples;
        j["demand_mw"] = demand_mw;
        j["tol"] = tol;
        j["rank_tol"] = rank_tol;
        j["max_iter"] = max_iter;
        j["threads"] = threads;
        j["bound"] = bound;
        j["method"] = method;
        return j;
    }
};

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw opf::IoError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

void write_report(const RunConfig& cfg, const json& inputs, const json& result) {
    json doc;
    doc["tool"] = "opfkit";
    doc["subcommand"] = cfg.subcommand;
    doc["timestamp_utc"] = timestamp_utc();
    doc["config"] = cfg.to_json();
    doc["inputs"] = inputs;
    doc["result"] = result;
    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path path =
        std::filesystem::path(cfg.out_dir) / (cfg.subcommand + ".json");
    std::ofstream out(path);
    if (!out) throw opf::IoError("cannot write report: " + path.string());
    out << doc.dump(2) << "\n";
}

opf::conic::SolverOptions solver_options(const RunConfig& cfg) {
    opf::conic::SolverOptions o;
    if (cfg.tol > 0.0) {
        o.feas_tol = cfg.tol;
        o.gap_tol = cfg.tol;
    }
    if (cfg.max_iter > 0) o.max_iterations = cfg.max_iter;
    return o;
}

std::vector<int> parse_l_prob(const std::string& text, int num_lines) {
    std::vector<int> out;
    if (text == "all") {
        for (int i = 0; i < num_lines; ++i) out.push_back(i);
        return out;
    }
    if (text == "none") return out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stoi(tok));
    }
    return out;
}

int cmd_pf(const RunConfig& cfg) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    opf::PfOptions po;
    if (cfg.tol > 0.0) po.tolerance = cfg.tol;
    if (cfg.max_iter > 0) po.max_iterations = cfg.max_iter;
    const opf::PowerFlowSolution sol =
        opf::solve_pf(net, opf::InjectionSpec::from_setpoints(net), po);
    const opf::LimitReport limits = opf::check_limits(net, sol);
    write_report(cfg, {{"case_hash", opf::report::hash_hex(text)}},
                 opf::report::to_json(net, sol));
    std::cout << "pf: converged in " << sol.iterations << " iterations, residual "
              << sol.residual_norm << ", limits " << (limits.clean() ? "clean" : "violated")
              << "\n";
    return kExitOk;
}

int cmd_ed(const RunConfig& cfg) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    double demand = cfg.demand_mw >= 0.0 ? net.base().power_to_pu(cfg.demand_mw) : 0.0;
    if (cfg.demand_mw < 0.0) {
        for (const opf::Bus& b : net.buses()) demand += b.p_load;
    }
    const opf::DispatchResult r = opf::solve_ed(net.generators(), demand);
    json result = opf::report::to_json(r);
    result["demand_pu"] = demand;
    write_report(cfg, {{"case_hash", opf::report::hash_hex(text)}}, result);
    std::cout << "ed: cost " << r.total_cost << " price " << r.price << "\n";
    return kExitOk;
}

int cmd_dcopf(const RunConfig& cfg) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    Eigen::VectorXd loads(net.num_buses());
    for (const opf::Bus& b : net.buses()) loads(b.id) = b.p_load;
    const opf::DcOpfResult r = opf::solve_dc_opf(net, loads, solver_options(cfg));
    write_report(cfg, {{"case_hash", opf::report::hash_hex(text)}},
                 opf::report::to_json(net, r));
    std::cout << "dcopf: cost " << r.dispatch.total_cost << " price " << r.dispatch.price
              << "\n";
    return kExitOk;
}

int cmd_acopf(const RunConfig& cfg) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    const opf::RelaxedOpfSolution r =
        opf::solve_nominal(net, solver_options(cfg), cfg.rank_tol);
    write_report(cfg, {{"case_hash", opf::report::hash_hex(text)}}, opf::report::to_json(r));
    std::cout << "acopf: objective " << r.objective << " rank-one "
              << (r.rank.rank_one ? "yes" : "no") << " (ratio " << r.rank.ratio << ")\n";
    return kExitOk;
}

int cmd_samples(const RunConfig& cfg, bool nu_given) {
    int n_u = cfg.n_u;
    std::string case_hash;
    std::optional<opf::Network> net;
    if (!cfg.case_path.empty()) {
        const std::string text = slurp(cfg.case_path);
        net = opf::parse_case(text);
        case_hash = opf::report::hash_hex(text);
        if (!nu_given) n_u = opf::default_n_u(*net);
    }
    if (n_u < 1) {
        throw opf::ValidationError("samples: pass --nu or --case to size the decision");
    }
    const opf::SampleComplexitySpec spec(cfg.eps, cfg.beta, n_u);
    const long n_exact = opf::n_swc_exact(spec);
    const long n_explicit = opf::n_swc_explicit(spec);
    const long n = cfg.bound == "explicit" ? n_explicit : n_exact;

    json result;
    result["n_u"] = n_u;
    result["n_exact"] = n_exact;
    result["n_explicit"] = n_explicit;
    result["bound"] = cfg.bound;
    result["n"] = n;

    if (!cfg.scenarios_out.empty()) {
        if (!net || cfg.model_path.empty()) {
            throw opf::ValidationError("samples: emitting scenarios needs --case and --model");
        }
        const std::string mtext = slurp(cfg.model_path);
        const opf::UncertaintyModel model = opf::UncertaintyModel::parse(mtext, *net);
        opf::ScenarioSet set = opf::sample(model, static_cast<int>(n), cfg.train_seed);
        set.eps = cfg.eps;
        set.beta = cfg.beta;
        std::ofstream out(cfg.scenarios_out);
        if (!out) throw opf::IoError("cannot write scenarios: " + cfg.scenarios_out);
        opf::save_scenarios(out, set);
        result["scenarios_file"] = cfg.scenarios_out;
    }
    json inputs;
    if (!case_hash.empty()) inputs["case_hash"] = case_hash;
    write_report(cfg, inputs, result);
    std::cout << n << "\n";
    return kExitOk;
}

int cmd_swc(const RunConfig& cfg, bool nu_given) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    const std::string mtext = slurp(cfg.model_path);
    const opf::UncertaintyModel model = opf::UncertaintyModel::parse(mtext, net);

    const int n_u = nu_given ? cfg.n_u : opf::default_n_u(net);
    const opf::SampleComplexitySpec spec(cfg.eps, cfg.beta, n_u);
    opf::SwcOptions opts;
    opts.penalties = {cfg.gamma_b, cfg.gamma_l};
    opts.l_prob = parse_l_prob(cfg.l_prob, net.num_lines());
    opts.use_explicit_bound = cfg.bound == "explicit";
    opts.solver = solver_options(cfg);
    const opf::SwcSolution sol = opf::solve_swc(net, model, spec, cfg.train_seed, opts);

    json result = opf::report::to_json(net, sol);
    result["n_u"] = n_u;
    if (!cfg.scenarios_out.empty()) {
        opf::ScenarioSet set = opf::sample(model, sol.decision.n_samples, cfg.train_seed);
        set.eps = cfg.eps;
        set.beta = cfg.beta;
        std::ofstream out(cfg.scenarios_out);
        if (!out) throw opf::IoError("cannot write scenarios: " + cfg.scenarios_out);
        opf::save_scenarios(out, set);
        result["scenarios_file"] = cfg.scenarios_out;
    }
    if (!cfg.gamma_curve.empty()) {
        // gamma* as a function of the sample count, CSV for external plotting
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path path =
            std::filesystem::path(cfg.out_dir) /
            (cfg.csv_path.empty() ? "gamma_curve.csv" : cfg.csv_path);
        std::ofstream csv(path);
        csv << "n_samples,gamma\n";
        std::stringstream ss(cfg.gamma_curve);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            const int n = std::stoi(tok);
            const opf::ScenarioSet set = opf::sample(model, n, cfg.train_seed);
            const opf::SwcAssembly a =
                opf::assemble_swc(net, model, set, opts.penalties, opts.l_prob);
            const opf::conic::ConeSolution s = opf::conic::solve(a.program, opts.solver);
            csv << n << ","
                << (s.status == opf::conic::SolveStatus::Optimal ? s.x(a.gamma_var)
                                                                 : std::nan(""))
                << "\n";
        }
        result["gamma_curve_csv"] = path.string();
    }
    write_report(cfg,
                 {{"case_hash", opf::report::hash_hex(text)},
                  {"model_hash", opf::report::hash_hex(mtext)}},
                 result);
    std::cout << "swc: gamma " << sol.objective << " with N " << sol.decision.n_samples
              << " scenarios (eps " << cfg.eps << ", beta " << cfg.beta << ")\n";
    return kExitOk;
}

int cmd_validate(const RunConfig& cfg) {
    const std::string text = slurp(cfg.case_path);
    const opf::Network net = opf::parse_case(text);
    const std::string mtext = slurp(cfg.model_path);
    const opf::UncertaintyModel model = opf::UncertaintyModel::parse(mtext, net);
    json ddoc;
    try {
        ddoc = json::parse(slurp(cfg.decision_path));
    } catch (const nlohmann::json::parse_error& e) {
        throw opf::ValidationError(std::string("decision file is not valid JSON: ") + e.what());
    }
    const json& dj = ddoc.contains("result") ? ddoc.at("result").at("decision")
                                             : ddoc.at("decision");
    const opf::ControlDecision dec = opf::report::decision_from_json(dj);
    const opf::CheckMethod method = cfg.method == "sdp-feasibility"
                                        ? opf::CheckMethod::SdpFeasibility
                                        : opf::CheckMethod::PfNewton;
    const opf::RiskReport rep = opf::estimate_risk(net, model, dec, cfg.samples, cfg.eta,
                                                    cfg.validate_seed, method, cfg.threads);

    if (!cfg.csv_path.empty()) {
        const opf::ScenarioSet set = opf::sample(model, cfg.samples, cfg.validate_seed);
        std::filesystem::create_directories(cfg.out_dir);
        const std::filesystem::path path = std::filesystem::path(cfg.out_dir) / cfg.csv_path;
        std::ofstream csv(path);
        csv << "i,feasible,pf_diverged,pl1,pl2,vl1,vl2\n";
        for (const auto& d : set.scenarios) {
            const opf::ScenarioOutcome o = opf::check_scenario(net, model, dec, d, method);
            csv << d.index << "," << o.feasible << "," << o.pf_diverged << "," << o.pl1 << ","
                << o.pl2 << "," << o.vl1 << "," << o.vl2 << "\n";
        }
    }
    write_report(cfg,
                 {{"case_hash", opf::report::hash_hex(text)},
                  {"model_hash", opf::report::hash_hex(mtext)}},
                 opf::report::to_json(rep));
    std::cout << "validate: p_hat " << rep.p_hat << " upper " << rep.upper << " vs eps "
              << rep.declared_eps << " -> " << (rep.pass ? "PASS" : "FAIL") << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"chance-constrained optimal power flow toolkit"};
    app.require_subcommand(1);

    RunConfig cfg;
    if (const char* env = std::getenv("OPFKIT_OUT_DIR")) cfg.out_dir = env;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--out", cfg.out_dir, "report directory");
        sub->add_option("--tol", cfg.tol, "solver tolerance override");
        sub->add_option("--max-iter", cfg.max_iter, "solver iteration cap");
        sub->add_option("--threads", cfg.threads, "cap on worker threads")
            ->check(CLI::PositiveNumber);
    };
    const auto prob = CLI::Range(1e-12, 1.0 - 1e-12);

    CLI::App* pf = app.add_subcommand("pf", "newton power flow from case setpoints");
    pf->add_option("--case", cfg.case_path, "case file")->required();
    add_common(pf);

    CLI::App* ed = app.add_subcommand("ed", "economic dispatch");
    ed->add_option("--case", cfg.case_path, "case file")->required();
    ed->add_option("--demand-mw", cfg.demand_mw, "demand (defaults to total case load)");
    add_common(ed);

    CLI::App* dcopf = app.add_subcommand("dcopf", "network-constrained dc dispatch");
    dcopf->add_option("--case", cfg.case_path, "case file")->required();
    add_common(dcopf);

    CLI::App* acopf = app.add_subcommand("acopf", "convexified nominal ac-opf");
    acopf->add_option("--case", cfg.case_path, "case file")->required();
    acopf->add_option("--rank-tol", cfg.rank_tol, "rank-one ratio tolerance");
    add_common(acopf);

    CLI::App* samples = app.add_subcommand("samples", "scenario sample-complexity bounds");
    samples->add_option("--eps", cfg.eps, "risk level")->check(prob);
    samples->add_option("--beta", cfg.beta, "confidence level")->check(prob);
    CLI::Option* nu_opt_s = samples->add_option("--nu", cfg.n_u, "shared decision dimension");
    samples->add_option("--case", cfg.case_path, "case file (derives --nu)");
    samples->add_option("--model", cfg.model_path, "model file (for --emit-scenarios)");
    samples->add_option("--bound", cfg.bound, "exact|explicit")
        ->check(CLI::IsMember({"exact", "explicit"}));
    samples->add_option("--seed", cfg.train_seed, "scenario seed");
    samples->add_option("--emit-scenarios", cfg.scenarios_out, "write a JSON-lines file");
    add_common(samples);

    CLI::App* swc = app.add_subcommand("swc", "scenario-with-certificates ac-opf design");
    swc->add_option("--case", cfg.case_path, "case file")->required();
    swc->add_option("--model", cfg.model_path, "uncertainty model")->required();
    swc->add_option("--eps", cfg.eps, "risk level")->check(prob);
    swc->add_option("--beta", cfg.beta, "confidence level")->check(prob);
    CLI::Option* nu_opt = swc->add_option("--nu", cfg.n_u, "override the decision dimension");
    swc->add_option("--gamma-b", cfg.gamma_b, "reactive-sum penalty weight")
        ->check(CLI::NonNegativeNumber);
    swc->add_option("--gamma-l", cfg.gamma_l, "line-flow penalty weight")
        ->check(CLI::NonNegativeNumber);
    swc->add_option("--lprob", cfg.l_prob, "penalized lines: all|none|i,j,...");
    swc->add_option("--train-seed", cfg.train_seed, "scenario seed");
    swc->add_option("--bound", cfg.bound, "exact|explicit sample count")
        ->check(CLI::IsMember({"exact", "explicit"}));
    swc->add_option("--scenarios-out", cfg.scenarios_out, "also write the sampled set");
    swc->add_option("--gamma-curve", cfg.gamma_curve, "sample counts for a gamma-vs-N csv");
    swc->add_option("--csv", cfg.csv_path, "csv file name for --gamma-curve");
    add_common(swc);

    CLI::App* validate = app.add_subcommand("validate", "monte-carlo risk estimate");
    validate->add_option("--case", cfg.case_path, "case file")->required();
    validate->add_option("--model", cfg.model_path, "uncertainty model")->required();
    validate->add_option("--decision", cfg.decision_path, "swc report or decision json")
        ->required();
    validate->add_option("--samples", cfg.samples, "validation draws")
        ->check(CLI::PositiveNumber);
    validate->add_option("--eta", cfg.eta, "confidence parameter")->check(prob);
    validate->add_option("--validate-seed", cfg.validate_seed, "fresh seed");
    CLI::Option* tseed = validate->add_option("--train-seed", cfg.train_seed,
                                              "training seed (cross-checked when given)");
    validate->add_option("--method", cfg.method, "pf-newton|sdp-feasibility")
        ->check(CLI::IsMember({"pf-newton", "sdp-feasibility"}));
    validate->add_option("--csv", cfg.csv_path, "per-scenario outcome csv");
    add_common(validate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (pf->parsed()) {
            cfg.subcommand = "pf";
            return cmd_pf(cfg);
        }
        if (ed->parsed()) {
            cfg.subcommand = "ed";
            return cmd_ed(cfg);
        }
        if (dcopf->parsed()) {
            cfg.subcommand = "dcopf";
            return cmd_dcopf(cfg);
        }
        if (acopf->parsed()) {
            cfg.subcommand = "acopf";
            return cmd_acopf(cfg);
        }
        if (samples->parsed()) {
            cfg.subcommand = "samples";
            return cmd_samples(cfg, nu_opt_s->count() > 0);
        }
        if (swc->parsed()) {
            cfg.subcommand = "swc";
            return cmd_swc(cfg, nu_opt->count() > 0);
        }
        if (validate->parsed()) {
            cfg.subcommand = "validate";
            if (tseed->count() > 0 && cfg.train_seed == cfg.validate_seed) {
                throw opf::ValidationError(
                    "validation seed must differ from the training seed");
            }
            return cmd_validate(cfg);
        }
    } catch (const opf::InfeasibleError& e) {
        std::cerr << "infeasible: " << e.what() << "\n";
        return kExitInfeasible;
    } catch (const opf::ValidationError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const opf::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const opf::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitUsage;
}
