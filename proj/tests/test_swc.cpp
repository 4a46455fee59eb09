#include <doctest.h>

#include <cmath>
#include <functional>

#include "opf/relaxation.hpp"
#include "opf/stats.hpp"
#include "opf/swc.hpp"

using namespace opf;

namespace {

Network uncertain_case() {
    std::vector<Bus> buses(3);
    buses[0] = {0, BusKind::Slack, false, 0.9, 1.1, 0.0, 0.0};
    buses[1] = {1, BusKind::Generator, false, 0.9, 1.1, 0.0, 0.0};
    buses[2] = {2, BusKind::Load, true, 0.9, 1.1, 0.8, 0.2};
    auto line = [](int f, int t) {
        Line l;
        l.from = f;
        l.to = t;
        l.admittance = 1.0 / std::complex<double>(0.01, 0.1);
        l.dv_max = 0.25;
        return l;
    };
    Generator g0;
    g0.bus = 0;
    g0.p_min = 0.0;
    g0.p_max = 2.0;
    g0.q_min = -1.0;
    g0.q_max = 1.0;
    g0.c2 = 1.0;
    g0.c1 = 0.2;
    Generator g1 = g0;
    g1.bus = 1;
    g1.p_max = 1.5;
    g1.c2 = 2.0;
    g1.c1 = 0.15;
    return Network::from_parts({1.0, 1.0}, std::move(buses),
                               {line(0, 1), line(1, 2), line(0, 2)}, {g0, g1});
}

UncertaintyModel box_model(const Network& net, double width = 0.05) {
    const std::string doc = R"({
      "loads": [
        {"bus": 2, "support": {"kind": "box", "re_mw": [-W, W], "im_mvar": [-0.3, 0.3]}}
      ]
    })";
    std::string s = doc;
    const std::string w = std::to_string(width);
    size_t pos;
    while ((pos = s.find("W")) != std::string::npos) s.replace(pos, 1, w);
    return UncertaintyModel::parse(s, net);
}

}  // namespace

TEST_SUITE("swc") {
    TEST_CASE("explicit bound evaluates the closed form") {
        // hand evaluation: e/(0.1(e-1)) = 15.81977, ln(1e6) = 13.81551,
        // 15.81977 * 22.81551 = 360.94 -> 361
        const SampleComplexitySpec spec(0.1, 1e-6, 10);
        CHECK(n_swc_explicit(spec) == 361);
        const double e = std::exp(1.0);
        const double direct = std::ceil(e / (0.1 * (e - 1.0)) * (std::log(1e6) + 9.0));
        CHECK(n_swc_explicit(spec) == static_cast<long>(direct));
    }

    TEST_CASE("explicit bound decreases in eps") {
        long prev = std::numeric_limits<long>::max();
        for (int i = 1; i <= 10; ++i) {
            const double eps = i * 0.09;
            const long n = n_swc_explicit(SampleComplexitySpec(eps, 1e-3, 5));
            CHECK(n <= prev);
            prev = n;
        }
    }

    TEST_CASE("spec rejects out-of-range levels") {
        CHECK_THROWS_AS(SampleComplexitySpec(0.1, 1.0, 1), ValidationError);
        CHECK_THROWS_AS(SampleComplexitySpec(0.0, 0.5, 1), ValidationError);
        CHECK_THROWS_AS(SampleComplexitySpec(1.0, 0.5, 1), ValidationError);
        CHECK_THROWS_AS(SampleComplexitySpec(0.1, 0.0, 1), ValidationError);
        CHECK_THROWS_AS(SampleComplexitySpec(0.1, 0.5, 0), ValidationError);
    }

    TEST_CASE("exact count: degenerate tail matches the closed form") {
        // n_u = 1: (1-eps)^N <= beta -> N = ceil(ln beta / ln(1-eps))
        const SampleComplexitySpec spec(0.1, 0.01, 1);
        CHECK(n_swc_exact(spec) == 44);
        CHECK(n_swc_exact(spec) ==
              static_cast<long>(std::ceil(std::log(0.01) / std::log(0.9))));
    }

    TEST_CASE("exact count sits at the definition boundary") {
        const SampleComplexitySpec spec(0.05, 1e-6, 3);
        const long n = n_swc_exact(spec);
        // direct summation of the three binomial terms at N and N-1
        auto tail = [&](long m) {
            double acc = 0.0;
            for (int i = 0; i <= 2; ++i) {
                double logc = std::lgamma(m + 1.0) - std::lgamma(i + 1.0) -
                              std::lgamma(m - i + 1.0);
                acc += std::exp(logc + i * std::log(0.05) + (m - i) * std::log(0.95));
            }
            return acc;
        };
        CHECK(tail(n) <= 1e-6);
        CHECK(tail(n - 1) > 1e-6);
    }

    TEST_CASE("exact never exceeds explicit on a 27-point grid") {
        for (double eps : {0.05, 0.1, 0.2}) {
            for (double beta : {1e-2, 1e-4, 1e-6}) {
                for (int nu : {1, 7, 25}) {
                    const SampleComplexitySpec spec(eps, beta, nu);
                    CHECK(n_swc_exact(spec) <= n_swc_explicit(spec));
                }
            }
        }
    }

    TEST_CASE("exact count monotone: nonincreasing in eps, nondecreasing in n_u") {
        long prev = std::numeric_limits<long>::max();
        for (double eps : {0.02, 0.05, 0.1, 0.2, 0.4}) {
            const long n = n_swc_exact(SampleComplexitySpec(eps, 1e-3, 7));
            CHECK(n <= prev);
            prev = n;
        }
        prev = 0;
        for (int nu : {1, 2, 5, 10, 20}) {
            const long n = n_swc_exact(SampleComplexitySpec(0.1, 1e-3, nu));
            CHECK(n >= prev);
            prev = n;
        }
    }

    TEST_CASE("default shared-decision count is 3 n_g + 1") {
        const Network net = uncertain_case();
        CHECK(default_n_u(net) == 4);  // one non-slack generator
    }

    TEST_CASE("degenerate point-mass training reproduces the nominal design") {
        const Network net = uncertain_case();
        const UncertaintyModel model = UncertaintyModel::point_mass(net);
        SwcOptions opts;
        const SwcSolution swc = solve_swc(net, model, SampleComplexitySpec(0.1, 1e-3, 4), 17,
                                          opts);
        const RelaxedOpfSolution nominal = solve_nominal(net);

        // the lone controllable generator matches the nominal dispatch
        CHECK(swc.decision.p_gen(0) ==
              doctest::Approx(nominal.p_gen(1)).epsilon(2e-5));
        // gamma equals the nominal optimum
        CHECK(swc.objective == doctest::Approx(nominal.objective).epsilon(2e-5));
        // degenerate alpha resolves to the uniform tie-break
        CHECK(swc.decision.alpha.alpha(0) == doctest::Approx(1.0).epsilon(1e-6));
        // provenance recorded
        CHECK(swc.decision.eps == 0.1);
        CHECK(swc.decision.n_samples == n_swc_exact(SampleComplexitySpec(0.1, 1e-3, 4)));
        CHECK(swc.decision.seed == 17);
    }

    TEST_CASE("variable count grows affinely in the scenario count") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net);
        std::vector<int> totals;
        int per_scenario = 0, certificate = 0;
        for (int n : {1, 2, 3}) {
            const ScenarioSet scen = sample(model, n, 5);
            const SwcAssembly a = assemble_swc(net, model, scen, {0.0, 0.0}, {});
            totals.push_back(a.program.num_vars);
            per_scenario = a.vars_per_scenario;
            certificate = a.certificate_vars_per_scenario;
        }
        CHECK(totals[1] - totals[0] == per_scenario);
        CHECK(totals[2] - totals[1] == per_scenario);
        // certificates: Q^G per unit + slack unit's P + the embedded lift
        const int expected_cert = 2 + 1 + conic::svec_dim(6);
        CHECK(certificate == expected_cert);
        CHECK(per_scenario >= certificate);
    }

    TEST_CASE("scenario blocks share the controls with identical patterns") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net);
        const ScenarioSet scen = sample(model, 4, 23);
        const SwcAssembly a = assemble_swc(net, model, scen, {0.0, 0.0}, {});
        // structural hash of the W^u tie pattern per scenario: the set of
        // (column, coefficient) pairs touching shared variables must agree
        const Eigen::SparseMatrix<double> at = a.program.A.transpose();
        std::vector<size_t> hashes;
        for (int i = 0; i < 4; ++i) {
            size_t h = 0;
            auto mix = [&h](double v) {
                h ^= std::hash<double>()(v) + 0x9e3779b9 + (h << 6) + (h >> 2);
            };
            for (int j = 0; j < static_cast<int>(a.wu_var.size()); ++j) {
                // count rows touching both wu[j] and scenario i's lift block
                const int blk_off = a.w_refs[i].m.offset;
                const int blk_dim = conic::svec_dim(a.w_refs[i].m.order);
                for (Eigen::SparseMatrix<double>::InnerIterator it(at, a.wu_var[j]); it;
                     ++it) {
                    const int row = static_cast<int>(it.index());
                    // scan the row for entries inside scenario i's block
                    for (int col = blk_off; col < blk_off + blk_dim; ++col) {
                        const double v = a.program.A.coeff(row, col);
                        if (v != 0.0) {
                            mix(it.value());
                            mix(v);
                            mix(col - blk_off);
                        }
                    }
                }
            }
            hashes.push_back(h);
        }
        for (size_t i = 1; i < hashes.size(); ++i) CHECK(hashes[i] == hashes[0]);
    }

    TEST_CASE("shrinking supports never raise the objective") {
        const Network net = uncertain_case();
        double prev = std::numeric_limits<double>::infinity();
        for (double scale : {1.0, 0.5, 0.25}) {
            const UncertaintyModel model = box_model(net, 0.2 * scale);
            SwcOptions opts;
            const SwcSolution sol =
                solve_swc(net, model, SampleComplexitySpec(0.2, 0.05, 4), 41, opts);
            CHECK(sol.objective <= prev + 1e-7);
            prev = sol.objective;
        }
    }

    TEST_CASE("adding scenarios never lowers the optimum") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.2);
        double prev = -std::numeric_limits<double>::infinity();
        for (int n : {5, 10, 20}) {
            const ScenarioSet scen = sample(model, n, 77);
            const SwcAssembly a = assemble_swc(net, model, scen, {0.0, 0.0}, {});
            const conic::ConeSolution sol = conic::solve(a.program);
            REQUIRE(sol.status == conic::SolveStatus::Optimal);
            const double gamma = sol.x(a.gamma_var);
            CHECK(gamma >= prev - 1e-7);
            prev = gamma;
        }
    }

    TEST_CASE("capacity-breaking scenario is reported infeasible") {
        const Network net = uncertain_case();
        // a load jump no deployment can cover: total pmax = 3.5, load 0.8 + 4.0
        const std::string doc = R"({
          "loads": [{"bus": 2, "support": {"kind": "box", "re_mw": [4.0, 4.0]}}]
        })";
        const UncertaintyModel model = UncertaintyModel::parse(doc, net);
        SwcOptions opts;
        CHECK_THROWS_AS(
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.05, 4), 3, opts),
            InfeasibleError);
    }

    TEST_CASE("training scenarios recheck feasible against the certificates") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        SwcOptions opts;
        const SampleComplexitySpec spec(0.2, 0.05, 4);
        const SwcSolution sol = solve_swc(net, model, spec, 29, opts);
        const ScenarioSet scen = sample(model, sol.decision.n_samples, 29);
        REQUIRE(scen.size() == static_cast<int>(sol.certificates.size()));
        for (int i = 0; i < scen.size(); ++i) {
            const ScenarioResidual r =
                recheck_scenario(net, model, scen.scenarios[i], sol.decision,
                                 sol.certificates[i]);
            CHECK(r.balance <= 1e-6);
            CHECK(r.bounds <= 1e-6);
            // the lifted matrix is psd
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sol.certificates[i].w,
                                                               Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues()(0) >= -1e-7);
        }
        // simplex feasibility at the solution
        CHECK(sol.decision.alpha.alpha.sum() == doctest::Approx(1.0).epsilon(1e-8));
        CHECK(sol.decision.alpha.alpha.minCoeff() >= -1e-8);
    }

    TEST_CASE("real-time rule: identical mismatch gives identical setpoints") {
        ControlDecision dec;
        dec.gen_buses = {1, 2};
        dec.p_gen = (Eigen::VectorXd(2) << 0.4, 0.6).finished();
        dec.w_u = (Eigen::VectorXd(2) << 1.02, 0.98).finished();
        dec.alpha = DeploymentVector::checked((Eigen::VectorXd(2) << 0.3, 0.7).finished());

        UncertaintyVector z;
        z.load_delta = Eigen::VectorXcd::Zero(3);
        z.renew_delta = Eigen::VectorXcd::Zero(3);
        CHECK((apply_realtime(dec, z) - dec.p_gen).norm() == 0.0);

        UncertaintyVector d1 = z, d2 = z;
        d1.load_delta(0) = {0.25, 0.9};   // imaginary parts do not matter
        d2.load_delta(2) = {0.1, -0.4};
        d2.renew_delta(1) = {-0.15, 0.2};
        REQUIRE(mismatch(d1) == doctest::Approx(mismatch(d2)));
        CHECK((apply_realtime(dec, d1) - apply_realtime(dec, d2)).norm() <= 1e-15);

        // voltage setpoints are defined whenever the lift respects VL.1
        const Eigen::VectorXd v = dec.voltage_setpoints();
        CHECK(v(0) == doctest::Approx(std::sqrt(1.02)));
        CHECK(v(1) == doctest::Approx(std::sqrt(0.98)));
    }

    TEST_CASE("per-scenario cost breakdown sits under gamma") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        SwcOptions opts;
        opts.penalties = {0.2, 0.3};
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.25, 0.1, 4), 91, opts);
        for (const ScenarioCertificate& c : sol.certificates) {
            CHECK(c.line_penalty >= -1e-9);
            CHECK(c.gen_cost + c.q_penalty + c.line_penalty <= sol.objective + 1e-6);
        }
        // at least one scenario's breakdown is tight against gamma
        double best = -1e30;
        for (const ScenarioCertificate& c : sol.certificates) {
            best = std::max(best, c.gen_cost + c.q_penalty + c.line_penalty);
        }
        CHECK(best == doctest::Approx(sol.objective).epsilon(1e-5));
    }

    TEST_CASE("gamma_l > 0 materializes flow penalties and raises gamma") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.05);
        const ScenarioSet scen = sample(model, 3, 7);
        const SwcAssembly plain = assemble_swc(net, model, scen, {0.0, 0.0}, {0, 1, 2});
        const SwcAssembly flows = assemble_swc(net, model, scen, {0.0, 0.5}, {0, 1, 2});
        CHECK(flows.program.count_rows_labeled("line-flow") > 0);
        CHECK(plain.program.count_rows_labeled("line-flow") == 0);
        const conic::ConeSolution a = conic::solve(plain.program);
        const conic::ConeSolution b = conic::solve(flows.program);
        REQUIRE(a.status == conic::SolveStatus::Optimal);
        REQUIRE(b.status == conic::SolveStatus::Optimal);
        CHECK(b.x(flows.gamma_var) > a.x(plain.gamma_var));
        // reactive penalty behaves likewise through gamma_b
        const SwcAssembly qpen = assemble_swc(net, model, scen, {0.3, 0.0}, {});
        const conic::ConeSolution c = conic::solve(qpen.program);
        REQUIRE(c.status == conic::SolveStatus::Optimal);
        CHECK(c.x(qpen.gamma_var) != doctest::Approx(a.x(plain.gamma_var)));
    }
}
