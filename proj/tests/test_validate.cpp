#include <doctest.h>

#include <cmath>

#include "opf/stats.hpp"
#include "opf/validate.hpp"

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
    return Network::from_parts({1.0, 1.0}, std::move(buses),
                               {line(0, 1), line(1, 2), line(0, 2)}, {g0, g1});
}

UncertaintyModel box_model(const Network& net, double width) {
    std::string doc = R"({
      "loads": [
        {"bus": 2, "support": {"kind": "box", "re_mw": [-W, W], "im_mvar": [-0.02, 0.02]}}
      ]
    })";
    size_t pos;
    while ((pos = doc.find("W,")) != std::string::npos) {
        doc.replace(pos, 1, std::to_string(width));
    }
    while ((pos = doc.find("W]")) != std::string::npos) {
        doc.replace(pos, 1, std::to_string(width));
    }
    return UncertaintyModel::parse(doc, net);
}

UncertaintyVector zero_delta(int n) {
    UncertaintyVector d;
    d.load_delta = Eigen::VectorXcd::Zero(n);
    d.renew_delta = Eigen::VectorXcd::Zero(n);
    return d;
}

}  // namespace

TEST_SUITE("validate") {
    TEST_CASE("the zero scenario passes against a trained decision") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.05, 4), 11, {});
        const ScenarioOutcome o =
            check_scenario(net, model, sol.decision, zero_delta(3), CheckMethod::PfNewton);
        CHECK(o.feasible);
        CHECK(!o.pf_diverged);
    }

    TEST_CASE("an engineered capacity breach is flagged with PL.1 detail") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        ControlDecision dec;
        dec.gen_buses = {1};
        dec.p_gen = (Eigen::VectorXd(1) << 1.45).finished();  // near the 1.5 cap
        dec.w_u = (Eigen::VectorXd(1) << 1.0).finished();
        dec.alpha = DeploymentVector::checked((Eigen::VectorXd(1) << 1.0).finished());
        dec.eps = 0.2;
        dec.seed = 1;
        UncertaintyVector d = zero_delta(3);
        d.load_delta(2) = {0.2, 0.0};  // pushes the response to 1.65 > 1.5
        const ScenarioOutcome o = check_scenario(net, model, dec, d, CheckMethod::PfNewton);
        CHECK(!o.feasible);
        CHECK(o.pl1 >= 1);
    }

    TEST_CASE("both feasibility methods agree away from the relaxation gap") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.15);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 19, {});
        const ScenarioSet probes = sample(model, 200, 23);
        int agree = 0, total = 0;
        for (const auto& d : probes.scenarios) {
            const ScenarioOutcome a =
                check_scenario(net, model, sol.decision, d, CheckMethod::PfNewton);
            const ScenarioOutcome b =
                check_scenario(net, model, sol.decision, d, CheckMethod::SdpFeasibility);
            agree += (a.feasible == b.feasible) ? 1 : 0;
            ++total;
        }
        MESSAGE("method agreement rate: ", agree, "/", total);
        // disagreements can only stem from the relaxation gap; near-total
        // agreement expected on this small case
        CHECK(agree >= total - 4);
    }

    TEST_CASE("estimate_risk refuses to reuse the training seed") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.05);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 31, {});
        CHECK_THROWS_WITH_AS(estimate_risk(net, model, sol.decision, 100, 0.05, 31),
                             doctest::Contains("seed"), ValidationError);
    }

    TEST_CASE("zero violations produce the closed-form upper bound and PASS") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.05);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.05, 4), 37, {});
        const RiskReport rep = estimate_risk(net, model, sol.decision, 1000, 0.05, 38);
        CHECK(rep.samples == 1000);
        CHECK(rep.violations == 0);
        CHECK(rep.upper == doctest::Approx(1.0 - std::pow(0.05, 1.0 / 1000.0)).epsilon(1e-9));
        CHECK(rep.lower == 0.0);
        CHECK(rep.pass);
    }

    TEST_CASE("determinism: identical inputs give identical reports") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 41, {});
        const RiskReport a = estimate_risk(net, model, sol.decision, 300, 0.05, 43);
        const RiskReport b = estimate_risk(net, model, sol.decision, 300, 0.05, 43);
        CHECK(a.violations == b.violations);
        CHECK(a.p_hat == b.p_hat);
        CHECK(a.upper == b.upper);
        CHECK(a.lower == b.lower);
    }

    TEST_CASE("thread cap does not change the report") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 71, {});
        const RiskReport a = estimate_risk(net, model, sol.decision, 400, 0.05, 72,
                                           CheckMethod::PfNewton, 1);
        const RiskReport b = estimate_risk(net, model, sol.decision, 400, 0.05, 72,
                                           CheckMethod::PfNewton, 4);
        CHECK(a.violations == b.violations);
        CHECK(a.p_hat == b.p_hat);
        CHECK(a.upper == b.upper);
        CHECK(a.pl2 == b.pl2);
    }

    TEST_CASE("sdp feasibility method drives a full risk estimate") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.05);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 81, {});
        const RiskReport rep = estimate_risk(net, model, sol.decision, 60, 0.05, 82,
                                             CheckMethod::SdpFeasibility);
        CHECK(rep.method == CheckMethod::SdpFeasibility);
        CHECK(rep.violations == 0);  // tiny supports, freshly trained design
    }

    TEST_CASE("interval widths shrink on a doubling sweep") {
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.1, 4), 47, {});
        double prev = 1.0;
        for (int m : {100, 200, 400}) {
            const RiskReport rep = estimate_risk(net, model, sol.decision, m, 0.05, 53);
            const double width = rep.upper - rep.lower;
            CHECK(width < prev);
            CHECK(rep.lower <= rep.p_hat + 1e-12);
            CHECK(rep.upper >= rep.p_hat - 1e-12);
            prev = width;
        }
    }

    TEST_CASE("gaussian tails are reported separately from bulk violations") {
        const Network net = uncertain_case();
        const char* gauss = R"({
          "loads": [
            {"bus": 2, "support": {"kind": "gaussian",
              "cov_mva2": [[0.0004, 0.0], [0.0, 0.0001]]}}
          ]
        })";
        const UncertaintyModel model = UncertaintyModel::parse(gauss, net);
        REQUIRE(model.has_unbounded_support());
        // tail membership is the 3-sigma box per component
        UncertaintyVector d = zero_delta(3);
        d.load_delta(2) = {0.05, 0.0};
        CHECK(!model.is_tail_draw(d));
        d.load_delta(2) = {0.07, 0.0};  // 3 sigma = 0.06 pu
        CHECK(model.is_tail_draw(d));
        d.load_delta(2) = {0.0, 0.031};  // 3 sigma = 0.03 pu
        CHECK(model.is_tail_draw(d));

        // a deliberately fragile decision: violations concentrate at large draws
        const SwcSolution sol =
            solve_swc(net, model, SampleComplexitySpec(0.2, 0.2, 4), 61, {});
        const RiskReport rep = estimate_risk(net, model, sol.decision, 800, 0.05, 62);
        CHECK(rep.unbounded_model);
        CHECK(rep.tail_violations <= rep.violations);
    }

    TEST_CASE("statistical soundness on a synthetic known-p decision") {
        // Construct a pure-threshold feasibility rule with violation
        // probability p = 0.1 by thresholding the mismatch of a uniform box:
        // mismatch ~ U(-w, w), event {mismatch > 0.8 w} has probability 0.1.
        // The binomial machinery (sampling + counting + CP bounds) is then
        // auditable against the known truth. Each endpoint is one-sided at
        // level eta (the convention the zero-count closed form fixes), so the
        // sound guarantees are P[p > upper] <= eta and P[p < lower] <= eta.
        const Network net = uncertain_case();
        const UncertaintyModel model = box_model(net, 0.1);
        const double threshold = 0.08;
        const double p_true = 0.1;
        const double eta = 0.05;
        const int reps = 500;
        const int m = 200;
        int upper_misses = 0;
        int lower_misses = 0;
        for (int r = 0; r < reps; ++r) {
            const ScenarioSet set = sample(model, m, 1000 + r);
            int viol = 0;
            for (const auto& d : set.scenarios) viol += (mismatch(d) > threshold) ? 1 : 0;
            const auto iv = stats::clopper_pearson(viol, m, eta);
            upper_misses += (iv.upper < p_true) ? 1 : 0;
            lower_misses += (iv.lower > p_true) ? 1 : 0;
        }
        // three-sigma slack over the binomial sampling noise of 500 reps
        const double noise = 3.0 * std::sqrt(eta * (1.0 - eta) / reps);
        CHECK(static_cast<double>(upper_misses) / reps <= eta + noise);
        CHECK(static_cast<double>(lower_misses) / reps <= eta + noise);
        // and the two-sided coverage the pair of bounds implies
        const double covered = 1.0 - static_cast<double>(upper_misses + lower_misses) / reps;
        CHECK(covered >= 1.0 - 2.0 * eta - noise);
    }
}
