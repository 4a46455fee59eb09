#include <doctest.h>

#include <random>

#include "opf/dispatch.hpp"
#include "oracles.hpp"

using namespace opf;

namespace {

Generator make_gen(int bus, double pmin, double pmax, double c2, double c1, double c0 = 0.0) {
    Generator g;
    g.bus = bus;
    g.p_min = pmin;
    g.p_max = pmax;
    g.q_min = -10.0;
    g.q_max = 10.0;
    g.c2 = c2;
    g.c1 = c1;
    g.c0 = c0;
    return g;
}

// triangle network with two generators and one tightly limited line
Network triangle_net(double tight_limit) {
    std::vector<Bus> buses(3);
    buses[0] = {0, BusKind::Slack, false, 0.9, 1.1, 0.0, 0.0};
    buses[1] = {1, BusKind::Generator, false, 0.9, 1.1, 0.0, 0.0};
    buses[2] = {2, BusKind::Load, false, 0.9, 1.1, 1.0, 0.0};
    auto line = [](int f, int t, double lim) {
        Line l;
        l.from = f;
        l.to = t;
        l.admittance = {0.0, -10.0};
        l.dv_max = lim;
        return l;
    };
    std::vector<Line> lines = {line(0, 1, 1.0), line(0, 2, tight_limit), line(1, 2, 1.0)};
    std::vector<Generator> gens = {make_gen(0, 0.0, 2.0, 1.0, 0.0),
                                   make_gen(1, 0.0, 2.0, 1.0, 0.5)};
    return Network::from_parts({1.0, 1.0}, std::move(buses), std::move(lines), std::move(gens));
}

}  // namespace

TEST_SUITE("dispatch") {
    TEST_CASE("hand KKT check: P^2 vs 2P^2 sharing a demand of 3") {
        // equal marginal costs: 2 P1 = 4 P2 and P1 + P2 = 3 -> (2, 1)
        std::vector<Generator> gens = {make_gen(0, 0.0, 10.0, 1.0, 0.0),
                                       make_gen(1, 0.0, 10.0, 2.0, 0.0)};
        const DispatchResult r = solve_ed(gens, 3.0);
        CHECK(r.p_gen(0) == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(r.p_gen(1) == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(r.price == doctest::Approx(4.0).epsilon(1e-8));
        CHECK(r.total_cost == doctest::Approx(4.0 + 2.0).epsilon(1e-9));
    }

    TEST_CASE("single generator takes the whole demand") {
        std::vector<Generator> gens = {make_gen(0, 0.0, 5.0, 0.7, 2.0, 1.0)};
        const DispatchResult r = solve_ed(gens, 3.3);
        CHECK(r.p_gen(0) == doctest::Approx(3.3).epsilon(1e-12));
    }

    TEST_CASE("demand at aggregate maximum pins every unit") {
        std::vector<Generator> gens = {make_gen(0, 0.1, 1.0, 1.0, 0.0),
                                       make_gen(1, 0.2, 2.0, 2.0, 1.0),
                                       make_gen(2, 0.0, 0.5, 0.0, 3.0)};
        const DispatchResult r = solve_ed(gens, 3.5);
        CHECK(r.p_gen(0) == doctest::Approx(1.0));
        CHECK(r.p_gen(1) == doctest::Approx(2.0));
        CHECK(r.p_gen(2) == doctest::Approx(0.5));
    }

    TEST_CASE("infeasible demand is rejected") {
        std::vector<Generator> gens = {make_gen(0, 0.5, 1.0, 1.0, 0.0)};
        CHECK_THROWS_AS(solve_ed(gens, 2.0), InfeasibleError);
        CHECK_THROWS_AS(solve_ed(gens, 0.1), InfeasibleError);
    }

    TEST_CASE("balance holds to 1e-9 and beats random feasible dispatches") {
        std::mt19937 rng(101);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (int inst = 0; inst < 20; ++inst) {
            const int ng = 2 + static_cast<int>(rng() % 4);
            std::vector<Generator> gens;
            double pmin = 0.0, pmax = 0.0;
            for (int k = 0; k < ng; ++k) {
                const double lo = u(rng);
                const double hi = lo + 0.5 + 2.0 * u(rng);
                gens.push_back(make_gen(k, lo, hi, 0.2 + 2.0 * u(rng) * (k % 2 ? 1.0 : 0.0),
                                        2.0 * u(rng)));
                pmin += lo;
                pmax += hi;
            }
            const double demand = pmin + (pmax - pmin) * (0.1 + 0.8 * u(rng));
            const DispatchResult r = solve_ed(gens, demand);
            CHECK(std::abs(r.p_gen.sum() - demand) <= 1e-9);

            // Monte Carlo domination: no random feasible dispatch does better
            for (int t = 0; t < 500; ++t) {
                Eigen::VectorXd p(ng);
                double remaining = demand;
                double minleft = pmin;
                bool ok = true;
                for (int k = 0; k < ng; ++k) {
                    minleft -= gens[k].p_min;
                    double maxleft = 0.0;
                    for (int j = k + 1; j < ng; ++j) maxleft += gens[j].p_max;
                    const double lo = std::max(gens[k].p_min, remaining - maxleft);
                    const double hi = std::min(gens[k].p_max, remaining - minleft);
                    if (lo > hi) {
                        ok = false;
                        break;
                    }
                    p(k) = (k == ng - 1) ? remaining : lo + (hi - lo) * u(rng);
                    remaining -= p(k);
                }
                if (!ok) continue;
                double cost = 0.0;
                for (int k = 0; k < ng; ++k) cost += gens[k].cost(p(k));
                CHECK(r.total_cost <= cost + 1e-7);
            }
        }
    }

    TEST_CASE("uncongested dc-opf collapses to economic dispatch") {
        const Network net = triangle_net(1.0);
        Eigen::VectorXd loads(3);
        loads << 0.0, 0.0, 1.0;
        const DcOpfResult r = solve_dc_opf(net, loads);
        const DispatchResult ed = solve_ed(net.generators(), 1.0);
        CHECK(r.dispatch.p_gen(0) == doctest::Approx(ed.p_gen(0)).epsilon(1e-5));
        CHECK(r.dispatch.p_gen(1) == doctest::Approx(ed.p_gen(1)).epsilon(1e-5));
        CHECK(r.dispatch.total_cost == doctest::Approx(ed.total_cost).epsilon(1e-6));
        // lossless dc model balances exactly
        CHECK(r.dispatch.p_gen.sum() - loads.sum() == doctest::Approx(0.0).epsilon(1e-9));
    }

    TEST_CASE("zero loads give zero dispatch, cost, angles") {
        const Network net = triangle_net(1.0);
        const DcOpfResult r = solve_dc_opf(net, Eigen::VectorXd::Zero(3));
        CHECK(r.dispatch.p_gen.lpNorm<Eigen::Infinity>() <= 1e-7);
        CHECK(r.dispatch.total_cost == doctest::Approx(0.0).epsilon(1e-6));
        CHECK(r.angles.lpNorm<Eigen::Infinity>() <= 1e-6);
    }

    TEST_CASE("tight line binds with a nonzero dual; brute force agrees") {
        const double limit = 0.04;  // binds: the unconstrained optimum needs 0.0542
        const Network net = triangle_net(limit);
        Eigen::VectorXd loads(3);
        loads << 0.0, 0.0, 1.0;
        const DcOpfResult r = solve_dc_opf(net, loads);

        // brute force the 1-dim dispatch family: p1 in [0, 1], p0 = 1 - p1,
        // solve dc angles, keep angle-feasible points
        const DcModel dc(net);
        double best = 1e30;
        for (int i = 0; i <= 1000; ++i) {
            const double p1 = i * 1e-3;
            const double p0 = 1.0 - p1;
            Eigen::VectorXd pn(2);
            pn << p1, -1.0;  // non-slack injections (bus1 gen, bus2 load)
            const Eigen::VectorXd th = dc.solve_angles(pn);
            bool feasible = true;
            for (int li = 0; li < net.num_lines(); ++li) {
                const Line& l = net.lines()[li];
                if (std::abs(th(l.from) - th(l.to)) > *l.dv_max + 1e-9) feasible = false;
            }
            if (!feasible) continue;
            const double cost =
                net.generators()[0].cost(p0) + net.generators()[1].cost(p1);
            best = std::min(best, cost);
        }
        REQUIRE(best < 1e30);
        CHECK(r.dispatch.total_cost == doctest::Approx(best).epsilon(2e-3));
        // the tight line (index 1: 0-2) carries a binding constraint
        CHECK(std::abs(r.line_flows(1)) == doctest::Approx(limit * 10.0).epsilon(1e-4));
        CHECK(r.line_duals(1) > 1e-3);
    }

    TEST_CASE("relaxing line limits never increases the optimum") {
        Eigen::VectorXd loads(3);
        loads << 0.0, 0.0, 1.0;
        double prev = 1e30;
        for (double lim : {0.04, 0.05, 0.08, 1.0}) {
            const DcOpfResult r = solve_dc_opf(triangle_net(lim), loads);
            CHECK(r.dispatch.total_cost <= prev + 1e-7);
            prev = r.dispatch.total_cost;
        }
    }

    TEST_CASE("congestion infeasibility carries a hint") {
        const Network net = triangle_net(1.0);
        Eigen::VectorXd loads(3);
        loads << 0.0, 0.0, 10.0;  // beyond total transfer capability of the gens
        try {
            solve_dc_opf(net, loads);
            FAIL("expected InfeasibleError");
        } catch (const InfeasibleError& e) {
            CHECK(!e.hint().empty());
        }
    }
}
