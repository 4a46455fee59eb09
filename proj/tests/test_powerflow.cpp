#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "opf/powerflow.hpp"
#include "oracles.hpp"

using namespace opf;

namespace {

Network lossless_two_bus(double load_p = 1.0) {
    std::vector<Bus> buses(2);
    buses[0] = {0, BusKind::Slack, false, 0.9, 1.1, 0.0, 0.0};
    buses[1] = {1, BusKind::Load, false, 0.9, 1.1, load_p, 0.0};
    Line l;
    l.from = 0;
    l.to = 1;
    l.admittance = {0.0, -10.0};
    l.dv_max = 0.5;
    std::vector<Generator> gens;
    return Network::from_parts({1.0, 1.0}, std::move(buses), {l}, std::move(gens));
}

// Bus 1 held at |V| = 1 with a pure active-power draw, so the single-line
// closed form P = |B| sin(theta_0 - theta_1) applies exactly.
InjectionSpec unit_magnitude_load_spec(double p_load) {
    InjectionSpec spec;
    spec.role = {BusRole::Slack, BusRole::PV};
    spec.v_set = Eigen::Vector2d(1.0, 1.0);
    spec.p_gen = Eigen::Vector2d(0.0, 0.0);
    spec.p_other = Eigen::Vector2d(0.0, -p_load);
    spec.q_other = Eigen::Vector2d(0.0, 0.0);
    return spec;
}

}  // namespace

TEST_SUITE("powerflow") {
    TEST_CASE("zero voltage difference leaves the raw injections") {
        const Network net = lossless_two_bus();
        ComplexVoltageState st;
        st.magnitude = Eigen::Vector2d(1.0, 1.0);
        st.angle = Eigen::Vector2d(0.0, 0.0);
        Eigen::VectorXcd inj(2);
        inj << std::complex<double>(0.3, 0.1), std::complex<double>(-0.2, 0.05);
        Eigen::VectorXd dp, dq;
        pf_residual(net, st, inj, dp, dq);
        CHECK(dp(0) == doctest::Approx(0.3));
        CHECK(dp(1) == doctest::Approx(-0.2));
        CHECK(dq(0) == doctest::Approx(0.1));
        CHECK(dq(1) == doctest::Approx(0.05));
    }

    TEST_CASE("two-bus residual against the complex-arithmetic oracle") {
        std::vector<Bus> buses(2);
        buses[0] = {0, BusKind::Slack, false, 0.9, 1.1, 0.0, 0.0};
        buses[1] = {1, BusKind::Load, false, 0.9, 1.1, 0.0, 0.0};
        Line l;
        l.from = 0;
        l.to = 1;
        l.admittance = {1.0, -10.0};
        l.dv_max = 0.5;
        const Network net = Network::from_parts({1.0, 1.0}, std::move(buses), {l}, {});

        ComplexVoltageState st;
        st.magnitude = Eigen::Vector2d(1.0, 1.0);
        st.angle = Eigen::Vector2d(0.0, -0.1);

        // oracle: direct evaluation of -Re{(1 - V_2)^* y^*} with std::complex
        const std::complex<double> v2 = std::polar(1.0, -0.1);
        const std::complex<double> y(1.0, -10.0);
        const std::complex<double> s1 = (1.0 - v2);
        const double expected_dp1 = -((std::conj(s1) * std::conj(y))).real();
        const double expected_dq1 = -((std::conj(s1) * std::conj(y))).imag();

        Eigen::VectorXd dp, dq;
        pf_residual(net, st, Eigen::VectorXcd::Zero(2), dp, dq);
        CHECK(dp(0) == doctest::Approx(expected_dp1).epsilon(1e-14));
        CHECK(dq(0) == doctest::Approx(expected_dq1).epsilon(1e-14));
    }

    TEST_CASE("loss accounting on a random 4-bus case") {
        std::mt19937 rng(17);
        const Network net = oracle::random_network(rng, 4, 1);
        std::vector<std::complex<double>> v;
        for (int k = 0; k < 4; ++k) {
            v.push_back(std::polar(0.95 + 0.1 * (k % 2), 0.05 * k - 0.1));
        }
        ComplexVoltageState st;
        st.magnitude.resize(4);
        st.angle.resize(4);
        for (int k = 0; k < 4; ++k) {
            st.magnitude(k) = std::abs(v[k]);
            st.angle(k) = std::arg(v[k]);
        }
        // oracle: total calculated injection equals total line losses
        double loss = 0.0;
        for (const Line& l : net.lines()) {
            const std::complex<double> sf =
                v[l.from] * std::conj(v[l.from] - v[l.to]) * std::conj(l.admittance);
            const std::complex<double> st2 =
                v[l.to] * std::conj(v[l.to] - v[l.from]) * std::conj(l.admittance);
            loss += sf.real() + st2.real();
        }
        Eigen::VectorXcd inj = Eigen::VectorXcd::Zero(4);
        inj.real() << 0.4, -0.1, 0.2, -0.3;
        Eigen::VectorXd dp, dq;
        pf_residual(net, st, inj, dp, dq);
        const double total_inj = inj.real().sum();
        CHECK(dp.sum() == doctest::Approx(total_inj - loss).epsilon(1e-12));
    }

    TEST_CASE("lossless single line hits the closed-form angle") {
        const Network net = lossless_two_bus();
        const PowerFlowSolution sol = solve_pf(net, unit_magnitude_load_spec(1.0));
        CHECK(sol.state.angle(1) == doctest::Approx(-std::asin(0.1)).epsilon(1e-9));
        CHECK(sol.slack_p_gen == doctest::Approx(1.0).epsilon(1e-8));
    }

    TEST_CASE("flat case converges immediately") {
        const Network net = lossless_two_bus(0.0);
        InjectionSpec spec = unit_magnitude_load_spec(0.0);
        const PowerFlowSolution sol = solve_pf(net, spec);
        CHECK(sol.iterations <= 1);
        CHECK(sol.state.angle(1) == doctest::Approx(0.0));
        for (const auto& f : sol.flows) {
            CHECK(std::abs(f.from_to) == doctest::Approx(0.0));
        }
    }

    TEST_CASE("load above the transfer limit fails to converge") {
        const Network net = lossless_two_bus(10.5);
        CHECK_THROWS_AS(solve_pf(net, unit_magnitude_load_spec(10.5)), NumericalError);
    }

    TEST_CASE("analytic jacobian matches central differences") {
        std::mt19937 rng(23);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + static_cast<int>(rng() % 5);
            const int n_pv = (n >= 3) ? static_cast<int>(rng() % 2) + 1 : 1;
            const Network net = oracle::random_network(rng, n, std::min(n_pv, n - 1));
            const InjectionSpec spec = InjectionSpec::from_setpoints(net);

            std::uniform_real_distribution<double> up(-0.15, 0.15);
            ComplexVoltageState st;
            st.magnitude = Eigen::VectorXd::Ones(n);
            st.angle = Eigen::VectorXd::Zero(n);
            for (int k = 1; k < n; ++k) {
                st.angle(k) = up(rng);
                st.magnitude(k) = 1.0 + 0.3 * up(rng);
            }

            // pack/unpack mirrors the solver layout: theta (non-slack), then |V| (PQ)
            std::vector<int> tbus, vbus;
            for (int k = 1; k < n; ++k) tbus.push_back(k);
            for (int k = 0; k < n; ++k) {
                if (spec.role[k] == BusRole::PQ) vbus.push_back(k);
            }
            auto calc_rows = [&](const Eigen::VectorXd& u) {
                ComplexVoltageState s = st;
                for (size_t i = 0; i < tbus.size(); ++i) s.angle(tbus[i]) = u(i);
                for (size_t i = 0; i < vbus.size(); ++i) {
                    s.magnitude(vbus[i]) = u(tbus.size() + i);
                }
                const Eigen::VectorXcd inj = bus_injections(net, s);
                Eigen::VectorXd rows(tbus.size() + vbus.size());
                int r = 0;
                for (int k : tbus) rows(r++) = inj(k).real();
                for (int k : vbus) rows(r++) = inj(k).imag();
                return rows;
            };
            Eigen::VectorXd u0(tbus.size() + vbus.size());
            for (size_t i = 0; i < tbus.size(); ++i) u0(i) = st.angle(tbus[i]);
            for (size_t i = 0; i < vbus.size(); ++i) u0(tbus.size() + i) = st.magnitude(vbus[i]);

            const Eigen::MatrixXd fd = oracle::finite_difference(calc_rows, u0);
            const Eigen::MatrixXd an = pf_jacobian(net, st, spec);
            REQUIRE(fd.rows() == an.rows());
            const double scale = std::max(1.0, an.norm());
            CHECK((fd - an).norm() / scale <= 1e-6);
        }
    }

    TEST_CASE("newton fixed point re-checked independently of the solver") {
        std::mt19937 rng(31);
        for (int trial = 0; trial < 10; ++trial) {
            const int n = 3 + static_cast<int>(rng() % 4);
            const Network net = oracle::random_network(rng, n, 1);
            const InjectionSpec spec = InjectionSpec::from_setpoints(net);
            const PowerFlowSolution sol = solve_pf(net, spec);

            Eigen::VectorXcd inj(n);
            for (int k = 0; k < n; ++k) {
                inj(k) = std::complex<double>(sol.p_gen(k) + spec.p_other(k),
                                              sol.q_gen(k) + spec.q_other(k));
            }
            Eigen::VectorXd dp, dq;
            pf_residual(net, sol.state, inj, dp, dq);
            CHECK(dp.lpNorm<Eigen::Infinity>() <= 1e-7);
            CHECK(dq.lpNorm<Eigen::Infinity>() <= 1e-7);
        }
    }

    TEST_CASE("lossless network conserves active power at the solution") {
        const Network net = lossless_two_bus(0.7);
        const PowerFlowSolution sol = solve_pf(net, unit_magnitude_load_spec(0.7));
        const Eigen::VectorXcd inj = bus_injections(net, sol.state);
        CHECK(inj.real().sum() == doctest::Approx(0.0).epsilon(1e-8));
    }

    TEST_CASE("limit report: clean flat case") {
        const Network net = lossless_two_bus(0.0);
        const PowerFlowSolution sol = solve_pf(net, unit_magnitude_load_spec(0.0));
        CHECK(check_limits(net, sol).clean());
    }

    TEST_CASE("limit report: voltage magnitude breach") {
        const Network net = lossless_two_bus(0.0);
        PowerFlowSolution sol = solve_pf(net, unit_magnitude_load_spec(0.0));
        sol.state.magnitude(1) = 1.08;  // bound is 1.05 below
        std::vector<Bus> buses = net.buses();
        buses[1].v_max = 1.05;
        const Network tight =
            Network::from_parts(net.base(), std::move(buses), net.lines(), net.generators());
        const LimitReport rep = check_limits(tight, sol);
        REQUIRE(rep.count(LimitFamily::VL1) == 1);
        CHECK(rep.entries[0].excess == doctest::Approx(0.03));
    }

    TEST_CASE("limit report: complex-difference line breach via law of cosines") {
        const Network net = lossless_two_bus(1.0);
        const PowerFlowSolution sol = solve_pf(net, unit_magnitude_load_spec(1.0));
        // oracle: |V1 - V2|^2 = V1^2 + V2^2 - 2 V1 V2 cos(t1 - t2)
        const double v1 = sol.state.magnitude(0), v2 = sol.state.magnitude(1);
        const double dv = std::sqrt(v1 * v1 + v2 * v2 -
                                    2.0 * v1 * v2 * std::cos(sol.state.angle(0) - sol.state.angle(1)));
        std::vector<Line> lines = net.lines();
        lines[0].dv_max = dv * 0.5;
        const Network tight =
            Network::from_parts(net.base(), net.buses(), std::move(lines), net.generators());
        const LimitReport rep = check_limits(tight, sol);
        REQUIRE(rep.count(LimitFamily::VL2) == 1);
        CHECK(rep.entries[0].value == doctest::Approx(dv).epsilon(1e-12));
    }

    TEST_CASE("dc model: single line carries B times the angle difference") {
        const Network net = lossless_two_bus();
        const DcModel dc = dc_linearize(net);
        Eigen::VectorXd theta(2);
        theta << 0.0, 0.1;
        const Eigen::VectorXd p = dc.injections(theta);
        CHECK(p(1) == doctest::Approx(10.0 * 0.1).epsilon(1e-12));
        CHECK(p(0) == doctest::Approx(-1.0).epsilon(1e-12));
        // zero angles give zero injections
        CHECK(dc.injections(Eigen::VectorXd::Zero(2)).norm() == doctest::Approx(0.0));
        // and the reduced solve inverts it
        Eigen::VectorXd pn(1);
        pn << 1.0;
        const Eigen::VectorXd th = dc.solve_angles(pn);
        CHECK(th(1) == doctest::Approx(0.1).epsilon(1e-12));
    }

    TEST_CASE("dc approximates ac within 0.5 percent in the small-angle regime") {
        const Network net = lossless_two_bus(0.1);
        const PowerFlowSolution ac = solve_pf(net, unit_magnitude_load_spec(0.1));
        const DcModel dc = dc_linearize(net);
        Eigen::VectorXd pn(1);
        pn << -0.1;
        const Eigen::VectorXd th = dc.solve_angles(pn);
        const double rel = std::abs(th(1) - ac.state.angle(1)) / std::abs(th(1));
        CHECK(rel <= 0.005);
    }

    TEST_CASE("dc consistency: angle error shrinks as loads scale down") {
        // The property embodies the linearization assumptions, so the case
        // must satisfy them: negligible conductance, flat magnitudes.
        std::mt19937 rng(41);
        const Network base_net = oracle::random_network(rng, 4, 0, 0.3, /*lossless=*/true);
        double prev = 1e9;
        for (double scale : {1.0, 0.5, 0.25}) {
            std::vector<Bus> buses = base_net.buses();
            for (Bus& b : buses) {
                b.p_load *= scale;
                b.q_load = 0.0;
            }
            const Network net = Network::from_parts(base_net.base(), std::move(buses),
                                                    base_net.lines(), base_net.generators());
            const InjectionSpec spec = InjectionSpec::from_setpoints(net);
            const PowerFlowSolution ac = solve_pf(net, spec);
            const DcModel dc = dc_linearize(net);
            Eigen::VectorXd pn(net.num_buses() - 1);
            for (int k = 1; k < net.num_buses(); ++k) pn(k - 1) = spec.p_injection(k);
            const Eigen::VectorXd th = dc.solve_angles(pn);
            const double denom = th.tail(net.num_buses() - 1).lpNorm<Eigen::Infinity>();
            const double err = (th - ac.state.angle).lpNorm<Eigen::Infinity>() / denom;
            CHECK(err < prev);
            prev = err;
        }
    }
}
