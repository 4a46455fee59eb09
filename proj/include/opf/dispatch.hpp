#pragma once

#include <Eigen/Dense>

#include "opf/conic/solver.hpp"
#include "opf/network.hpp"

namespace opf {

/// Result of an economic dispatch or DC optimal power flow.
struct DispatchResult {
    Eigen::VectorXd p_gen;   // one entry per generator, input order
    double total_cost = 0.0; // currency per unit time
    double price = 0.0;      // dual of the demand-supply balance
};

/// Cost-minimal allocation of `demand` among the units, no network.
/// KKT point of the convex QP found by bisection on the marginal price,
/// then resolved exactly on the active set. Sum(P) = demand to 1e-9.
/// Throws InfeasibleError when demand lies outside aggregate capacity.
DispatchResult solve_ed(const std::vector<Generator>& gens, double demand);

struct DcOpfResult {
    DispatchResult dispatch;
    Eigen::VectorXd angles;      // per bus, slack at 0
    Eigen::VectorXd bus_price;   // balance duals per bus
    Eigen::VectorXd line_flows;  // active flow per line, from -> to
    Eigen::VectorXd line_duals;  // net dual of the two line-limit rows
    conic::ConeSolution conic;   // solver diagnostics
};

/// Network-constrained DC dispatch: minimize total cost subject to the
/// linearized balance at every bus, generator active limits, and the
/// angle-difference surrogate of the line limit. Throws InfeasibleError
/// with a constraint-family hint when no dispatch fits.
DcOpfResult solve_dc_opf(const Network& net, const Eigen::VectorXd& p_load,
                         const conic::SolverOptions& opts = {});

}  // namespace opf
