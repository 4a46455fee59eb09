#pragma once

#include <optional>

#include "opf/conic/program.hpp"

namespace opf::conic {

struct SolverOptions {
    double feas_tol = 1e-8;       // primal/dual feasibility, relative
    double gap_tol = 1e-7;        // duality gap, relative
    int max_iterations = 100;
    double step_fraction = 0.95;  // fraction of the distance to the cone boundary
    double static_reg = 1e-8;     // quasi-definite KKT regularization
    int refine_steps = 2;         // iterative refinement against the exact KKT
    bool debug_checks = false;    // assert interior-point invariants per iteration
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIter };

const char* to_string(SolveStatus s);

/// Per-iteration record, kept for diagnostics and the determinism /
/// weak-duality tests.
struct IterateInfo {
    double primal_obj = 0.0;  // c'x/tau + offset
    double dual_obj = 0.0;    // b'y/tau + offset
    double primal_res = 0.0;
    double dual_res = 0.0;
    double gap_rel = 0.0;
    double mu = 0.0;
    double tau = 0.0;
    double kappa = 0.0;
    double cone_inner = 0.0;  // <x, s> over the cone blocks (>= 0 always)
    double step = 0.0;
};

struct PresolveInfo {
    int empty_rows_removed = 0;
    int duplicate_rows_removed = 0;
    int fixed_vars_eliminated = 0;
    int dependent_rows_regularized = 0;  // near-zero pivots absorbed by the regularization
};

struct ConeSolution {
    SolveStatus status = SolveStatus::MaxIter;
    Eigen::VectorXd x;  // primal point (Optimal/MaxIter) or unbounded ray (DualInfeasible)
    Eigen::VectorXd y;  // equality duals, or the infeasibility certificate
    Eigen::VectorXd s;  // dual slacks
    double primal_obj = 0.0;
    double dual_obj = 0.0;
    double gap_rel = 0.0;
    int iterations = 0;
    std::vector<IterateInfo> trace;
    PresolveInfo presolve;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Homogeneous self-dual primal-dual path following with Nesterov-Todd
/// scalings over the block cones and a Mehrotra predictor-corrector step.
/// The KKT system is solved through a sparse LDL^T factorization of the
/// statically regularized quasi-definite form.
///
/// status Optimal guarantees (relative) feasibility residuals <= feas_tol
/// and gap <= gap_tol. PrimalInfeasible ships (y, s) with A'y + s = 0,
/// s dual-cone feasible and b'y = 1; DualInfeasible ships x in the cone with
/// A x = 0 and c'x = -1. Throws NumericalError on factorization breakdown.
ConeSolution solve(const ConeProgram& prog, const SolverOptions& opts = {});

/// Residuals recomputed from scratch, independent of solver bookkeeping.
struct ResidualReport {
    // meaningful for Optimal / MaxIter points
    double primal_feas = 0.0;   // ||Ax - b||_inf / (1 + ||b||_inf)
    double dual_feas = 0.0;     // ||A'y + s - c||_inf / (1 + ||c||_inf)
    double gap_rel = 0.0;
    double cone_violation_x = 0.0;  // worst constraint-cone violation of x
    double cone_violation_s = 0.0;  // worst dual-cone violation of s
    // certificate quality for infeasible statuses
    double pcert_residual = 0.0;  // ||A'y + s||_inf with b'y normalized to 1
    double pcert_objective = 0.0;  // b'y
    double dcert_residual = 0.0;  // ||Ax||_inf with c'x normalized to -1
    double dcert_objective = 0.0;  // c'x
};

ResidualReport residuals(const ConeProgram& prog, const ConeSolution& sol);

/// Violation of x against the program's cones (0 when inside).
double cone_violation(const ConeProgram& prog, const Eigen::VectorXd& x);

}  // namespace opf::conic
