#pragma once

#include "opf/conic/solver.hpp"
#include "opf/network.hpp"
#include "opf/uncertainty.hpp"

namespace opf {

/// Probabilistic levels and the shared-decision dimension that drive the
/// sample complexity.
struct SampleComplexitySpec {
    double eps = 0.1;   // risk level, in (0, 1)
    double beta = 0.01; // confidence level, in (0, 1)
    int n_u = 1;        // number of scenario-independent decision variables

    SampleComplexitySpec(double eps_, double beta_, int n_u_);
};

/// Closed-form bound ceil(e/(eps(e-1)) * (ln(1/beta) + n_u - 1)); an upper
/// bound on the exact count below.
long n_swc_explicit(const SampleComplexitySpec& spec);

/// Smallest N with sum_{i=0}^{n_u-1} C(N,i) eps^i (1-eps)^{N-i} <= beta,
/// evaluated through the regularized incomplete beta function.
long n_swc_exact(const SampleComplexitySpec& spec);

/// Shared decision-variable count for a case: dim(P^G) + dim(W^u) +
/// dim(alpha) + 1 = 3 n_g + 1, where n_g counts the non-slack generator
/// buses. Reported so callers can override.
int default_n_u(const Network& net);

struct SwcPenalties {
    double gamma_b = 0.0;  // reactive-sum weight
    double gamma_l = 0.0;  // line-flow weight
};

/// Scenario-independent design: nominal dispatch and voltage targets for the
/// generator buses plus the deployment vector, with the training provenance
/// needed for later validation.
struct ControlDecision {
    std::vector<int> gen_buses;  // set G, ascending bus ids
    Eigen::VectorXd p_gen;       // per G entry
    Eigen::VectorXd w_u;         // squared magnitudes per G entry
    DeploymentVector alpha;
    double gamma = 0.0;
    // provenance
    double eps = 0.0;
    double beta = 0.0;
    int n_samples = 0;
    std::uint64_t seed = 0;

    /// |V| setpoints at the generator buses.
    Eigen::VectorXd voltage_setpoints() const { return w_u.cwiseMax(0.0).cwiseSqrt(); }
};

/// Real-time rule of the design procedure: shift every controllable unit by
/// its deployment share of the measured mismatch.
Eigen::VectorXd apply_realtime(const ControlDecision& dec, const UncertaintyVector& delta);

/// Scenario certificate: the state variables that make one sample feasible.
struct ScenarioCertificate {
    Eigen::VectorXd q_gen;   // per generator, net.generators() order
    double slack_p = 0.0;    // slack unit's per-scenario active power
    Eigen::MatrixXcd w;      // full lifted matrix W^[i]
    double gen_cost = 0.0;   // sum of f_k at this scenario (incl. slack unit)
    double q_penalty = 0.0;  // gamma_b * sum Q
    double line_penalty = 0.0;
};

struct SwcAssembly {
    conic::ConeProgram program;
    // shared variables
    std::vector<int> gen_buses;  // G
    std::vector<int> p_var;      // per G entry
    std::vector<int> wu_var;
    int alpha_offset = 0;
    int gamma_var = 0;
    // per-scenario maps
    std::vector<conic::HermitianRef> w_refs;
    std::vector<std::vector<int>> q_var;  // [scenario][generator index]
    std::vector<int> slack_p_var;         // -1 when no slack unit
    std::vector<std::vector<int>> flow_var;  // [scenario] modulus epigraphs (gamma_l > 0)
    /// Certificate variables added per scenario (Q^G block + lifted matrix),
    /// before constraint-lowering slacks.
    int certificate_vars_per_scenario = 0;
    /// All variables added per scenario including lowering slacks.
    int vars_per_scenario = 0;
};

/// The sampled program: shared controls (P^G, W^u, alpha, gamma), one
/// certificate block per scenario, per-scenario balance/limit rows, and the
/// epigraph row tying every scenario's cost under gamma. Line-flow penalty
/// blocks are only materialized when gamma_l > 0.
SwcAssembly assemble_swc(const Network& net, const UncertaintyModel& model,
                         const ScenarioSet& scenarios, const SwcPenalties& penalties,
                         const std::vector<int>& l_prob);

struct SwcSolution {
    ControlDecision decision;
    std::vector<ScenarioCertificate> certificates;
    double objective = 0.0;  // gamma*
    conic::ConeSolution conic;
};

struct SwcOptions {
    SwcPenalties penalties;
    std::vector<int> l_prob;          // empty = all lines
    bool use_explicit_bound = false;  // sample the closed-form count instead
    conic::SolverOptions solver;
};

/// Design procedure: compute N from (eps, beta, n_u), draw N scenarios from
/// `seed`, assemble, solve, extract the decision. Throws InfeasibleError
/// when some sampled scenario admits no certificate.
SwcSolution solve_swc(const Network& net, const UncertaintyModel& model,
                      const SampleComplexitySpec& spec, std::uint64_t seed,
                      const SwcOptions& opts = {});

/// Independent re-evaluation of one scenario's constraint block at a
/// solution, from the extracted complex matrices (not solver internals).
struct ScenarioResidual {
    double balance = 0.0;   // worst balance-row residual
    double bounds = 0.0;    // worst bound violation (PL/VL families)
};
ScenarioResidual recheck_scenario(const Network& net, const UncertaintyModel& model,
                                  const UncertaintyVector& delta, const ControlDecision& dec,
                                  const ScenarioCertificate& cert);

}  // namespace opf
