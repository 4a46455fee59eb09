#pragma once

#include "opf/powerflow.hpp"
#include "opf/swc.hpp"
#include "opf/uncertainty.hpp"

namespace opf {

enum class CheckMethod {
    PfNewton,        // solve the nonconvex equations, then check every limit
    SdpFeasibility,  // fix the controls in the single-scenario convex block
};

/// Verdict for one uncertainty realization against a designed decision.
struct ScenarioOutcome {
    bool feasible = false;
    bool pf_diverged = false;  // no physical state found
    int pl1 = 0, pl2 = 0, vl1 = 0, vl2 = 0;  // violated-constraint counts
    CheckMethod method = CheckMethod::PfNewton;
};

/// Applies the real-time rule for `delta`, then tests whether a feasible
/// state exists. Non-convergence is classified as infeasible, never thrown.
ScenarioOutcome check_scenario(const Network& net, const UncertaintyModel& model,
                               const ControlDecision& dec, const UncertaintyVector& delta,
                               CheckMethod method = CheckMethod::PfNewton);

/// Empirical risk certificate for a decision.
struct RiskReport {
    int samples = 0;
    int violations = 0;
    double p_hat = 0.0;
    double eta = 0.0;
    double lower = 0.0;  // one-sided exact bounds, level eta each
    double upper = 1.0;
    // per-family breakdown; one sample may violate several families
    int pl1 = 0, pl2 = 0, vl1 = 0, vl2 = 0, pf_infeasible = 0;
    // Gaussian supports are unbounded; violations at draws beyond the
    // 3-sigma bulk are counted here too, keeping the robust-vs-chance
    // distinction visible.
    bool unbounded_model = false;
    int tail_violations = 0;
    std::uint64_t seed = 0;
    double declared_eps = 0.0;
    bool pass = false;  // upper <= declared eps
    CheckMethod method = CheckMethod::PfNewton;
};

/// Monte Carlo audit of the chance constraint: M fresh draws, exact
/// Clopper-Pearson bounds on the violation probability. The validation seed
/// must differ from the training seed recorded in the decision.
/// Scenario checks are independent; `threads` caps the workers, and the
/// aggregation is an ordered reduction, so the report does not depend on
/// the thread count.
RiskReport estimate_risk(const Network& net, const UncertaintyModel& model,
                         const ControlDecision& dec, int samples, double eta,
                         std::uint64_t seed, CheckMethod method = CheckMethod::PfNewton,
                         int threads = 1);

}  // namespace opf
