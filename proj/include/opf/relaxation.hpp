#pragma once

#include <optional>

#include "opf/conic/solver.hpp"
#include "opf/network.hpp"
#include "opf/powerflow.hpp"

namespace opf {

/// The lifted voltage matrix W (ideally V V^*) with the control/state split:
/// diagonal entries at generator buses are the controllable part, everything
/// else is state.
struct HermitianLift {
    Eigen::MatrixXcd w;
    std::vector<int> control_buses;  // generator buses (set G)

    /// W^u: diagonal at the control buses, zero elsewhere.
    Eigen::MatrixXcd control_part() const;
    /// W^x = W - W^u.
    Eigen::MatrixXcd state_part() const;
};

struct RankDiagnostic {
    Eigen::VectorXd eigenvalues;  // descending
    double ratio = 0.0;           // lambda_2 / lambda_1
    bool rank_one = false;
};

/// ratio test lambda_2/lambda_1 <= tol; scale-invariant.
RankDiagnostic rank_check(const Eigen::MatrixXcd& w, double tol = 1e-5);

class RankDeficient : public NumericalError {
public:
    explicit RankDeficient(const std::string& m) : NumericalError(m) {}
};

/// |V_k| = sqrt(W_kk), angles from the dominant eigenvector rotated so the
/// slack angle is zero. Throws RankDeficient when the ratio test fails.
/// recon_error (optional out) is ||W - v v^*||_F / ||W||_F.
ComplexVoltageState recover_voltages(const Eigen::MatrixXcd& w, const Network& net,
                                     double rank_tol = 1e-5, double* recon_error = nullptr);

/// The assembled nominal program plus the variable map needed to read
/// solutions back out.
struct NominalAssembly {
    conic::ConeProgram program;
    conic::HermitianRef w_ref;
    std::vector<int> p_var;  // per generator
    std::vector<int> q_var;
    std::vector<int> t_var;  // cost epigraphs
};

/// Convexified nominal AC-OPF in W space: balance rows per bus, voltage
/// bounds on the diagonal, the complex-difference line rows, generator
/// limits, quadratic costs through second-order epigraphs, W PSD via the
/// real embedding. The rank constraint is the one thing left out.
NominalAssembly assemble_nominal(const Network& net);

struct RelaxedOpfSolution {
    Eigen::VectorXd p_gen;  // per generator, net.generators() order
    Eigen::VectorXd q_gen;
    HermitianLift lift;
    double objective = 0.0;
    RankDiagnostic rank;
    std::optional<ComplexVoltageState> recovered;  // present when rank-one
    double recovery_error = 0.0;
    conic::ConeSolution conic;
};

/// assemble -> solve -> rank check -> (conditional) voltage recovery.
RelaxedOpfSolution solve_nominal(const Network& net, const conic::SolverOptions& opts = {},
                                 double rank_tol = 1e-5);

}  // namespace opf
