#pragma once

// Internal Nesterov-Todd scaling blocks for the interior-point solver.
// Everything here operates on segments of the iterate vectors; dimensions
// are small enough that dense per-block algebra is the robust choice.

#include <Eigen/Dense>
#include <limits>

#include "opf/conic/program.hpp"

namespace opf::conic::detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Scaling {
    ConeKind kind = ConeKind::Free;
    int offset = 0;
    int dim = 0;
    int order = 0;  // Psd only

    // NonNeg
    Eigen::ArrayXd w_nn;
    // SecondOrder
    Eigen::MatrixXd w_soc, winv_soc;
    // Psd: T with T^{-1} X T^{-T} = T^T S T = diag(sig)
    Eigen::MatrixXd t_psd, tinv_psd;
    Eigen::VectorXd sig;

    Eigen::VectorXd lambda;  // scaled point
    Eigen::MatrixXd hinv;    // dense block of H^{-1} = P(W_nt)^{-1}

    /// Recompute the scaling at (x, s); false when either leaves the
    /// strict interior.
    bool update(const Eigen::VectorXd& x_blk, const Eigen::VectorXd& s_blk);

    // Jordan-algebra pieces (scaled space; lambda is diagonal for Psd).
    Eigen::VectorXd lambda_sq() const;
    Eigen::VectorXd jordan_div_lambda(const Eigen::VectorXd& r) const;
    Eigen::VectorXd jordan_prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;
    Eigen::VectorXd identity() const;
    int barrier_degree() const;

    // Scalings into/out of the scaled space.
    Eigen::VectorXd scale_x(const Eigen::VectorXd& dx) const;      // T^{-1} . T^{-T}
    Eigen::VectorXd scale_s(const Eigen::VectorXd& ds) const;      // T^T . T
    Eigen::VectorXd unscale_rhs(const Eigen::VectorXd& g) const;   // T^{-T} . T^{-1}

    /// sup { a >= 0 : v + a dv stays in the cone }.
    double step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const;

    /// Violation of v against this cone (0 inside), absolute.
    static double violation(ConeKind kind, int order, const Eigen::VectorXd& v);
};

/// Largest a >= 0 with x + a*dx >= 0 componentwise.
double nonneg_step(const Eigen::ArrayXd& x, const Eigen::ArrayXd& dx);

}  // namespace opf::conic::detail
