#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "opf/network.hpp"

namespace opf {

enum class SupportKind { Point, Box, Gaussian, BetaWind };

/// Support set of one complex fluctuation.
struct Support {
    SupportKind kind = SupportKind::Point;
    // Box: complex rectangle
    double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
    // Gaussian: zero mean, 2x2 covariance over (re, im); unbounded
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    // BetaWind: active part = -p0 + (cap + p0) * Beta(a, b), reactive zero;
    // p0 comes from the owning source
    double cap = 0.0;
    int beta_a = 2, beta_b = 5;

    bool is_point() const { return kind == SupportKind::Point; }
    bool is_bounded() const { return kind != SupportKind::Gaussian; }
};

struct RenewableSource {
    int bus = 0;
    double p0 = 0.0;  // nominal injection, per-unit
    double q0 = 0.0;
    Support support;
};

struct LoadFluctuation {
    int bus = 0;
    Support support;
};

struct UncertaintyVector;

/// Per-bus fluctuation model. Buses without an entry have the point support
/// {0}; renewable entries may only target renewable-flagged (or generator)
/// buses of the owning case.
class UncertaintyModel {
public:
    static UncertaintyModel parse(const std::string& text, const Network& net);
    static UncertaintyModel load(const std::filesystem::path& path, const Network& net);
    /// Degenerate model: every support is the point {0}.
    static UncertaintyModel point_mass(const Network& net);

    int num_buses() const { return n_; }
    const std::vector<RenewableSource>& renewables() const { return renewables_; }
    const std::vector<LoadFluctuation>& loads() const { return loads_; }

    /// Nominal renewable injections by bus.
    const Eigen::VectorXd& p_r0() const { return p_r0_; }
    const Eigen::VectorXd& q_r0() const { return q_r0_; }

    bool has_unbounded_support() const;

    /// True when some Gaussian-support component of `delta` lies outside its
    /// 3-sigma box: the conventional cut between bulk draws and the tail that
    /// no bounded (robust) reading of the model could cover.
    bool is_tail_draw(const UncertaintyVector& delta) const;

    /// Scale every bounded support about zero (Gaussian: covariance by
    /// factor^2); used by the shrinking-support studies.
    UncertaintyModel scaled(double factor) const;

    std::uint64_t content_hash() const;

private:
    int n_ = 0;
    std::vector<RenewableSource> renewables_;
    std::vector<LoadFluctuation> loads_;
    Eigen::VectorXd p_r0_, q_r0_;

    void finalize();
};

/// One sampled uncertainty vector: stacked [delta^L ; delta^R], complex,
/// entries exactly zero at buses with point supports.
struct UncertaintyVector {
    Eigen::VectorXcd load_delta;   // per bus
    Eigen::VectorXcd renew_delta;  // per bus
    std::uint64_t seed = 0;        // provenance
    int index = 0;

    int num_buses() const { return static_cast<int>(load_delta.size()); }
};

/// Simplex weights distributing the mismatch among the generators in G.
struct DeploymentVector {
    Eigen::VectorXd alpha;

    static DeploymentVector uniform(int n_g);
    /// Throws ValidationError unless alpha >= 0 and sums to 1 (1e-12).
    static DeploymentVector checked(Eigen::VectorXd alpha);
};

struct ScenarioSet {
    std::vector<UncertaintyVector> scenarios;
    std::uint64_t seed = 0;
    std::uint64_t model_hash = 0;
    std::optional<double> eps;   // declared when drawn for a SwC design
    std::optional<double> beta;

    int size() const { return static_cast<int>(scenarios.size()); }
};

/// N i.i.d. draws, deterministic per (seed, index): scenario i can be
/// materialized independently and concurrently.
ScenarioSet sample(const UncertaintyModel& model, int count, std::uint64_t seed);

/// Net extra demand s' Re{delta} = sum Re{delta^L} - sum Re{delta^R}.
double mismatch(const UncertaintyVector& delta);

/// P_bar_k = P_k + alpha_k * mismatch(delta).
Eigen::VectorXd deploy(const Eigen::VectorXd& p_gen, const DeploymentVector& alpha,
                       const UncertaintyVector& delta);

// JSON-lines persistence: header object, then one object per scenario with
// complex entries as [re, im] pairs.
void save_scenarios(std::ostream& os, const ScenarioSet& set);
ScenarioSet load_scenarios(std::istream& is);

}  // namespace opf
