#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <complex>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "opf/errors.hpp"

namespace opf::conic {

enum class ConeKind { Free, NonNeg, SecondOrder, Psd };

/// One block of the variable vector. `dim` is the vector length; for Psd
/// blocks it is order*(order+1)/2 (packed lower triangle, scaled svec).
struct ConeBlock {
    ConeKind kind = ConeKind::Free;
    int offset = 0;
    int dim = 0;
    int order = 0;  // matrix order, Psd only
    std::string name;
};

/// min c'x + offset  s.t.  A x = b,  x in the product of the blocks' cones.
struct ConeProgram {
    int num_vars = 0;
    Eigen::SparseMatrix<double> A;  // rows x num_vars, compressed
    Eigen::VectorXd b;
    Eigen::VectorXd c;
    double obj_offset = 0.0;
    std::vector<ConeBlock> blocks;
    std::vector<std::string> row_labels;

    int num_rows() const { return static_cast<int>(b.size()); }

    /// Rows whose label starts with `prefix`.
    int count_rows_labeled(const std::string& prefix) const;

    /// Plain-text dump (see docs/program-dump.md) for external cross-checks.
    void dump(std::ostream& os) const;
};

// ---- packed symmetric (svec) helpers ----------------------------------

/// Length of the packed lower triangle of an order-n symmetric matrix.
inline int svec_dim(int order) { return order * (order + 1) / 2; }

/// Position of entry (i, j), i >= j, in column-major packed storage.
int svec_index(int order, int i, int j);

/// Packed vector with off-diagonals scaled by sqrt(2), so that
/// <A, B> = svec(A) . svec(B).
Eigen::VectorXd svec(const Eigen::MatrixXd& m);
Eigen::MatrixXd smat(const Eigen::VectorXd& v);

// ---- variable references ----------------------------------------------

struct PsdRef {
    int block = 0;   // index into ConeProgram::blocks
    int offset = 0;  // first variable of the block
    int order = 0;

    int var(int i, int j) const;
    /// Multiply a wanted coefficient on matrix entry (i,j) by this before
    /// placing it on var(i,j); compensates the sqrt(2) packing.
    double scale(int i, int j) const { return i == j ? 1.0 : 1.0 / std::sqrt(2.0); }
};

/// Complex Hermitian matrix W (order n) realized as the real symmetric
/// PSD block M = [[Re W, -Im W], [Im W, Re W]] of order 2n, together with
/// the equalities that tie the embedding's repeated entries together.
/// H is PSD iff M is, and every eigenvalue of H appears twice in M.
struct HermitianRef {
    PsdRef m;
    int n = 0;

    /// (variable, coefficient scale) pair for a wanted coefficient on
    /// Re W(k, l). Canonical representative: upper-left block.
    std::pair<int, double> re_entry(int k, int l) const;
    /// Likewise for Im W(k, l), k != l; the sign of the antisymmetric part
    /// is folded into the returned scale.
    std::pair<int, double> im_entry(int k, int l) const;
};

/// Numeric form of the same embedding, for oracles and rank checks.
Eigen::MatrixXd hermitian_real_embedding(const Eigen::MatrixXcd& h);

/// Reads the solved W back out of a variable vector.
Eigen::MatrixXcd extract_hermitian(const Eigen::VectorXd& x, const HermitianRef& ref);
Eigen::MatrixXd extract_psd(const Eigen::VectorXd& x, const PsdRef& ref);

// ---- incremental assembly ----------------------------------------------

/// Affine expression sum(coeff * var) + constant.
struct LinExpr {
    std::vector<std::pair<int, double>> terms;
    double constant = 0.0;

    LinExpr() = default;
    LinExpr(int var, double coeff) { terms.emplace_back(var, coeff); }
    LinExpr& add(int var, double coeff) {
        terms.emplace_back(var, coeff);
        return *this;
    }
    LinExpr& operator+=(const LinExpr& o);
};

class ProgramBuilder {
public:
    // Variables. Every call appends a new block.
    int add_free(const std::string& name);
    int add_free_block(const std::string& name, int dim);
    int add_nonneg(const std::string& name);
    int add_nonneg_block(const std::string& name, int dim);
    int add_soc(const std::string& name, int dim);  // returns block offset
    PsdRef add_psd(const std::string& name, int order);
    HermitianRef add_hermitian(const std::string& name, int order);

    void add_cost(int var, double coeff);
    void add_cost_offset(double v);

    // Equality row  expr == rhs.
    int add_eq(const LinExpr& expr, double rhs, const std::string& label);
    // expr <= rhs and expr >= rhs via a fresh slack.
    int add_le(const LinExpr& expr, double rhs, const std::string& label);
    int add_ge(const LinExpr& expr, double rhs, const std::string& label);
    // lo <= expr <= hi.
    void add_box(const LinExpr& expr, double lo, double hi, const std::string& label);

    // head >= || tails || as a second-order block tied to the expressions.
    void add_soc_constraint(const LinExpr& head, const std::vector<LinExpr>& tails,
                            const std::string& label);

    // t >= c2 x^2 + c1 x + c0 (c2 >= 0); linear rows only when c2 == 0.
    void add_quadratic_epigraph(int t_var, int x_var, double c2, double c1, double c0,
                                const std::string& label);

    int num_vars() const { return next_var_; }
    int num_rows() const { return static_cast<int>(rhs_.size()); }

    ConeProgram build() const;

private:
    int add_block(ConeKind kind, const std::string& name, int dim, int order);
    int new_row(double rhs, const std::string& label);
    void put(int row, int var, double coeff);

    int next_var_ = 0;
    std::vector<ConeBlock> blocks_;
    std::vector<Eigen::Triplet<double>> triplets_;
    std::vector<double> rhs_;
    std::vector<std::string> labels_;
    std::vector<std::pair<int, double>> costs_;
    double obj_offset_ = 0.0;
};

}  // namespace opf::conic
