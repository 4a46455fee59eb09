#include "opf/conic/program.hpp"

#include <cmath>
#include <ostream>

namespace opf::conic {

namespace {
const double kSqrt2 = std::sqrt(2.0);
const char* kind_name(ConeKind k) {
    switch (k) {
        case ConeKind::Free: return "free";
        case ConeKind::NonNeg: return "nonneg";
        case ConeKind::SecondOrder: return "soc";
        case ConeKind::Psd: return "psd";
    }
    return "?";
}
}  // namespace

int ConeProgram::count_rows_labeled(const std::string& prefix) const {
    int count = 0;
    for (const auto& l : row_labels) {
        if (l.rfind(prefix, 0) == 0) ++count;
    }
    return count;
}

void ConeProgram::dump(std::ostream& os) const {
    os << "coneprogram v1\n";
    os << "vars " << num_vars << " rows " << num_rows() << " offset " << obj_offset << "\n";
    os << "blocks " << blocks.size() << "\n";
    for (const auto& blk : blocks) {
        os << kind_name(blk.kind) << " " << blk.offset << " " << blk.dim << " " << blk.order
           << " " << blk.name << "\n";
    }
    os << "c\n";
    for (int j = 0; j < num_vars; ++j) {
        if (c(j) != 0.0) os << j << " " << c(j) << "\n";
    }
    os << "A\n";
    for (int k = 0; k < A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it) {
            os << it.row() << " " << it.col() << " " << it.value() << "\n";
        }
    }
    os << "b\n";
    for (int i = 0; i < num_rows(); ++i) {
        if (b(i) != 0.0) os << i << " " << b(i) << "\n";
    }
    os << "end\n";
}

int svec_index(int order, int i, int j) {
    if (j > i) std::swap(i, j);
    return j * order - j * (j - 1) / 2 + (i - j);
}

Eigen::VectorXd svec(const Eigen::MatrixXd& m) {
    const int n = static_cast<int>(m.rows());
    Eigen::VectorXd v(svec_dim(n));
    int idx = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            v(idx++) = (i == j) ? m(i, j) : kSqrt2 * 0.5 * (m(i, j) + m(j, i));
        }
    }
    return v;
}

Eigen::MatrixXd smat(const Eigen::VectorXd& v) {
    const int n = static_cast<int>((std::sqrt(8.0 * v.size() + 1.0) - 1.0) / 2.0 + 0.5);
    Eigen::MatrixXd m(n, n);
    int idx = 0;
    for (int j = 0; j < n; ++j) {
        for (int i = j; i < n; ++i) {
            const double val = (i == j) ? v(idx) : v(idx) / kSqrt2;
            m(i, j) = val;
            m(j, i) = val;
            ++idx;
        }
    }
    return m;
}

int PsdRef::var(int i, int j) const { return offset + svec_index(order, i, j); }

std::pair<int, double> HermitianRef::re_entry(int k, int l) const {
    const int i = std::max(k, l);
    const int j = std::min(k, l);
    return {m.var(i, j), m.scale(i, j)};
}

std::pair<int, double> HermitianRef::im_entry(int k, int l) const {
    if (k == l) throw ValidationError("hermitian embedding: Im W(k,k) is identically zero");
    const int a = std::min(k, l);
    const int b = std::max(k, l);
    // canonical variable holds Im W(a, b); Im W(b, a) = -Im W(a, b)
    const double sign = (k < l) ? 1.0 : -1.0;
    return {m.var(n + a, b), sign * m.scale(n + a, b)};
}

Eigen::MatrixXd hermitian_real_embedding(const Eigen::MatrixXcd& h) {
    const int n = static_cast<int>(h.rows());
    Eigen::MatrixXd m(2 * n, 2 * n);
    m.topLeftCorner(n, n) = h.real();
    m.bottomRightCorner(n, n) = h.real();
    m.topRightCorner(n, n) = -h.imag();
    m.bottomLeftCorner(n, n) = h.imag();
    return m;
}

Eigen::MatrixXcd extract_hermitian(const Eigen::VectorXd& x, const HermitianRef& ref) {
    const Eigen::MatrixXd m = smat(x.segment(ref.m.offset, svec_dim(ref.m.order)));
    const int n = ref.n;
    Eigen::MatrixXcd w(n, n);
    // Average the two copies of each embedded entry.
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l < n; ++l) {
            const double re = 0.5 * (m(k, l) + m(n + k, n + l));
            const double im = 0.5 * (m(n + k, l) - m(k, n + l));
            w(k, l) = {re, im};
        }
    }
    // Exact Hermitian symmetrization.
    return 0.5 * (w + w.adjoint());
}

Eigen::MatrixXd extract_psd(const Eigen::VectorXd& x, const PsdRef& ref) {
    return smat(x.segment(ref.offset, svec_dim(ref.order)));
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    constant += o.constant;
    return *this;
}

int ProgramBuilder::add_block(ConeKind kind, const std::string& name, int dim, int order) {
    if (dim <= 0) throw ValidationError("cone block '" + name + "' needs positive dimension");
    ConeBlock blk;
    blk.kind = kind;
    blk.offset = next_var_;
    blk.dim = dim;
    blk.order = order;
    blk.name = name;
    blocks_.push_back(blk);
    next_var_ += dim;
    return blk.offset;
}

int ProgramBuilder::add_free(const std::string& name) {
    return add_block(ConeKind::Free, name, 1, 0);
}

int ProgramBuilder::add_free_block(const std::string& name, int dim) {
    return add_block(ConeKind::Free, name, dim, 0);
}

int ProgramBuilder::add_nonneg(const std::string& name) {
    return add_block(ConeKind::NonNeg, name, 1, 0);
}

int ProgramBuilder::add_nonneg_block(const std::string& name, int dim) {
    return add_block(ConeKind::NonNeg, name, dim, 0);
}

int ProgramBuilder::add_soc(const std::string& name, int dim) {
    if (dim < 2) throw ValidationError("second-order block '" + name + "' needs dim >= 2");
    return add_block(ConeKind::SecondOrder, name, dim, 0);
}

PsdRef ProgramBuilder::add_psd(const std::string& name, int order) {
    if (order < 1) throw ValidationError("psd block '" + name + "' needs order >= 1");
    PsdRef ref;
    ref.offset = add_block(ConeKind::Psd, name, svec_dim(order), order);
    ref.block = static_cast<int>(blocks_.size()) - 1;
    ref.order = order;
    return ref;
}

HermitianRef ProgramBuilder::add_hermitian(const std::string& name, int order) {
    HermitianRef ref;
    ref.n = order;
    ref.m = add_psd(name, 2 * order);
    const int n = order;
    // Tie the two Re copies together: M(k,l) == M(n+k, n+l) for l <= k.
    for (int k = 0; k < n; ++k) {
        for (int l = 0; l <= k; ++l) {
            LinExpr e;
            e.add(ref.m.var(k, l), ref.m.scale(k, l));
            e.add(ref.m.var(n + k, n + l), -ref.m.scale(n + k, n + l));
            add_eq(e, 0.0, name + ":embed");
        }
    }
    // Im part antisymmetric: M(n+k, l) + M(n+l, k) == 0 (k < l), diag zero.
    for (int k = 0; k < n; ++k) {
        for (int l = k; l < n; ++l) {
            LinExpr e;
            e.add(ref.m.var(n + k, l), ref.m.scale(n + k, l));
            if (l > k) e.add(ref.m.var(n + l, k), ref.m.scale(n + l, k));
            add_eq(e, 0.0, name + ":embed");
        }
    }
    return ref;
}

void ProgramBuilder::add_cost(int var, double coeff) { costs_.emplace_back(var, coeff); }

void ProgramBuilder::add_cost_offset(double v) { obj_offset_ += v; }

int ProgramBuilder::new_row(double rhs, const std::string& label) {
    rhs_.push_back(rhs);
    labels_.push_back(label);
    return static_cast<int>(rhs_.size()) - 1;
}

void ProgramBuilder::put(int row, int var, double coeff) {
    if (var < 0 || var >= next_var_) throw ValidationError("row references unknown variable");
    if (coeff != 0.0) triplets_.emplace_back(row, var, coeff);
}

int ProgramBuilder::add_eq(const LinExpr& expr, double rhs, const std::string& label) {
    const int row = new_row(rhs - expr.constant, label);
    for (const auto& [var, coeff] : expr.terms) put(row, var, coeff);
    return row;
}

int ProgramBuilder::add_le(const LinExpr& expr, double rhs, const std::string& label) {
    const int slack = add_nonneg(label + ":slack");
    const int row = add_eq(expr, rhs, label);
    put(row, slack, 1.0);
    return row;
}

int ProgramBuilder::add_ge(const LinExpr& expr, double rhs, const std::string& label) {
    const int slack = add_nonneg(label + ":surplus");
    const int row = add_eq(expr, rhs, label);
    put(row, slack, -1.0);
    return row;
}

void ProgramBuilder::add_box(const LinExpr& expr, double lo, double hi,
                             const std::string& label) {
    if (lo > hi) throw ValidationError("box constraint '" + label + "' has lo > hi");
    add_ge(expr, lo, label + ":lo");
    add_le(expr, hi, label + ":hi");
}

void ProgramBuilder::add_soc_constraint(const LinExpr& head, const std::vector<LinExpr>& tails,
                                        const std::string& label) {
    const int dim = static_cast<int>(tails.size()) + 1;
    const int z = add_soc(label + ":cone", dim);
    LinExpr tie_head = head;
    tie_head.add(z, -1.0);
    add_eq(tie_head, 0.0, label + ":head");
    for (size_t i = 0; i < tails.size(); ++i) {
        LinExpr tie = tails[i];
        tie.add(z + 1 + static_cast<int>(i), -1.0);
        add_eq(tie, 0.0, label + ":tail");
    }
}

void ProgramBuilder::add_quadratic_epigraph(int t_var, int x_var, double c2, double c1,
                                            double c0, const std::string& label) {
    if (c2 < 0.0) throw ValidationError("epigraph '" + label + "' needs a convex quadratic");
    // u := t - c1 x - c0 must dominate c2 x^2.
    LinExpr u(t_var, 1.0);
    u.add(x_var, -c1);
    u.constant = -c0;
    if (c2 == 0.0) {
        add_ge(u, 0.0, label);
        return;
    }
    // u >= c2 x^2  <=>  (u + 1)/2 >= || ((u - 1)/2, sqrt(c2) x) ||.
    LinExpr head;
    LinExpr tail0;
    for (const auto& [var, coeff] : u.terms) {
        head.add(var, 0.5 * coeff);
        tail0.add(var, 0.5 * coeff);
    }
    head.constant = 0.5 * (u.constant + 1.0);
    tail0.constant = 0.5 * (u.constant - 1.0);
    LinExpr tail1(x_var, std::sqrt(c2));
    add_soc_constraint(head, {tail0, tail1}, label);
}

ConeProgram ProgramBuilder::build() const {
    ConeProgram prog;
    prog.num_vars = next_var_;
    prog.blocks = blocks_;
    prog.row_labels = labels_;
    prog.b = Eigen::Map<const Eigen::VectorXd>(rhs_.data(), rhs_.size());
    prog.c = Eigen::VectorXd::Zero(next_var_);
    for (const auto& [var, coeff] : costs_) prog.c(var) += coeff;
    prog.obj_offset = obj_offset_;
    prog.A.resize(static_cast<int>(rhs_.size()), next_var_);
    prog.A.setFromTriplets(triplets_.begin(), triplets_.end());
    prog.A.makeCompressed();
    return prog;
}

}  // namespace opf::conic
