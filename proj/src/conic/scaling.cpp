#include "scaling.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

namespace opf::conic::detail {

namespace {

// Symmetric-Kronecker matrix of a symmetric P on scaled svec coordinates:
// Phi * svec(U) = svec(P U P). Built column by column from outer products.
Eigen::MatrixXd sym_kron(const Eigen::MatrixXd& p) {
    const int m = static_cast<int>(p.rows());
    const int d = svec_dim(m);
    const double rsqrt2 = 1.0 / std::sqrt(2.0);
    Eigen::MatrixXd phi(d, d);
    int col = 0;
    Eigen::MatrixXd u(m, m);
    for (int l = 0; l < m; ++l) {
        for (int k = l; k < m; ++k) {
            if (k == l) {
                u.noalias() = p.col(k) * p.col(k).transpose();
            } else {
                u.noalias() = rsqrt2 * (p.col(k) * p.col(l).transpose() +
                                        p.col(l) * p.col(k).transpose());
            }
            phi.col(col++) = svec(u);
        }
    }
    return phi;
}

}  // namespace

bool Scaling::update(const Eigen::VectorXd& x_blk, const Eigen::VectorXd& s_blk) {
    switch (kind) {
        case ConeKind::Free:
            return true;
        case ConeKind::NonNeg: {
            if ((x_blk.array() <= 0.0).any() || (s_blk.array() <= 0.0).any()) return false;
            w_nn = (x_blk.array() / s_blk.array()).sqrt();
            lambda = (x_blk.array() * s_blk.array()).sqrt().matrix();
            hinv = (s_blk.array() / x_blk.array()).matrix().asDiagonal();
            return true;
        }
        case ConeKind::SecondOrder: {
            const int d = dim;
            const double xres = x_blk(0) * x_blk(0) - x_blk.tail(d - 1).squaredNorm();
            const double sres = s_blk(0) * s_blk(0) - s_blk.tail(d - 1).squaredNorm();
            if (xres <= 0.0 || sres <= 0.0 || x_blk(0) <= 0.0 || s_blk(0) <= 0.0) return false;
            const Eigen::VectorXd xb = x_blk / std::sqrt(xres);
            const Eigen::VectorXd sb = s_blk / std::sqrt(sres);
            const double g2 = 0.5 * (1.0 + xb.dot(sb));
            if (g2 <= 0.0) return false;
            const double g = std::sqrt(g2);
            Eigen::VectorXd wb = (xb + sb) / (2.0 * g);
            wb.tail(d - 1) = (xb.tail(d - 1) - sb.tail(d - 1)) / (2.0 * g);  // x + J s
            const double eta = std::pow(xres / sres, 0.25);

            const double w0 = wb(0);
            const Eigen::VectorXd wt = wb.tail(d - 1);
            Eigen::MatrixXd m(d, d);
            m(0, 0) = w0;
            m.block(0, 1, 1, d - 1) = wt.transpose();
            m.block(1, 0, d - 1, 1) = wt;
            m.block(1, 1, d - 1, d - 1) =
                Eigen::MatrixXd::Identity(d - 1, d - 1) + wt * wt.transpose() / (1.0 + w0);
            w_soc = eta * m;
            Eigen::MatrixXd minv = m;
            minv.block(0, 1, 1, d - 1) *= -1.0;
            minv.block(1, 0, d - 1, 1) *= -1.0;
            winv_soc = minv / eta;
            lambda = w_soc * s_blk;
            hinv.noalias() = winv_soc * winv_soc;
            return true;
        }
        case ConeKind::Psd: {
            const int m = order;
            const Eigen::MatrixXd x_mat = smat(x_blk);
            const Eigen::MatrixXd s_mat = smat(s_blk);
            Eigen::LLT<Eigen::MatrixXd> lx(x_mat);
            Eigen::LLT<Eigen::MatrixXd> ls(s_mat);
            if (lx.info() != Eigen::Success || ls.info() != Eigen::Success) return false;
            const Eigen::MatrixXd lx_m = lx.matrixL();
            const Eigen::MatrixXd ls_m = ls.matrixL();
            Eigen::JacobiSVD<Eigen::MatrixXd> svd(ls_m.transpose() * lx_m,
                                                  Eigen::ComputeFullU | Eigen::ComputeFullV);
            sig = svd.singularValues();
            if (sig(m - 1) <= 0.0) return false;
            const Eigen::VectorXd rs = sig.array().sqrt().inverse().matrix();
            t_psd.noalias() = lx_m * svd.matrixV() * rs.asDiagonal();
            tinv_psd.noalias() = rs.asDiagonal() * svd.matrixU().transpose() * ls_m.transpose();
            lambda = svec(Eigen::MatrixXd(sig.asDiagonal()));
            hinv = sym_kron(tinv_psd.transpose() * tinv_psd);
            return true;
        }
    }
    return false;
}

Eigen::VectorXd Scaling::lambda_sq() const {
    switch (kind) {
        case ConeKind::NonNeg:
            return lambda.array().square().matrix();
        case ConeKind::SecondOrder: {
            Eigen::VectorXd r(dim);
            r(0) = lambda.squaredNorm();
            r.tail(dim - 1) = 2.0 * lambda(0) * lambda.tail(dim - 1);
            return r;
        }
        case ConeKind::Psd: {
            Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
            for (int k = 0; k < order; ++k) {
                sq(svec_index(order, k, k)) = sig(k) * sig(k);
            }
            return sq;
        }
        default:
            return Eigen::VectorXd::Zero(dim);
    }
}

Eigen::VectorXd Scaling::jordan_div_lambda(const Eigen::VectorXd& r) const {
    switch (kind) {
        case ConeKind::NonNeg:
            return (r.array() / lambda.array()).matrix();
        case ConeKind::SecondOrder: {
            // solve Arw(lambda) g = r
            const double l0 = lambda(0);
            const auto lt = lambda.tail(dim - 1);
            const double det = l0 * l0 - lt.squaredNorm();
            Eigen::VectorXd g(dim);
            g(0) = (l0 * r(0) - lt.dot(r.tail(dim - 1))) / det;
            g.tail(dim - 1) = (r.tail(dim - 1) - g(0) * lt) / l0;
            return g;
        }
        case ConeKind::Psd: {
            const Eigen::MatrixXd r_mat = smat(r);
            Eigen::MatrixXd g(order, order);
            for (int i = 0; i < order; ++i) {
                for (int j = 0; j < order; ++j) {
                    g(i, j) = 2.0 * r_mat(i, j) / (sig(i) + sig(j));
                }
            }
            return svec(g);
        }
        default:
            return Eigen::VectorXd::Zero(dim);
    }
}

Eigen::VectorXd Scaling::jordan_prod(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
    switch (kind) {
        case ConeKind::NonNeg:
            return (u.array() * v.array()).matrix();
        case ConeKind::SecondOrder: {
            Eigen::VectorXd r(dim);
            r(0) = u.dot(v);
            r.tail(dim - 1) = u(0) * v.tail(dim - 1) + v(0) * u.tail(dim - 1);
            return r;
        }
        case ConeKind::Psd: {
            const Eigen::MatrixXd um = smat(u);
            const Eigen::MatrixXd vm = smat(v);
            return svec(0.5 * (um * vm + vm * um));
        }
        default:
            return Eigen::VectorXd::Zero(dim);
    }
}

Eigen::VectorXd Scaling::identity() const {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    switch (kind) {
        case ConeKind::NonNeg:
            e.setOnes();
            break;
        case ConeKind::SecondOrder:
            e(0) = 1.0;
            break;
        case ConeKind::Psd:
            for (int k = 0; k < order; ++k) e(svec_index(order, k, k)) = 1.0;
            break;
        default:
            break;
    }
    return e;
}

int Scaling::barrier_degree() const {
    switch (kind) {
        case ConeKind::NonNeg: return dim;
        case ConeKind::SecondOrder: return 1;
        case ConeKind::Psd: return order;
        default: return 0;
    }
}

Eigen::VectorXd Scaling::scale_x(const Eigen::VectorXd& dx) const {
    switch (kind) {
        case ConeKind::NonNeg:
            return (dx.array() / w_nn).matrix();
        case ConeKind::SecondOrder:
            return winv_soc * dx;
        case ConeKind::Psd:
            return svec(tinv_psd * smat(dx) * tinv_psd.transpose());
        default:
            return dx;
    }
}

Eigen::VectorXd Scaling::scale_s(const Eigen::VectorXd& ds) const {
    switch (kind) {
        case ConeKind::NonNeg:
            return (ds.array() * w_nn).matrix();
        case ConeKind::SecondOrder:
            return w_soc * ds;
        case ConeKind::Psd:
            return svec(t_psd.transpose() * smat(ds) * t_psd);
        default:
            return ds;
    }
}

Eigen::VectorXd Scaling::unscale_rhs(const Eigen::VectorXd& g) const {
    switch (kind) {
        case ConeKind::NonNeg:
            return (g.array() / w_nn).matrix();
        case ConeKind::SecondOrder:
            return winv_soc * g;
        case ConeKind::Psd:
            return svec(tinv_psd.transpose() * smat(g) * tinv_psd);
        default:
            return g;
    }
}

double nonneg_step(const Eigen::ArrayXd& x, const Eigen::ArrayXd& dx) {
    double a = kInf;
    for (int i = 0; i < x.size(); ++i) {
        if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
    }
    return a;
}

double Scaling::step_to_boundary(const Eigen::VectorXd& v, const Eigen::VectorXd& dv) const {
    switch (kind) {
        case ConeKind::Free:
            return kInf;
        case ConeKind::NonNeg:
            return nonneg_step(v.array(), dv.array());
        case ConeKind::SecondOrder: {
            // first positive root of (v0+a d0)^2 - ||vt + a dt||^2 = 0
            const double a = dv(0) * dv(0) - dv.tail(dim - 1).squaredNorm();
            const double b = 2.0 * (v(0) * dv(0) - v.tail(dim - 1).dot(dv.tail(dim - 1)));
            const double c = v(0) * v(0) - v.tail(dim - 1).squaredNorm();
            double best = kInf;
            if (std::abs(a) < 1e-14 * (std::abs(b) + std::abs(c) + 1.0)) {
                if (b < 0.0) best = -c / b;
            } else {
                const double disc = b * b - 4.0 * a * c;
                if (disc >= 0.0) {
                    const double sq = std::sqrt(disc);
                    const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
                    for (double root : {q / a, (q != 0.0 ? c / q : kInf)}) {
                        if (root > 0.0) best = std::min(best, root);
                    }
                } else if (a < 0.0) {
                    // negative leading coefficient guarantees an exit point
                    best = 0.0;
                }
            }
            // head positivity is implied: c > 0 and continuity
            return best;
        }
        case ConeKind::Psd: {
            const Eigen::MatrixXd v_mat = smat(v);
            Eigen::LLT<Eigen::MatrixXd> llt(v_mat);
            if (llt.info() != Eigen::Success) return 0.0;
            const Eigen::MatrixXd l = llt.matrixL();
            Eigen::MatrixXd m = smat(dv);
            m = l.triangularView<Eigen::Lower>().solve(m);
            m = l.triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()),
                                                              Eigen::EigenvaluesOnly);
            const double lmin = es.eigenvalues()(0);
            return lmin >= 0.0 ? kInf : -1.0 / lmin;
        }
    }
    return kInf;
}

double Scaling::violation(ConeKind kind, int /*order*/, const Eigen::VectorXd& v) {
    switch (kind) {
        case ConeKind::Free:
            return 0.0;
        case ConeKind::NonNeg:
            return std::max(0.0, -v.minCoeff());
        case ConeKind::SecondOrder:
            return std::max(0.0, v.tail(v.size() - 1).norm() - v(0));
        case ConeKind::Psd: {
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(smat(v), Eigen::EigenvaluesOnly);
            return std::max(0.0, -es.eigenvalues()(0));
        }
    }
    return 0.0;
}

}  // namespace opf::conic::detail
