#include "opf/conic/solver.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <map>

#include "scaling.hpp"

namespace opf::conic {

using detail::kInf;
using detail::Scaling;

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::Optimal: return "optimal";
        case SolveStatus::PrimalInfeasible: return "primal-infeasible";
        case SolveStatus::DualInfeasible: return "dual-infeasible";
        case SolveStatus::MaxIter: return "max-iterations";
    }
    return "?";
}

namespace {

// ---------------------------------------------------------------- presolve

struct FixedVar {
    int row = 0;    // original singleton row
    int var = 0;    // original variable
    double coeff = 0.0;
    double value = 0.0;
};

struct Presolved {
    ConeProgram prog;               // reduced
    std::vector<int> orig_row;      // reduced row -> original row
    std::vector<int> orig_var;      // reduced var -> original var
    std::vector<FixedVar> fixed;    // in elimination order
    PresolveInfo info;
    int n_orig = 0;
    int m_orig = 0;
    // immediate infeasibility found during presolve
    bool infeasible = false;
    Eigen::VectorXd cert_y;  // original row space, b'y > 0, A'y = 0
};

// Detects empty rows, duplicate rows and free variables fixed by singleton
// rows. Runs to a fixpoint; all bookkeeping is kept so points and
// certificates lift back to the original spaces.
Presolved presolve(const ConeProgram& prog) {
    const int n = prog.num_vars;
    const int m = prog.num_rows();

    // dense-ish row storage (desk scale)
    std::vector<std::map<int, double>> rows(m);
    for (int k = 0; k < prog.A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(prog.A, k); it; ++it) {
            rows[it.row()][static_cast<int>(it.col())] += it.value();
        }
    }
    Eigen::VectorXd b = prog.b;
    Eigen::VectorXd c = prog.c;
    double offset = prog.obj_offset;

    std::vector<bool> row_alive(m, true);
    std::vector<bool> var_alive(n, true);
    std::vector<bool> var_free(n, false);
    for (const ConeBlock& blk : prog.blocks) {
        if (blk.kind == ConeKind::Free) {
            for (int j = 0; j < blk.dim; ++j) var_free[blk.offset + j] = true;
        }
    }

    Presolved out;
    out.n_orig = n;
    out.m_orig = m;

    auto declare_infeasible = [&](int i, int j_or_minus1, double scale_i, double scale_j) {
        out.infeasible = true;
        out.cert_y = Eigen::VectorXd::Zero(m);
        out.cert_y(i) = scale_i;
        if (j_or_minus1 >= 0) out.cert_y(j_or_minus1) = scale_j;
    };

    bool changed = true;
    while (changed && !out.infeasible) {
        changed = false;

        // empty rows
        for (int i = 0; i < m && !out.infeasible; ++i) {
            if (!row_alive[i] || !rows[i].empty()) continue;
            if (b(i) != 0.0) {
                declare_infeasible(i, -1, b(i) > 0 ? 1.0 : -1.0, 0.0);
                break;
            }
            row_alive[i] = false;
            ++out.info.empty_rows_removed;
            changed = true;
        }

        // duplicate rows (exact pattern + values)
        if (!out.infeasible) {
            std::map<std::vector<std::pair<int, double>>, int> seen;
            for (int i = 0; i < m; ++i) {
                if (!row_alive[i] || rows[i].empty()) continue;
                std::vector<std::pair<int, double>> key(rows[i].begin(), rows[i].end());
                auto [it, inserted] = seen.emplace(std::move(key), i);
                if (inserted) continue;
                const int first = it->second;
                if (b(i) == b(first)) {
                    row_alive[i] = false;
                    ++out.info.duplicate_rows_removed;
                    changed = true;
                } else {
                    const double sgn = (b(i) - b(first)) > 0 ? 1.0 : -1.0;
                    declare_infeasible(i, first, sgn, -sgn);
                    break;
                }
            }
        }

        // singleton rows fixing free variables
        if (!out.infeasible) {
            for (int i = 0; i < m; ++i) {
                if (!row_alive[i] || rows[i].size() != 1) continue;
                const auto [j, a] = *rows[i].begin();
                if (!var_free[j] || !var_alive[j] || a == 0.0) continue;
                const double value = b(i) / a;
                out.fixed.push_back({i, j, a, value});
                row_alive[i] = false;
                var_alive[j] = false;
                ++out.info.fixed_vars_eliminated;
                offset += c(j) * value;
                c(j) = 0.0;
                for (int r = 0; r < m; ++r) {
                    if (!row_alive[r]) continue;
                    auto found = rows[r].find(j);
                    if (found != rows[r].end()) {
                        b(r) -= found->second * value;
                        rows[r].erase(found);
                    }
                }
                changed = true;
            }
        }
    }

    if (out.infeasible) return out;

    // var/row renumbering; eliminated vars must be free scalars, so blocks
    // survive intact minus those entries.
    std::vector<int> new_var(n, -1);
    for (int j = 0; j < n; ++j) {
        if (var_alive[j]) {
            new_var[j] = static_cast<int>(out.orig_var.size());
            out.orig_var.push_back(j);
        }
    }
    std::vector<int> new_row(m, -1);
    for (int i = 0; i < m; ++i) {
        if (row_alive[i]) {
            new_row[i] = static_cast<int>(out.orig_row.size());
            out.orig_row.push_back(i);
        }
    }

    ConeProgram red;
    red.num_vars = static_cast<int>(out.orig_var.size());
    red.obj_offset = offset;
    red.c.resize(red.num_vars);
    for (int j = 0; j < n; ++j) {
        if (new_var[j] >= 0) red.c(new_var[j]) = c(j);
    }
    red.b.resize(static_cast<int>(out.orig_row.size()));
    std::vector<Eigen::Triplet<double>> trips;
    for (int i = 0; i < m; ++i) {
        if (new_row[i] < 0) continue;
        red.b(new_row[i]) = b(i);
        red.row_labels.push_back(prog.row_labels.empty() ? std::string()
                                                         : prog.row_labels[i]);
        for (const auto& [j, a] : rows[i]) trips.emplace_back(new_row[i], new_var[j], a);
    }
    red.A.resize(red.num_rows(), red.num_vars);
    red.A.setFromTriplets(trips.begin(), trips.end());
    red.A.makeCompressed();
    for (const ConeBlock& blk : prog.blocks) {
        ConeBlock nb = blk;
        int live = 0;
        int first = -1;
        for (int j = 0; j < blk.dim; ++j) {
            if (var_alive[blk.offset + j]) {
                if (first < 0) first = new_var[blk.offset + j];
                ++live;
            }
        }
        if (live == 0) continue;
        nb.offset = first;
        nb.dim = live;
        red.blocks.push_back(nb);
    }
    out.prog = std::move(red);
    return out;
}

// ------------------------------------------------------------- main solver

struct Workspace {
    const ConeProgram* prog = nullptr;
    std::vector<Scaling> scalings;  // conic blocks only
    int n = 0, m = 0;
    double nu_total = 1.0;

    Eigen::VectorXd x, y, s;
    double tau = 1.0, kappa = 1.0;

    Eigen::SparseMatrix<double> kkt_reg, kkt_exact;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
};

void init_point(Workspace& w) {
    w.x = Eigen::VectorXd::Zero(w.n);
    w.s = Eigen::VectorXd::Zero(w.n);
    w.y = Eigen::VectorXd::Zero(w.m);
    for (const ConeBlock& blk : w.prog->blocks) {
        if (blk.kind == ConeKind::Free) continue;
        Scaling sc;
        sc.kind = blk.kind;
        sc.offset = blk.offset;
        sc.dim = blk.dim;
        sc.order = blk.order;
        const Eigen::VectorXd e = sc.identity();
        w.x.segment(blk.offset, blk.dim) = e;
        w.s.segment(blk.offset, blk.dim) = e;
    }
    w.tau = 1.0;
    w.kappa = 1.0;
}

void build_scalings(Workspace& w) {
    w.scalings.clear();
    w.nu_total = 0.0;
    for (const ConeBlock& blk : w.prog->blocks) {
        if (blk.kind == ConeKind::Free) continue;
        Scaling sc;
        sc.kind = blk.kind;
        sc.offset = blk.offset;
        sc.dim = blk.dim;
        sc.order = blk.order;
        if (!sc.update(w.x.segment(blk.offset, blk.dim), w.s.segment(blk.offset, blk.dim))) {
            throw NumericalError("interior-point iterate left the cone interior");
        }
        w.nu_total += sc.barrier_degree();
        w.scalings.push_back(std::move(sc));
    }
}

void assemble_kkt(Workspace& w, double reg) {
    const int n = w.n;
    const int m = w.m;
    std::vector<Eigen::Triplet<double>> trips;
    for (int j = 0; j < n; ++j) {
        if (reg > 0.0) trips.emplace_back(j, j, reg);
    }
    for (const Scaling& sc : w.scalings) {
        for (int a = 0; a < sc.dim; ++a) {
            for (int bcol = 0; bcol < sc.dim; ++bcol) {
                const double v = sc.hinv(a, bcol);
                if (v != 0.0) trips.emplace_back(sc.offset + a, sc.offset + bcol, v);
            }
        }
    }
    for (int k = 0; k < w.prog->A.outerSize(); ++k) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(w.prog->A, k); it; ++it) {
            trips.emplace_back(n + it.row(), it.col(), it.value());
            trips.emplace_back(it.col(), n + it.row(), it.value());
        }
    }
    for (int i = 0; i < m; ++i) {
        if (reg > 0.0) trips.emplace_back(n + i, n + i, -reg);
    }
    Eigen::SparseMatrix<double>& target = (reg > 0.0) ? w.kkt_reg : w.kkt_exact;
    target.resize(n + m, n + m);
    target.setFromTriplets(trips.begin(), trips.end());
    target.makeCompressed();
}

Eigen::VectorXd kkt_solve(Workspace& w, const Eigen::VectorXd& rhs, int refine_steps) {
    Eigen::VectorXd z = w.ldlt.solve(rhs);
    for (int r = 0; r < refine_steps; ++r) {
        const Eigen::VectorXd resid = rhs - w.kkt_exact * z;
        z += w.ldlt.solve(resid);
    }
    return z;
}

struct Direction {
    Eigen::VectorXd dx, dy, ds;
    double dtau = 0.0, dkappa = 0.0;
};

double boundary_step(const Workspace& w, const Direction& d) {
    double alpha = kInf;
    for (const Scaling& sc : w.scalings) {
        alpha = std::min(alpha, sc.step_to_boundary(w.x.segment(sc.offset, sc.dim),
                                                    d.dx.segment(sc.offset, sc.dim)));
        alpha = std::min(alpha, sc.step_to_boundary(w.s.segment(sc.offset, sc.dim),
                                                    d.ds.segment(sc.offset, sc.dim)));
    }
    if (d.dtau < 0.0) alpha = std::min(alpha, -w.tau / d.dtau);
    if (d.dkappa < 0.0) alpha = std::min(alpha, -w.kappa / d.dkappa);
    return alpha;
}

}  // namespace

ConeSolution solve(const ConeProgram& prog_in, const SolverOptions& opts) {
    Presolved pre = presolve(prog_in);

    ConeSolution sol;
    sol.presolve = pre.info;

    if (pre.infeasible) {
        sol.status = SolveStatus::PrimalInfeasible;
        const double by = prog_in.b.dot(pre.cert_y);
        sol.y = pre.cert_y / by;
        sol.x = Eigen::VectorXd::Zero(prog_in.num_vars);
        sol.s = Eigen::VectorXd::Zero(prog_in.num_vars);
        return sol;
    }

    const ConeProgram& prog = pre.prog;
    Workspace w;
    w.prog = &prog;
    w.n = prog.num_vars;
    w.m = prog.num_rows();
    init_point(w);

    const double bnorm = prog.b.size() ? prog.b.lpNorm<Eigen::Infinity>() : 0.0;
    const double cnorm = prog.c.size() ? prog.c.lpNorm<Eigen::Infinity>() : 0.0;

    SolveStatus status = SolveStatus::MaxIter;
    int iter = 0;

    auto finish_scaled = [&](SolveStatus st) {
        sol.status = st;
        // lift the tau-scaled point back to the original spaces
        Eigen::VectorXd x_red = w.x / w.tau;
        Eigen::VectorXd y_red = w.y / w.tau;
        Eigen::VectorXd s_red = w.s / w.tau;
        sol.x = Eigen::VectorXd::Zero(pre.n_orig);
        sol.y = Eigen::VectorXd::Zero(pre.m_orig);
        sol.s = Eigen::VectorXd::Zero(pre.n_orig);
        for (int j = 0; j < w.n; ++j) {
            sol.x(pre.orig_var[j]) = x_red(j);
            sol.s(pre.orig_var[j]) = s_red(j);
        }
        for (int i = 0; i < w.m; ++i) sol.y(pre.orig_row[i]) = y_red(i);
        for (auto it = pre.fixed.rbegin(); it != pre.fixed.rend(); ++it) {
            sol.x(it->var) = it->value;
            // dual of the eliminated singleton row restores stationarity
            double coupled = prog_in.c(it->var);
            for (Eigen::SparseMatrix<double>::InnerIterator a(prog_in.A, it->var); a; ++a) {
                if (a.row() != it->row) coupled -= a.value() * sol.y(a.row());
            }
            sol.y(it->row) = coupled / it->coeff;
            sol.s(it->var) = 0.0;
        }
        sol.primal_obj = prog_in.c.dot(sol.x) + prog_in.obj_offset;
        sol.dual_obj = prog_in.b.dot(sol.y) + prog_in.obj_offset;
        const double denom = 1.0 + std::max(std::abs(sol.primal_obj), std::abs(sol.dual_obj));
        sol.gap_rel = std::abs(sol.primal_obj - sol.dual_obj) / denom;
        sol.iterations = iter;
    };

    auto finish_certificate = [&](SolveStatus st, const Eigen::VectorXd& x_ray,
                                  const Eigen::VectorXd& y_ray, const Eigen::VectorXd& s_ray) {
        sol.status = st;
        sol.x = Eigen::VectorXd::Zero(pre.n_orig);
        sol.y = Eigen::VectorXd::Zero(pre.m_orig);
        sol.s = Eigen::VectorXd::Zero(pre.n_orig);
        for (int j = 0; j < w.n; ++j) {
            sol.x(pre.orig_var[j]) = x_ray(j);
            sol.s(pre.orig_var[j]) = s_ray(j);
        }
        for (int i = 0; i < w.m; ++i) sol.y(pre.orig_row[i]) = y_ray(i);
        for (auto it = pre.fixed.rbegin(); it != pre.fixed.rend(); ++it) {
            // cancel the eliminated column so A'y + s stays zero there
            double coupled = 0.0;
            for (Eigen::SparseMatrix<double>::InnerIterator a(prog_in.A, it->var); a; ++a) {
                if (a.row() != it->row) coupled -= a.value() * sol.y(a.row());
            }
            sol.y(it->row) = coupled / it->coeff;
        }
        sol.iterations = iter;
    };

    if (w.n == 0) {
        finish_scaled(SolveStatus::Optimal);
        sol.status = SolveStatus::Optimal;
        return sol;
    }

    for (iter = 0; iter < opts.max_iterations; ++iter) {
        // residuals of the homogeneous embedding
        const Eigen::VectorXd r_p = prog.A * w.x - prog.b * w.tau;
        const Eigen::VectorXd r_d =
            -(prog.A.transpose() * w.y) + prog.c * w.tau - w.s;
        const double r_g = prog.c.dot(w.x) - prog.b.dot(w.y) + w.kappa;

        const double xs = w.x.dot(w.s);
        const double mu = (xs + w.tau * w.kappa) / (w.nu_total + 1.0);

        const double pobj = prog.c.dot(w.x) / w.tau + prog.obj_offset;
        const double dobj = prog.b.dot(w.y) / w.tau + prog.obj_offset;
        const double pres =
            (prog.A * (w.x / w.tau) - prog.b).lpNorm<Eigen::Infinity>() / (1.0 + bnorm);
        const double dres = (prog.A.transpose() * (w.y / w.tau) + w.s / w.tau - prog.c)
                                .lpNorm<Eigen::Infinity>() /
                            (1.0 + cnorm);
        const double grel =
            std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));

        IterateInfo info;
        info.primal_obj = pobj;
        info.dual_obj = dobj;
        info.primal_res = pres;
        info.dual_res = dres;
        info.gap_rel = grel;
        info.mu = mu;
        info.tau = w.tau;
        info.kappa = w.kappa;
        info.cone_inner = xs;
        sol.trace.push_back(info);

        if (opts.debug_checks) {
            if (xs < -1e-9 * (1.0 + std::abs(xs)) || w.tau <= 0.0 || w.kappa <= 0.0) {
                throw NumericalError("interior-point invariant violated (cone inner product)");
            }
        }

        if (pres <= opts.feas_tol && dres <= opts.feas_tol && grel <= opts.gap_tol) {
            status = SolveStatus::Optimal;
            break;
        }

        // infeasibility certificates, attempted once the embedding collapses
        const double by = prog.b.dot(w.y);
        const double cx = prog.c.dot(w.x);
        if (w.tau <= 1e-2 * std::min(1.0, w.kappa)) {
            if (by > 0.0) {
                const Eigen::VectorXd y_ray = w.y / by;
                const Eigen::VectorXd s_ray = w.s / by;
                const double qual =
                    (prog.A.transpose() * y_ray + s_ray).lpNorm<Eigen::Infinity>();
                if (qual <= opts.feas_tol * std::max(1.0, y_ray.lpNorm<Eigen::Infinity>())) {
                    finish_certificate(SolveStatus::PrimalInfeasible,
                                       Eigen::VectorXd::Zero(w.n), y_ray, s_ray);
                    return sol;
                }
            }
            if (cx < 0.0) {
                const Eigen::VectorXd x_ray = w.x / (-cx);
                const double qual = (prog.A * x_ray).lpNorm<Eigen::Infinity>();
                if (qual <= opts.feas_tol * std::max(1.0, x_ray.lpNorm<Eigen::Infinity>())) {
                    finish_certificate(SolveStatus::DualInfeasible, x_ray,
                                       Eigen::VectorXd::Zero(w.m), Eigen::VectorXd::Zero(w.n));
                    return sol;
                }
            }
        }

        build_scalings(w);
        assemble_kkt(w, opts.static_reg);
        assemble_kkt(w, 0.0);
        w.ldlt.compute(w.kkt_reg);
        if (w.ldlt.info() != Eigen::Success) {
            throw NumericalError("KKT factorization failed");
        }
        if (iter == 0) {
            // pivots that collapsed onto the regularization mark rows kept
            // factorizable only by it (dependent after presolve)
            const Eigen::VectorXd d = w.ldlt.vectorD();
            int absorbed = 0;
            for (int i = 0; i < d.size(); ++i) {
                if (std::abs(d(i)) <= 10.0 * opts.static_reg) ++absorbed;
            }
            sol.presolve.dependent_rows_regularized = absorbed;
        }

        // constant part: K [dxc; wc] = [-c; b], dy = -w
        Eigen::VectorXd rhs_c(w.n + w.m);
        rhs_c.head(w.n) = -prog.c;
        rhs_c.tail(w.m) = prog.b;
        const Eigen::VectorXd zc = kkt_solve(w, rhs_c, opts.refine_steps);
        const Eigen::VectorXd dxc = zc.head(w.n);
        const Eigen::VectorXd dyc = -zc.tail(w.m);

        auto solve_direction = [&](double eta, const Eigen::VectorXd& phi_g,
                                   double dtau_comp) -> Direction {
            // phi_g holds the per-block T^{-T}(lambda \ d_c) contributions
            Eigen::VectorXd rhs(w.n + w.m);
            rhs.head(w.n) = -eta * r_d + phi_g;
            rhs.tail(w.m) = -eta * r_p;
            const Eigen::VectorXd z0 = kkt_solve(w, rhs, opts.refine_steps);
            const Eigen::VectorXd dx0 = z0.head(w.n);
            const Eigen::VectorXd dy0 = -z0.tail(w.m);

            const double den = prog.c.dot(dxc) - prog.b.dot(dyc) - w.kappa / w.tau;
            const double num = -eta * r_g - prog.c.dot(dx0) + prog.b.dot(dy0) -
                               dtau_comp / w.tau;
            if (std::abs(den) < 1e-300) throw NumericalError("degenerate tau step");
            Direction d;
            d.dtau = num / den;
            d.dx = dx0 + d.dtau * dxc;
            d.dy = dy0 + d.dtau * dyc;
            d.ds = eta * r_d + prog.c * d.dtau - prog.A.transpose() * d.dy;
            for (const ConeBlock& blk : prog.blocks) {  // dual of free stays zero
                if (blk.kind == ConeKind::Free) d.ds.segment(blk.offset, blk.dim).setZero();
            }
            d.dkappa = (dtau_comp - w.kappa * d.dtau) / w.tau;
            return d;
        };

        // predictor: drive residuals and complementarity to zero
        Eigen::VectorXd phi_aff = Eigen::VectorXd::Zero(w.n);
        for (const Scaling& sc : w.scalings) {
            phi_aff.segment(sc.offset, sc.dim) = -w.s.segment(sc.offset, sc.dim);
        }
        const Direction aff = solve_direction(1.0, phi_aff, -w.tau * w.kappa);

        const double alpha_aff = std::min(1.0, boundary_step(w, aff));
        const double mu_aff =
            ((w.x + alpha_aff * aff.dx).dot(w.s + alpha_aff * aff.ds) +
             (w.tau + alpha_aff * aff.dtau) * (w.kappa + alpha_aff * aff.dkappa)) /
            (w.nu_total + 1.0);
        double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
        sigma = std::min(1.0, std::max(0.0, sigma));

        // corrector
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(w.n);
        for (const Scaling& sc : w.scalings) {
            const Eigen::VectorXd dxs = sc.scale_x(aff.dx.segment(sc.offset, sc.dim));
            const Eigen::VectorXd dss = sc.scale_s(aff.ds.segment(sc.offset, sc.dim));
            const Eigen::VectorXd d_c = sigma * mu * sc.identity() - sc.lambda_sq() -
                                        sc.jordan_prod(dxs, dss);
            phi.segment(sc.offset, sc.dim) = sc.unscale_rhs(sc.jordan_div_lambda(d_c));
        }
        const double dtau_comp =
            sigma * mu - w.tau * w.kappa - aff.dtau * aff.dkappa;
        const Direction dir = solve_direction(1.0 - sigma, phi, dtau_comp);

        const double alpha = std::min(1.0, opts.step_fraction * boundary_step(w, dir));
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw NumericalError("interior-point step collapsed");
        }
        w.x += alpha * dir.dx;
        w.y += alpha * dir.dy;
        w.s += alpha * dir.ds;
        w.tau += alpha * dir.dtau;
        w.kappa += alpha * dir.dkappa;
        sol.trace.back().step = alpha;

        if (w.tau <= 0.0 || w.kappa <= 0.0) {
            throw NumericalError("homogeneous variables left the positive orthant");
        }
    }

    finish_scaled(status);
    return sol;
}

double cone_violation(const ConeProgram& prog, const Eigen::VectorXd& x) {
    double worst = 0.0;
    for (const ConeBlock& blk : prog.blocks) {
        worst = std::max(worst, Scaling::violation(blk.kind, blk.order,
                                                   x.segment(blk.offset, blk.dim)));
    }
    return worst;
}

ResidualReport residuals(const ConeProgram& prog, const ConeSolution& sol) {
    ResidualReport rep;
    const double bnorm = prog.b.size() ? prog.b.lpNorm<Eigen::Infinity>() : 0.0;
    const double cnorm = prog.c.size() ? prog.c.lpNorm<Eigen::Infinity>() : 0.0;

    rep.primal_feas = (prog.A * sol.x - prog.b).lpNorm<Eigen::Infinity>() / (1.0 + bnorm);
    rep.dual_feas = (prog.A.transpose() * sol.y + sol.s - prog.c).lpNorm<Eigen::Infinity>() /
                    (1.0 + cnorm);
    const double pobj = prog.c.dot(sol.x) + prog.obj_offset;
    const double dobj = prog.b.dot(sol.y) + prog.obj_offset;
    rep.gap_rel = std::abs(pobj - dobj) / (1.0 + std::max(std::abs(pobj), std::abs(dobj)));
    rep.cone_violation_x = cone_violation(prog, sol.x);
    rep.cone_violation_s = cone_violation(prog, sol.s);

    rep.pcert_objective = prog.b.dot(sol.y);
    rep.pcert_residual = (prog.A.transpose() * sol.y + sol.s).lpNorm<Eigen::Infinity>();
    rep.dcert_objective = prog.c.dot(sol.x);
    rep.dcert_residual = (prog.A * sol.x).lpNorm<Eigen::Infinity>();
    return rep;
}

}  // namespace opf::conic
