#include "screwgrasp/socp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace screwgrasp {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        default: return "max_iter";
    }
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Nesterov-Todd scaling state. LP rows carry w_i = sqrt(s_i/z_i); each SOC
// block carries the scaled point (eta, wbar).
struct Scaling {
    VectorXd lp_w;                  // n_nonneg entries
    std::vector<double> soc_eta;
    std::vector<VectorXd> soc_wbar;
};

struct ConeLayout {
    int l = 0;                     // LP rows
    std::vector<int> dims;         // SOC dims
    int m = 0;
    int degree() const { return l + static_cast<int>(dims.size()); }
};

// lambda = W z (and W^{-1} s): the scaled cone point.
void apply_scaling(const ConeLayout& k, const Scaling& w, const VectorXd& z, VectorXd& out) {
    out.resize(k.m);
    out.head(k.l) = w.lp_w.cwiseProduct(z.head(k.l));
    int at = k.l;
    for (std::size_t c = 0; c < k.dims.size(); ++c) {
        const int d = k.dims[c];
        const VectorXd& wb = w.soc_wbar[c];
        const double eta = w.soc_eta[c];
        const double zeta = wb.tail(d - 1).dot(z.segment(at + 1, d - 1));
        const double factor = z(at) + zeta / (1.0 + wb(0));
        out(at) = eta * (wb(0) * z(at) + zeta);
        out.segment(at + 1, d - 1) = eta * (z.segment(at + 1, d - 1) + factor * wb.tail(d - 1));
        at += d;
    }
}

bool update_scaling(const ConeLayout& k, const VectorXd& s, const VectorXd& z, Scaling& w,
                    VectorXd& lambda) {
    w.lp_w.resize(k.l);
    for (int i = 0; i < k.l; ++i) {
        if (s(i) <= 0.0 || z(i) <= 0.0) return false;
        w.lp_w(i) = std::sqrt(s(i) / z(i));
    }
    w.soc_eta.assign(k.dims.size(), 0.0);
    w.soc_wbar.assign(k.dims.size(), VectorXd());
    int at = k.l;
    for (std::size_t c = 0; c < k.dims.size(); ++c) {
        const int d = k.dims[c];
        const double sres = s(at) * s(at) - s.segment(at + 1, d - 1).squaredNorm();
        const double zres = z(at) * z(at) - z.segment(at + 1, d - 1).squaredNorm();
        if (sres <= 0.0 || zres <= 0.0) return false;
        const double snorm = std::sqrt(sres);
        const double znorm = std::sqrt(zres);
        VectorXd sbar = s.segment(at, d) / snorm;
        VectorXd zbar = z.segment(at, d) / znorm;
        const double gamma = std::sqrt(0.5 * (1.0 + sbar.dot(zbar)));
        VectorXd wbar(d);
        wbar(0) = (0.5 / gamma) * (sbar(0) + zbar(0));
        wbar.tail(d - 1) = (0.5 / gamma) * (sbar.tail(d - 1) - zbar.tail(d - 1));
        w.soc_eta[c] = std::sqrt(snorm / znorm);
        w.soc_wbar[c] = std::move(wbar);
        at += d;
    }
    apply_scaling(k, w, z, lambda);
    return true;
}

// u o v in the Jordan algebra of the cone.
void conic_product(const ConeLayout& k, const VectorXd& u, const VectorXd& v, VectorXd& out) {
    out.resize(k.m);
    out.head(k.l) = u.head(k.l).cwiseProduct(v.head(k.l));
    int at = k.l;
    for (int d : k.dims) {
        out(at) = u.segment(at, d).dot(v.segment(at, d));
        out.segment(at + 1, d - 1) = u(at) * v.segment(at + 1, d - 1) +
                                     v(at) * u.segment(at + 1, d - 1);
        at += d;
    }
}

// v = u \ w, the inverse of the Jordan product.
void conic_division(const ConeLayout& k, const VectorXd& u, const VectorXd& w, VectorXd& v) {
    v.resize(k.m);
    v.head(k.l) = w.head(k.l).cwiseQuotient(u.head(k.l));
    int at = k.l;
    for (int d : k.dims) {
        const double u0 = u(at);
        const double w0 = w(at);
        const double rho = u0 * u0 - u.segment(at + 1, d - 1).squaredNorm();
        const double zeta = u.segment(at + 1, d - 1).dot(w.segment(at + 1, d - 1));
        const double factor = (zeta / u0 - w0) / rho;
        v(at) = (u0 * w0 - zeta) / rho;
        v.segment(at + 1, d - 1) = factor * u.segment(at + 1, d - 1) +
                                   w.segment(at + 1, d - 1) / u0;
        at += d;
    }
}

// Shifts r into the interior of the cone along the identity element.
VectorXd bring_to_cone(const ConeLayout& k, const VectorXd& r) {
    double alpha = -0.99;
    for (int i = 0; i < k.l; ++i) {
        if (r(i) <= 0.0 && -r(i) > alpha) alpha = -r(i);
    }
    int at = k.l;
    for (int d : k.dims) {
        const double res = r(at) - r.segment(at + 1, d - 1).norm();
        if (res <= 0.0 && -res > alpha) alpha = -res;
        at += d;
    }
    VectorXd s = r;
    alpha += 1.0;
    s.head(k.l).array() += alpha;
    at = k.l;
    for (int d : k.dims) {
        s(at) += alpha;
        at += d;
    }
    return s;
}

// Largest step with lambda + alpha*ds and lambda + alpha*dz inside the cone,
// and tau/kappa nonnegative (directions given in the scaled frame).
double line_search(const ConeLayout& k, const VectorXd& lambda, const VectorXd& ds,
                   const VectorXd& dz, double tau, double dtau, double kap, double dkap) {
    double alpha = 1.0;
    for (int i = 0; i < k.l; ++i) {
        const double rho = ds(i) / lambda(i);
        const double sig = dz(i) / lambda(i);
        if (rho < 0.0) alpha = std::min(alpha, -1.0 / rho);
        if (sig < 0.0) alpha = std::min(alpha, -1.0 / sig);
    }
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kap / dkap);

    int at = k.l;
    for (int d : k.dims) {
        const double ln2 = lambda(at) * lambda(at) - lambda.segment(at + 1, d - 1).squaredNorm();
        if (ln2 <= 0.0) {
            at += d;
            continue;
        }
        const double ln = std::sqrt(ln2);
        const VectorXd lbar = lambda.segment(at, d) / ln;
        for (const VectorXd* dir : {&ds, &dz}) {
            const auto head = (*dir)(at);
            const auto tail = dir->segment(at + 1, d - 1);
            const double lbar_dot = lbar(0) * head - lbar.tail(d - 1).dot(tail);
            const double factor = (lbar_dot + head) / (lbar(0) + 1.0);
            const double rho0 = lbar_dot / ln;
            const double rho_tail_norm =
                ((tail - factor * lbar.tail(d - 1)) / ln).norm();
            const double bound = rho_tail_norm - rho0;
            if (bound > 0.0) alpha = std::min(alpha, 1.0 / bound);
        }
        at += d;
    }
    return std::max(alpha, 1e-10);
}

struct KktSolver {
    const ConeProgram* prog = nullptr;
    ConeLayout layout;
    int n = 0, p = 0, m = 0, dim = 0;
    MatrixXd K;       // regularized matrix that gets factorized
    MatrixXd K_true;  // unregularized, for iterative refinement
    Eigen::PartialPivLU<MatrixXd> lu;
    double reg = 1e-10;
    int refine_iters = 2;

    void init(const ConeProgram& pr, const SolverSettings& st) {
        prog = &pr;
        n = pr.num_vars();
        p = pr.num_eq();
        m = pr.num_cone_rows();
        layout.l = pr.n_nonneg;
        layout.dims = pr.soc_dims;
        layout.m = m;
        dim = n + p + m;
        reg = st.static_reg;
        refine_iters = st.refine_iters;
        K_true.setZero(dim, dim);
        if (p > 0) {
            K_true.block(n, 0, p, n) = pr.A;
            K_true.block(0, n, n, p) = pr.A.transpose();
        }
        K_true.block(n + p, 0, m, n) = pr.G;
        K_true.block(0, n + p, n, m) = pr.G.transpose();
    }

    // Writes -W^2 into the cone block and refactorizes.
    void factor(const Scaling& w) {
        auto wblock = K_true.block(n + p, n + p, m, m);
        wblock.setZero();
        for (int i = 0; i < layout.l; ++i) {
            wblock(i, i) = -w.lp_w(i) * w.lp_w(i);
        }
        int at = layout.l;
        for (std::size_t c = 0; c < layout.dims.size(); ++c) {
            const int d = layout.dims[c];
            const VectorXd& wb = w.soc_wbar[c];
            const double e2 = w.soc_eta[c] * w.soc_eta[c];
            // W^2 = eta^2 (2 wbar wbar' - J)
            MatrixXd blk = 2.0 * wb * wb.transpose();
            blk(0, 0) -= 1.0;
            blk.block(1, 1, d - 1, d - 1) += MatrixXd::Identity(d - 1, d - 1);
            wblock.block(at, at, d, d) = -e2 * blk;
            at += d;
        }
        K = K_true;
        for (int i = 0; i < n; ++i) K(i, i) += reg;
        for (int i = n; i < dim; ++i) K(i, i) -= reg;
        lu.compute(K);
    }

    void identity_factor() {
        auto wblock = K_true.block(n + p, n + p, m, m);
        wblock = -MatrixXd::Identity(m, m);
        K = K_true;
        for (int i = 0; i < n; ++i) K(i, i) += reg;
        for (int i = n; i < dim; ++i) K(i, i) -= reg;
        lu.compute(K);
    }

    void solve(const VectorXd& rhs, VectorXd& dx, VectorXd& dy, VectorXd& dz) const {
        VectorXd u = lu.solve(rhs);
        for (int it = 0; it < refine_iters; ++it) {
            VectorXd r = rhs - K_true * u;
            if (r.lpNorm<Eigen::Infinity>() < 1e-14 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
            u += lu.solve(r);
        }
        dx = u.head(n);
        dy = u.segment(n, p);
        dz = u.tail(m);
    }
};

struct Iterate {
    VectorXd x, y, z, s;
    double tau = 1.0, kap = 1.0;
    double pres = 0.0, dres = 0.0, gap = 0.0, mu = 0.0;
    double pcost = 0.0, dcost = 0.0;
    double relgap = std::numeric_limits<double>::quiet_NaN();
    double pinfres = std::numeric_limits<double>::quiet_NaN();
    double dinfres = std::numeric_limits<double>::quiet_NaN();

    double merit() const { return std::max({pres, dres, std::abs(gap)}); }
};

}  // namespace

ConeSolution solve_cone_program(const ConeProgram& prog, const SolverSettings& settings) {
    const int n = prog.num_vars();
    const int p = prog.num_eq();
    const int m = prog.num_cone_rows();
    if (m <= 0) throw std::invalid_argument("cone program needs at least one cone row");
    {
        int rows = prog.n_nonneg;
        for (int d : prog.soc_dims) rows += d;
        if (rows != m || prog.G.rows() != m || prog.G.cols() != n ||
            (p > 0 && (prog.A.rows() != p || prog.A.cols() != n))) {
            throw std::invalid_argument("inconsistent cone program dimensions");
        }
    }

    // One-shot row scaling of the cone constraints; SOC blocks are scaled
    // uniformly so the cone is preserved.
    ConeProgram pr = prog;
    VectorXd row_scale = VectorXd::Ones(m);
    for (int i = 0; i < pr.n_nonneg; ++i) {
        const double sc = std::max({1.0, std::abs(pr.h(i)), pr.G.row(i).cwiseAbs().maxCoeff()});
        row_scale(i) = sc;
        pr.G.row(i) /= sc;
        pr.h(i) /= sc;
    }
    {
        int at = pr.n_nonneg;
        for (int d : pr.soc_dims) {
            double sc = std::max(1.0, pr.h.segment(at, d).cwiseAbs().maxCoeff());
            sc = std::max(sc, pr.G.middleRows(at, d).cwiseAbs().maxCoeff());
            for (int r = at; r < at + d; ++r) row_scale(r) = sc;
            pr.G.middleRows(at, d) /= sc;
            pr.h.segment(at, d) /= sc;
            at += d;
        }
    }

    KktSolver kkt;
    kkt.init(pr, settings);
    const ConeLayout& layout = kkt.layout;

    const double resx0 = std::max(1.0, pr.c.norm());
    const double resy0 = std::max(1.0, pr.b.norm());
    const double resz0 = std::max(1.0, pr.h.norm());

    VectorXd rhs1(kkt.dim), rhs2(kkt.dim);
    rhs1.setZero();
    if (p > 0) rhs1.segment(n, p) = pr.b;
    rhs1.tail(m) = pr.h;
    rhs2.setZero();
    rhs2.head(n) = -pr.c;

    VectorXd x1(n), y1(p), z1(m), x2(n), y2(p), z2(m);

    kkt.identity_factor();
    kkt.solve(rhs1, x1, y1, z1);
    Iterate w;
    w.x = x1;
    w.s = bring_to_cone(layout, -z1);
    kkt.solve(rhs2, x2, y2, z2);
    w.y = y2;
    w.z = bring_to_cone(layout, z2);
    w.tau = 1.0;
    w.kap = 1.0;

    rhs1.head(n) = -pr.c;  // constant rhs reused every iteration

    const double tol = settings.tol;
    const double tol_inacc = std::min(1e-3, tol * 1000.0);

    Scaling scal;
    VectorXd lambda(m), rx(n), ry(p), rz(m);
    double rt = 0.0, hresx = 0.0, hresy = 0.0, hresz = 0.0;

    Iterate best = w;
    double best_merit = std::numeric_limits<double>::max();

    ConeSolution sol;
    sol.status = SolveStatus::max_iter;

    auto compute_residuals = [&](Iterate& it) {
        rx = -pr.G.transpose() * it.z;
        if (p > 0) rx -= pr.A.transpose() * it.y;
        hresx = rx.norm();
        rx -= it.tau * pr.c;
        if (p > 0) {
            ry = pr.A * it.x;
            hresy = ry.norm();
            ry -= it.tau * pr.b;
        } else {
            ry.resize(0);
            hresy = 0.0;
        }
        rz = it.s + pr.G * it.x;
        hresz = rz.norm();
        rz -= it.tau * pr.h;
        const double cx = pr.c.dot(it.x);
        const double by = p > 0 ? pr.b.dot(it.y) : 0.0;
        const double hz = pr.h.dot(it.z);
        rt = it.kap + cx + by + hz;

        const double nx = it.x.norm();
        const double ny = it.y.norm();
        const double nz = it.z.norm();
        const double ns = it.s.norm();
        it.gap = it.s.dot(it.z);
        it.mu = (it.gap + it.kap * it.tau) / (layout.degree() + 1);
        it.pcost = cx / it.tau;
        it.dcost = -(hz + by) / it.tau;
        if (it.pcost < 0.0) {
            it.relgap = it.gap / (-it.pcost);
        } else if (it.dcost > 0.0) {
            it.relgap = it.gap / it.dcost;
        } else {
            it.relgap = std::numeric_limits<double>::quiet_NaN();
        }
        const double nry = p > 0 ? ry.norm() / std::max(resy0 + nx, 1.0) : 0.0;
        const double nrz = rz.norm() / std::max(resz0 + nx + ns, 1.0);
        it.pres = std::max(nry, nrz) / it.tau;
        it.dres = rx.norm() / std::max(resx0 + ny + nz, 1.0) / it.tau;
        it.pinfres = std::numeric_limits<double>::quiet_NaN();
        it.dinfres = std::numeric_limits<double>::quiet_NaN();
        if ((hz + by) / std::max(ny + nz, 1.0) < -tol) {
            it.pinfres = hresx / std::max(ny + nz, 1.0);
        }
        if (cx / std::max(nx, 1.0) < -tol) {
            it.dinfres = std::max(hresy / std::max(nx, 1.0), hresz / std::max(nx + ns, 1.0));
        }
    };

    auto classify = [&](const Iterate& it, double feastol, double abstol,
                        double reltol) -> SolveStatus {
        const double cx = it.pcost * it.tau;
        const double minus_by_hz = it.dcost * it.tau;
        if ((-cx > 0.0 || minus_by_hz >= -abstol) && it.pres < feastol && it.dres < feastol &&
            (it.gap < abstol || (!std::isnan(it.relgap) && it.relgap < reltol))) {
            return SolveStatus::optimal;
        }
        if (!std::isnan(it.dinfres) && it.dinfres < feastol && it.tau < it.kap) {
            return SolveStatus::unbounded;
        }
        if (!std::isnan(it.pinfres) && it.pinfres < feastol &&
            (it.tau < it.kap || (it.tau < feastol && it.kap < feastol))) {
            return SolveStatus::infeasible;
        }
        return SolveStatus::max_iter;
    };

    auto extract = [&](const Iterate& it, SolveStatus status, int iters) {
        sol.status = status;
        sol.iterations = iters;
        sol.x = it.x / it.tau;
        sol.y = it.y / it.tau;
        sol.z = it.z / it.tau;
        sol.s = it.s / it.tau;
        if (status == SolveStatus::infeasible || status == SolveStatus::unbounded) {
            // Certificate ray; tau is vanishing, report unnormalized.
            sol.x = it.x;
            sol.y = it.y;
            sol.z = it.z;
            sol.s = it.s;
            sol.certificate_residual =
                status == SolveStatus::infeasible ? it.pinfres : it.dinfres;
        }
        // Undo the cone-row scaling.
        sol.z = sol.z.cwiseQuotient(row_scale);
        sol.s = sol.s.cwiseProduct(row_scale);
        sol.objective = prog.c.dot(sol.x);
        sol.kkt_residual = std::max(it.pres, it.dres);
        sol.duality_gap = it.gap / (it.tau * it.tau);
    };

    VectorXd ds_comb(m), w_dz(m), ds_by_w(m), lam_div(m), tmp(m);

    int iter = 0;
    for (iter = 0; iter <= settings.max_iter; ++iter) {
        compute_residuals(w);

        if (std::isnan(w.pcost) || std::isnan(w.gap)) {
            extract(best, classify(best, tol_inacc, tol_inacc, tol_inacc), iter);
            if (sol.status == SolveStatus::max_iter) sol.status = SolveStatus::max_iter;
            return sol;
        }

        const SolveStatus status = classify(w, tol, tol, tol);
        if (status != SolveStatus::max_iter) {
            extract(w, status, iter);
            return sol;
        }
        if (iter == settings.max_iter) break;

        if (iter == 0 || w.merit() < best_merit) {
            best = w;
            best_merit = w.merit();
        }

        if (!update_scaling(layout, w.s, w.z, scal, lambda)) {
            break;  // iterate left the cone; report best effort below
        }
        kkt.factor(scal);

        kkt.solve(rhs1, x1, y1, z1);
        const double dtau_denom =
            w.kap / w.tau - pr.c.dot(x1) - (p > 0 ? pr.b.dot(y1) : 0.0) - pr.h.dot(z1);

        // Affine (predictor) direction.
        rhs2.head(n) = rx;
        if (p > 0) rhs2.segment(n, p) = -ry;
        rhs2.tail(m) = w.s - rz;
        kkt.solve(rhs2, x2, y2, z2);
        const double dtau_aff = (rt - w.kap + pr.c.dot(x2) + (p > 0 ? pr.b.dot(y2) : 0.0) +
                                 pr.h.dot(z2)) /
                                dtau_denom;
        VectorXd dz_aff = z2 + dtau_aff * z1;
        apply_scaling(layout, scal, dz_aff, w_dz);
        ds_by_w = -w_dz - lambda;  // W^{-1} ds_aff
        const double dkap_aff = -w.kap - (w.kap / w.tau) * dtau_aff;
        const double step_aff =
            std::min(1.0, line_search(layout, lambda, ds_by_w, w_dz, w.tau, dtau_aff, w.kap,
                                      dkap_aff));

        const double sigma = std::clamp(std::pow(1.0 - step_aff, 3), 1e-4, 0.9999);

        // Combined (corrector) direction.
        conic_product(layout, lambda, lambda, ds_comb);
        conic_product(layout, ds_by_w, w_dz, tmp);
        ds_comb += tmp;
        const double sigmamu = sigma * w.mu;
        ds_comb.head(layout.l).array() -= sigmamu;
        {
            int at = layout.l;
            for (int d : layout.dims) {
                ds_comb(at) -= sigmamu;
                at += d;
            }
        }
        conic_division(layout, lambda, ds_comb, lam_div);
        apply_scaling(layout, scal, lam_div, tmp);
        const double oms = 1.0 - sigma;
        rhs2.head(n) = oms * rx;
        if (p > 0) rhs2.segment(n, p) = -oms * ry;
        rhs2.tail(m) = -oms * rz + tmp;
        kkt.solve(rhs2, x2, y2, z2);

        const double bkap = w.kap * w.tau + dkap_aff * dtau_aff - sigmamu;
        const double dtau = (oms * rt - bkap / w.tau + pr.c.dot(x2) +
                             (p > 0 ? pr.b.dot(y2) : 0.0) + pr.h.dot(z2)) /
                            dtau_denom;
        x2 += dtau * x1;
        if (p > 0) y2 += dtau * y1;
        z2 += dtau * z1;
        apply_scaling(layout, scal, z2, w_dz);
        ds_by_w = -(lam_div + w_dz);
        const double dkap = -(bkap + w.kap * dtau) / w.tau;

        const double step =
            settings.step_fraction * std::min(1.0, line_search(layout, lambda, ds_by_w, w_dz,
                                                               w.tau, dtau, w.kap, dkap));
        apply_scaling(layout, scal, ds_by_w, tmp);  // ds = W (W^{-1} ds)

        w.x += step * x2;
        w.y += step * y2;
        w.z += step * z2;
        w.s += step * tmp;
        w.kap += step * dkap;
        w.tau += step * dtau;

        if (step < 1e-8) break;  // stalled
    }

    // No full-precision exit: fall back to the best iterate at reduced accuracy.
    compute_residuals(w);
    const Iterate& final_it = w.merit() < best_merit ? w : best;
    SolveStatus status = classify(final_it, tol_inacc, tol_inacc, tol_inacc);
    extract(final_it, status, iter);
    return sol;
}

}  // namespace screwgrasp
