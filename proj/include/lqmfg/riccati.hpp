#pragma once

#include "lqmfg/lq_problem.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <utility>
#include <vector>

namespace lqmfg {

// ---------------------------------------------------------------------------
// Solution containers
// ---------------------------------------------------------------------------

/// The coupled Riccati triple on the time grid. Each entry is self-adjoint
/// on the state space.
struct XiPath {
    std::vector<double> grid;
    std::vector<Matrix> P, Upsilon, Gamma;
    SpacePtr space;

    Matrix P_at(double t) const { return detail::interp_path(grid, P, t, Interp::linear); }
    Matrix Upsilon_at(double t) const { return detail::interp_path(grid, Upsilon, t, Interp::linear); }
    Matrix Gamma_at(double t) const { return detail::interp_path(grid, Gamma, t, Interp::linear); }
};

struct PsiPhiPath {
    std::vector<double> grid;
    std::vector<Vector> psi, phi;

    Vector psi_at(double t) const { return detail::interp_path(grid, psi, t, Interp::linear); }
    Vector phi_at(double t) const { return detail::interp_path(grid, phi, t, Interp::linear); }
};

struct MuPath {
    std::vector<double> grid;
    std::vector<double> mu;

    double mu_at(double t) const { return detail::interp_path(grid, mu, t, Interp::linear); }
};

// ---------------------------------------------------------------------------
// Constants of the small-time fixed point and the a priori estimate
// ---------------------------------------------------------------------------

struct BoundConstants {
    double M_T = 0;    // M e^{omega T}
    double L_a = 0;    // 1 + |a| + |b| + |c|
    double r = 0;      // fixed-point ball radius
    double tau = 0;    // fixed-point interval length
    double C_P = 0, C_Upsilon = 0, C_Gamma = 0, C_Xi = 0;
    double norm_V = 0;  // sup_t ||(Q, S, Z)(t)||, Euclidean over operator norms
    double norm_VT = 0; // ||(Q_T, S_T, Z_T)||
    double norm_B = 0;  // sup_t ||B R^{-1}(t) B*||
};

namespace detail {

inline double stacked_norm3(double x, double y, double z) {
    return std::sqrt(x * x + y * y + z * z);
}

/// Fixed-point radius for incoming terminal datum of norm X.
inline double radius_formula(double M_T, double X, double norm_V) {
    return 2.0 * M_T * M_T * (X + norm_V);
}

/// Fixed-point interval for incoming terminal datum of norm X. The +1 in the
/// denominator keeps tau <= 1, which the ball-invariance argument uses.
inline double tau_formula(double M_T, double X, double norm_V, double L_a, double norm_B) {
    return 1.0 / (1.0 + 12.0 * std::pow(M_T, 4) * (X + norm_V) * L_a * norm_B);
}

} // namespace detail

inline BoundConstants bound_constants(const ProblemData& pd, const DerivedOperators& der,
                                      const ParamVector& params) {
    const GalerkinSpace& H = *pd.state_space;
    BoundConstants bc;
    bc.M_T = pd.sg_A.bound_M * std::exp(pd.sg_A.bound_omega * pd.horizon_T);
    bc.L_a = 1.0 + std::abs(params.a) + std::abs(params.b) + std::abs(params.c);

    double nQT = op_norm(H, H, pd.Q_T.entries);
    double nST = op_norm(H, H, pd.S_T.entries);
    double nZT = op_norm(H, H, pd.Z_T.entries);
    bc.norm_VT = detail::stacked_norm3(nQT, nST, nZT);

    double nQ = 0, nS = 0, nZ = 0, nV = 0;
    for (size_t i = 0; i < pd.grid.size(); ++i) {
        double q = op_norm(H, H, pd.Q.values[i]);
        double s = op_norm(H, H, pd.S.values[i]);
        double z = op_norm(H, H, pd.Z.values[i]);
        nQ = std::max(nQ, q);
        nS = std::max(nS, s);
        nZ = std::max(nZ, z);
        nV = std::max(nV, detail::stacked_norm3(q, s, z));
    }
    bc.norm_V = nV;
    bc.norm_B = der.calB_sup_norm;

    const double T = pd.horizon_T, M2 = bc.M_T * bc.M_T;
    bc.r = detail::radius_formula(bc.M_T, bc.norm_VT, bc.norm_V);
    bc.tau = detail::tau_formula(bc.M_T, bc.norm_VT, bc.norm_V, bc.L_a, bc.norm_B);
    bc.C_P = M2 * (nQT + T * nQ);
    bc.C_Upsilon = M2 * (nST + T * nS) * std::exp(3.0 * T * M2 * bc.C_P * bc.norm_B);
    bc.C_Gamma = M2 * (nZT + T * nZ) * std::exp(2.0 * M2 * bc.norm_B * (bc.C_P + 2.0 * bc.C_Upsilon));
    bc.C_Xi = std::max({bc.C_P, bc.C_Upsilon, bc.C_Gamma});
    return bc;
}

inline BoundConstants bound_constants(const ProblemData& pd, const ParamVector& params) {
    return bound_constants(pd, derive_operators(pd), params);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct SolveInterval {
    double t_start = 0, t_end = 0;
    int picard_iterations = 0;
    double final_residual = 0;
    double r = 0, tau = 0;          // formula values for this interval's datum
    double contraction_ratio = 0;   // max measured increment ratio
    double max_radius = 0;          // max iterate norm (faithful mode only)
};

struct BoundViolation {
    std::string what;
    double value = 0, bound = 0, time = 0;
};

/// Applicability-gated check of the a priori estimates. The norm bound for
/// each component applies only where the proof's positivity chain holds:
/// P needs Q - a Upsilon calB Upsilon PSD, Upsilon additionally needs
/// S - c Upsilon calB Gamma PSD and b in [0, 2], Gamma additionally needs
/// Gamma itself PSD (its norm is identified with the sup of its quadratic
/// form). All raw maxima are reported regardless of the gates.
struct BoundReport {
    bool gate_P = false, gate_Upsilon = false, gate_Gamma = false;
    double max_norm_P = 0, max_norm_Upsilon = 0, max_norm_Gamma = 0;
    double min_eig_P = 0, min_eig_Upsilon = 0, min_eig_Gamma = 0;
    double min_eig_Qa = 0, min_eig_Sa = 0;
    BoundConstants constants;
    std::vector<BoundViolation> violations;
};

struct SolveReport {
    std::vector<SolveInterval> intervals;
    BoundConstants constants;
    BoundReport bounds;
    std::vector<BoundViolation> bound_violations;
    std::vector<std::string> warnings;
    double mild_residual = 0;  // residual in the (symmetrized) discrete mild map
    double asym_residual = 0;  // residual against the raw, unsymmetrized map
    int total_picard = 0;
};

struct SolverConfig {
    double picard_tol = 1e-10;
    int max_picard = 200;
    bool faithful = false; // use the proof's tau schedule instead of adaptive halving
    bool strict = false;   // bound violations become errors
    double eps_box = 1.0;  // admissibility box for (a, b, c); violations warn only
    bool zero_initial_guess = false; // Picard start: zero path instead of terminal datum
};

// ---------------------------------------------------------------------------
// The Picard solver for the Riccati triple
// ---------------------------------------------------------------------------

namespace detail {

struct XiWork {
    const std::vector<Matrix>* calB;
    const std::vector<Matrix>* Q;
    const std::vector<Matrix>* S;
    const std::vector<Matrix>* Z;
    Matrix E, Estar;
    double h = 0;
    ParamVector prm;
    const GalerkinSpace* space;
};

/// Quadratic part of the generalized system: given the current triple at one
/// grid point, the three integrand blocks
///   N_P = P calB P + a U calB U
///   N_U = U calB P + P calB U + b U calB U + c U calB G
///   N_G = G calB P + b G calB U + P calB G + b U calB G + U calB U
inline void quadratic_terms(const Matrix& p, const Matrix& u, const Matrix& g, const Matrix& calB,
                            const ParamVector& prm, Matrix& np, Matrix& nu, Matrix& ng) {
    Matrix pb = p * calB;
    Matrix ub = u * calB;
    Matrix gb = g * calB;
    np = pb * p + prm.a * (ub * u);
    nu = ub * p + pb * u + prm.b * (ub * u) + prm.c * (ub * g);
    ng = gb * p + prm.b * (gb * u) + pb * g + prm.b * (ub * g) + ub * u;
}

struct PicardOutcome {
    bool converged = false;
    int iterations = 0;
    double residual = 0;
    double contraction = 0;
    double radius = 0;
};

/// Picard iteration of the discretized mild map on grid cells [i0, i1],
/// with terminal datum (tp, tu, tg) at i1. The map is the composite
/// trapezoid discretization of the variation-of-constants integral,
/// evaluated by the backward one-step recurrence
///   F(i) = E* (F(i+1) + h/2 K(i+1)) E + h/2 K(i),   K = V - N(g).
/// Iterates are symmetrized each step.
inline PicardOutcome picard_xi(const XiWork& w, size_t i0, size_t i1, const Matrix& tp,
                               const Matrix& tu, const Matrix& tg, const SolverConfig& cfg,
                               bool track_radius, std::vector<Matrix>& outP,
                               std::vector<Matrix>& outU, std::vector<Matrix>& outG) {
    const size_t m = i1 - i0;
    const GalerkinSpace& sp = *w.space;
    const int n = sp.dim;

    std::vector<Matrix> p(m + 1), u(m + 1), g(m + 1);
    for (size_t i = 0; i <= m; ++i) {
        if (cfg.zero_initial_guess && i < m) {
            p[i] = Matrix::Zero(n, n);
            u[i] = Matrix::Zero(n, n);
            g[i] = Matrix::Zero(n, n);
        } else {
            p[i] = tp;
            u[i] = tu;
            g[i] = tg;
        }
    }

    std::vector<Matrix> kp(m + 1), ku(m + 1), kg(m + 1);
    std::vector<Matrix> np_(m + 1), nu_(m + 1), ng_(m + 1);

    PicardOutcome out;
    double prev_err = std::numeric_limits<double>::infinity();
    double first_err = 0;
    int growths = 0;

    for (int it = 1; it <= cfg.max_picard; ++it) {
        for (size_t i = 0; i <= m; ++i) {
            size_t gi = i0 + i;
            Matrix np, nu, ng;
            quadratic_terms(p[i], u[i], g[i], (*w.calB)[gi], w.prm, np, nu, ng);
            kp[i] = (*w.Q)[gi] - np;
            ku[i] = (*w.S)[gi] - nu;
            kg[i] = (*w.Z)[gi] - ng;
        }
        double err = 0, scale = 1.0;
        np_[m] = tp;
        nu_[m] = tu;
        ng_[m] = tg;
        for (size_t ri = m; ri-- > 0;) {
            const double hh = 0.5 * w.h;
            Matrix newp = w.Estar * (np_[ri + 1] + hh * kp[ri + 1]) * w.E + hh * kp[ri];
            Matrix newu = w.Estar * (nu_[ri + 1] + hh * ku[ri + 1]) * w.E + hh * ku[ri];
            Matrix newg = w.Estar * (ng_[ri + 1] + hh * kg[ri + 1]) * w.E + hh * kg[ri];
            np_[ri] = sym_part(sp, newp);
            nu_[ri] = sym_part(sp, newu);
            ng_[ri] = sym_part(sp, newg);
        }
        for (size_t i = 0; i <= m; ++i) {
            err = std::max({err, (np_[i] - p[i]).norm(), (nu_[i] - u[i]).norm(),
                            (ng_[i] - g[i]).norm()});
            scale = std::max({scale, np_[i].norm(), nu_[i].norm(), ng_[i].norm()});
        }
        err /= scale;
        p.swap(np_);
        u.swap(nu_);
        g.swap(ng_);

        if (track_radius) {
            for (size_t i = 0; i <= m; ++i) {
                Matrix stacked(3 * n, n);
                stacked << p[i], u[i], g[i];
                Matrix wtf = stacked;
                if (!sp.orthonormal) {
                    wtf = wtf * sp.chol_LinvT;
                    for (int blk = 0; blk < 3; ++blk)
                        wtf.middleRows(blk * n, n) = sp.chol_L.transpose() * wtf.middleRows(blk * n, n);
                }
                Eigen::JacobiSVD<Matrix> svd(wtf);
                out.radius = std::max(out.radius, svd.singularValues()(0));
            }
        }

        out.iterations = it;
        out.residual = err;
        if (it == 1) first_err = err;
        if (std::isfinite(prev_err) && prev_err > 1e3 * std::numeric_limits<double>::epsilon()) {
            double ratio = err / prev_err;
            if (it >= 2) out.contraction = std::max(out.contraction, ratio);
            growths = (ratio > 1.0) ? growths + 1 : 0;
        }
        if (err <= cfg.picard_tol) {
            out.converged = true;
            break;
        }
        if (!std::isfinite(err) || err > 1e8 * std::max(1.0, first_err) || growths >= 6) break;
        if (it >= 12 && out.contraction > 0.97 && err > 1e2 * cfg.picard_tol) break;
        prev_err = err;
    }

    if (out.converged) {
        for (size_t i = 0; i <= m; ++i) {
            outP[i0 + i] = p[i];
            outU[i0 + i] = u[i];
            outG[i0 + i] = g[i];
        }
        // grid endpoint carries the datum bitwise
        outP[i1] = tp;
        outU[i1] = tu;
        outG[i1] = tg;
    }
    return out;
}

} // namespace detail

struct XiSolution {
    XiPath path;
    SolveReport report;
};

inline BoundReport check_apriori(const ProblemData& pd, const ParamVector& params,
                                 const XiPath& xi);

/// Solve the generalized coefficient triple (P, Upsilon, Gamma) in mild form,
/// backward from T, concatenating fixed-point intervals. Default mode starts
/// each stretch on the whole remaining horizon and halves on divergence;
/// faithful mode uses the small-time interval lengths of the existence proof
/// (first interval sized by the terminal-datum norm, later ones by C_Xi).
inline XiSolution solve_xi(const ProblemData& pd, const ParamVector& params,
                           const SolverConfig& cfg = {}) {
    ValidationReport vrep = validate(pd);
    if (!vrep.ok()) throw ValidationError("solve_xi: invalid problem\n" + vrep.summary());

    DerivedOperators der = derive_operators(pd);
    BoundConstants bc = bound_constants(pd, der, params);
    const GalerkinSpace& H = *pd.state_space;
    const size_t M = pd.grid.size() - 1;
    const double h = pd.grid[1] - pd.grid[0];

    XiSolution sol;
    sol.report.constants = bc;
    if (!in_eps_box(params, cfg.eps_box)) {
        std::ostringstream os;
        os << "params (a,b,c) = (" << params.a << "," << params.b << "," << params.c
           << ") outside the eps-admissibility box eps = " << cfg.eps_box
           << "; solving anyway";
        sol.report.warnings.push_back(os.str());
    }

    detail::XiWork w;
    w.calB = &der.calB.values;
    w.Q = &pd.Q.values;
    w.S = &pd.S.values;
    w.Z = &pd.Z.values;
    w.E = step_matrix(pd.sg_A, h);
    w.Estar = adjoint_step_matrix(pd.sg_A, h);
    w.h = h;
    w.prm = params;
    w.space = pd.state_space.get();

    XiPath& xi = sol.path;
    xi.grid = pd.grid;
    xi.space = pd.state_space;
    xi.P.assign(M + 1, Matrix());
    xi.Upsilon.assign(M + 1, Matrix());
    xi.Gamma.assign(M + 1, Matrix());

    Matrix tp = pd.Q_T.entries, tu = pd.S_T.entries, tg = pd.Z_T.entries;
    size_t cur = M;
    bool first = true;
    while (cur > 0) {
        double datum_norm =
            first ? bc.norm_VT
                  : std::max(bc.C_Xi, detail::stacked_norm3(op_norm(H, H, tp), op_norm(H, H, tu),
                                                            op_norm(H, H, tg)));
        double r_i = detail::radius_formula(bc.M_T, datum_norm, bc.norm_V);
        double tau_i = detail::tau_formula(bc.M_T, datum_norm, bc.norm_V, bc.L_a, bc.norm_B);

        size_t k;
        if (cfg.faithful) {
            k = static_cast<size_t>(std::floor(tau_i / h + 1e-12));
            if (k < 1) {
                std::ostringstream os;
                os << "solve_xi: faithful interval tau = " << tau_i
                   << " is shorter than the grid step h = " << h << "; refine the grid";
                throw SolveError(os.str());
            }
            k = std::min(k, cur);
        } else {
            k = cur;
        }

        for (;;) {
            detail::PicardOutcome o = detail::picard_xi(w, cur - k, cur, tp, tu, tg, cfg,
                                                        cfg.faithful, xi.P, xi.Upsilon, xi.Gamma);
            sol.report.total_picard += o.iterations;
            if (o.converged) {
                SolveInterval iv;
                iv.t_start = pd.grid[cur - k];
                iv.t_end = pd.grid[cur];
                iv.picard_iterations = o.iterations;
                iv.final_residual = o.residual;
                iv.r = r_i;
                iv.tau = tau_i;
                iv.contraction_ratio = o.contraction;
                iv.max_radius = o.radius;
                sol.report.intervals.push_back(iv);
                cur -= k;
                tp = xi.P[cur];
                tu = xi.Upsilon[cur];
                tg = xi.Gamma[cur];
                first = false;
                break;
            }
            if (cfg.faithful || k == 1) {
                std::ostringstream os;
                os << "solve_xi: Picard iteration failed to contract on [" << pd.grid[cur - k]
                   << ", " << pd.grid[cur] << "] (residual " << o.residual << " after "
                   << o.iterations << " iterations)";
                throw SolveError(os.str());
            }
            k = std::max<size_t>(1, k / 2);
        }
    }
    std::reverse(sol.report.intervals.begin(), sol.report.intervals.end());

    // residual of the solved path in the discretized mild equation over the
    // whole horizon, with and without the symmetrization step
    {
        const double hh = 0.5 * h;
        Matrix fp = xi.P[M], fu = xi.Upsilon[M], fg = xi.Gamma[M];
        std::vector<Matrix> kp(M + 1), ku(M + 1), kg(M + 1);
        for (size_t i = 0; i <= M; ++i) {
            Matrix np, nu, ng;
            detail::quadratic_terms(xi.P[i], xi.Upsilon[i], xi.Gamma[i], der.calB.values[i],
                                    params, np, nu, ng);
            kp[i] = pd.Q.values[i] - np;
            ku[i] = pd.S.values[i] - nu;
            kg[i] = pd.Z.values[i] - ng;
        }
        Matrix rp = fp, ru = fu, rg = fg; // raw (no symmetrization)
        double res_sym = 0, res_raw = 0, scale = 1.0;
        for (size_t ri = M; ri-- > 0;) {
            Matrix np = w.Estar * (fp + hh * kp[ri + 1]) * w.E + hh * kp[ri];
            Matrix nu = w.Estar * (fu + hh * ku[ri + 1]) * w.E + hh * ku[ri];
            Matrix ng = w.Estar * (fg + hh * kg[ri + 1]) * w.E + hh * kg[ri];
            fp = sym_part(H, np);
            fu = sym_part(H, nu);
            fg = sym_part(H, ng);
            rp = w.Estar * (rp + hh * kp[ri + 1]) * w.E + hh * kp[ri];
            ru = w.Estar * (ru + hh * ku[ri + 1]) * w.E + hh * ku[ri];
            rg = w.Estar * (rg + hh * kg[ri + 1]) * w.E + hh * kg[ri];
            res_sym = std::max({res_sym, (fp - xi.P[ri]).norm(), (fu - xi.Upsilon[ri]).norm(),
                                (fg - xi.Gamma[ri]).norm()});
            res_raw = std::max({res_raw, (rp - xi.P[ri]).norm(), (ru - xi.Upsilon[ri]).norm(),
                                (rg - xi.Gamma[ri]).norm()});
            scale = std::max({scale, xi.P[ri].norm(), xi.Upsilon[ri].norm(), xi.Gamma[ri].norm()});
        }
        sol.report.mild_residual = res_sym / scale;
        sol.report.asym_residual = res_raw / scale;
    }

    sol.report.bounds = check_apriori(pd, params, xi);
    sol.report.bound_violations = sol.report.bounds.violations;
    if (cfg.strict && !sol.report.bound_violations.empty()) {
        std::ostringstream os;
        os << "solve_xi: " << sol.report.bound_violations.size()
           << " a priori bound violation(s) under --strict; first: "
           << sol.report.bound_violations.front().what;
        throw SolveError(os.str());
    }
    return sol;
}

// ---------------------------------------------------------------------------
// The linear pair (psi, phi)
// ---------------------------------------------------------------------------

/// Solve the coupled linear backward system for (psi, phi) by the same
/// mild-integral Picard scheme on the grid of the solved triple.
inline PsiPhiPath solve_psi_phi(const ProblemData& pd, const ParamVector& params,
                                const XiPath& xi, const SolverConfig& cfg = {}) {
    if (xi.grid.size() != pd.grid.size() ||
        std::abs(xi.grid.back() - pd.grid.back()) > 1e-12)
        throw ValidationError("solve_psi_phi: grid mismatch between xi and problem data");

    DerivedOperators der = derive_operators(pd);
    const size_t M = pd.grid.size() - 1;
    const double h = pd.grid[1] - pd.grid[0];
    Matrix E = step_matrix(pd.sg_A, h);
    Matrix Estar = adjoint_step_matrix(pd.sg_A, h);

    PsiPhiPath pp;
    pp.grid = pd.grid;
    pp.psi.assign(M + 1, pd.eta_T);
    pp.phi.assign(M + 1, pd.zeta_T);

    auto solve_interval = [&](size_t i0, size_t i1, const Vector& tpsi, const Vector& tphi,
                              std::vector<Vector>& psi, std::vector<Vector>& phi) -> bool {
        size_t m = i1 - i0;
        std::vector<Vector> ps(m + 1, tpsi), ph(m + 1, tphi);
        std::vector<Vector> kps(m + 1), kph(m + 1), nps(m + 1), nph(m + 1);
        double prev = std::numeric_limits<double>::infinity();
        int growths = 0;
        for (int it = 1; it <= cfg.max_picard; ++it) {
            for (size_t i = 0; i <= m; ++i) {
                size_t gi = i0 + i;
                const Matrix& Bm = der.calB.values[gi];
                const Matrix& P = xi.P[gi];
                const Matrix& U = xi.Upsilon[gi];
                const Matrix& G = xi.Gamma[gi];
                kps[i] = pd.eta.values[gi] - params.c * (U * (Bm * ph[i])) -
                         (P + U) * (Bm * ps[i]);
                kph[i] = pd.zeta.values[gi] - (U + G) * (Bm * ps[i]) -
                         (P + params.b * U) * (Bm * ph[i]);
            }
            nps[m] = tpsi;
            nph[m] = tphi;
            const double hh = 0.5 * h;
            for (size_t ri = m; ri-- > 0;) {
                nps[ri] = Estar * (nps[ri + 1] + hh * kps[ri + 1]) + hh * kps[ri];
                nph[ri] = Estar * (nph[ri + 1] + hh * kph[ri + 1]) + hh * kph[ri];
            }
            double err = 0, scale = 1.0;
            for (size_t i = 0; i <= m; ++i) {
                err = std::max({err, (nps[i] - ps[i]).norm(), (nph[i] - ph[i]).norm()});
                scale = std::max({scale, nps[i].norm(), nph[i].norm()});
            }
            err /= scale;
            ps.swap(nps);
            ph.swap(nph);
            if (err <= cfg.picard_tol) {
                for (size_t i = 0; i <= m; ++i) {
                    psi[i0 + i] = ps[i];
                    phi[i0 + i] = ph[i];
                }
                psi[i1] = tpsi;
                phi[i1] = tphi;
                return true;
            }
            if (!std::isfinite(err)) return false;
            growths = (err > prev) ? growths + 1 : 0;
            if (growths >= 6) return false;
            prev = err;
        }
        return false;
    };

    Vector tpsi = pd.eta_T, tphi = pd.zeta_T;
    size_t cur = M;
    while (cur > 0) {
        size_t k = cur;
        for (;;) {
            if (solve_interval(cur - k, cur, tpsi, tphi, pp.psi, pp.phi)) {
                cur -= k;
                tpsi = pp.psi[cur];
                tphi = pp.phi[cur];
                break;
            }
            if (k == 1)
                throw SolveError("solve_psi_phi: Picard iteration failed on a single cell");
            k = std::max<size_t>(1, k / 2);
        }
    }
    return pp;
}

// ---------------------------------------------------------------------------
// mu by quadrature
// ---------------------------------------------------------------------------

/// mu(t) = lambda_T + int_t^T [ lambda(s) + tr(calA (P + c Gamma))
///                              - 1/2 <calB psi, psi + 2 phi> ] ds,
/// composite trapezoid on the grid; mu(T) = lambda_T exactly.
inline MuPath solve_mu(const ProblemData& pd, const ParamVector& params, const XiPath& xi,
                       const PsiPhiPath& pp) {
    if (xi.grid.size() != pd.grid.size() || pp.grid.size() != pd.grid.size())
        throw ValidationError("solve_mu: grid mismatch");
    DerivedOperators der = derive_operators(pd);
    const GalerkinSpace& H = *pd.state_space;
    const size_t M = pd.grid.size() - 1;
    const double h = pd.grid[1] - pd.grid[0];

    std::vector<double> f(M + 1);
    for (size_t i = 0; i <= M; ++i) {
        Matrix pc = xi.P[i] + params.c * xi.Gamma[i];
        double tr = (der.calA.entries * pc).trace();
        Vector bpsi = der.calB.values[i] * pp.psi[i];
        double quad = inner(H, bpsi, pp.psi[i] + 2.0 * pp.phi[i]);
        f[i] = pd.lambda_run.values[i] + tr - 0.5 * quad;
    }
    MuPath mu;
    mu.grid = pd.grid;
    mu.mu.assign(M + 1, 0.0);
    mu.mu[M] = pd.lambda_T;
    for (size_t ri = M; ri-- > 0;) mu.mu[ri] = mu.mu[ri + 1] + 0.5 * h * (f[ri] + f[ri + 1]);
    return mu;
}

// ---------------------------------------------------------------------------
// A priori bound check
// ---------------------------------------------------------------------------

inline BoundReport check_apriori(const ProblemData& pd, const ParamVector& params,
                                 const XiPath& xi) {
    DerivedOperators der = derive_operators(pd);
    BoundReport rep;
    rep.constants = bound_constants(pd, der, params);
    const GalerkinSpace& H = *pd.state_space;
    const size_t M = xi.grid.size() - 1;

    double minQa = std::numeric_limits<double>::infinity();
    double minSa = std::numeric_limits<double>::infinity();
    double minP = minQa, minU = minQa, minG = minQa;
    double argmaxP = 0, argmaxU = 0, argmaxG = 0;
    for (size_t i = 0; i <= M; ++i) {
        const Matrix& Bm = der.calB.values[i];
        Matrix qa = pd.Q.values[i] - params.a * sym_part(H, xi.Upsilon[i] * Bm * xi.Upsilon[i]);
        Matrix sa = pd.S.values[i] - params.c * sym_part(H, xi.Upsilon[i] * Bm * xi.Gamma[i]);
        minQa = std::min(minQa, min_eig_selfadjoint(H, qa));
        minSa = std::min(minSa, min_eig_selfadjoint(H, sa));
        minP = std::min(minP, min_eig_selfadjoint(H, xi.P[i]));
        minU = std::min(minU, min_eig_selfadjoint(H, xi.Upsilon[i]));
        minG = std::min(minG, min_eig_selfadjoint(H, xi.Gamma[i]));
        double np = op_norm(H, H, xi.P[i]);
        double nu = op_norm(H, H, xi.Upsilon[i]);
        double ng = op_norm(H, H, xi.Gamma[i]);
        if (np > rep.max_norm_P) { rep.max_norm_P = np; argmaxP = xi.grid[i]; }
        if (nu > rep.max_norm_Upsilon) { rep.max_norm_Upsilon = nu; argmaxU = xi.grid[i]; }
        if (ng > rep.max_norm_Gamma) { rep.max_norm_Gamma = ng; argmaxG = xi.grid[i]; }
    }
    rep.min_eig_P = minP;
    rep.min_eig_Upsilon = minU;
    rep.min_eig_Gamma = minG;
    rep.min_eig_Qa = minQa;
    rep.min_eig_Sa = minSa;

    const double psd_tol = 1e-8;
    const double coerB = der.calB_coercivity;
    rep.gate_P = (params.a >= -1e-15) && (minQa >= -psd_tol) && (coerB >= -1e-10);
    rep.gate_Upsilon = rep.gate_P && (minSa >= -psd_tol) && (params.b >= 0.0) && (params.b <= 2.0);
    rep.gate_Gamma = rep.gate_Upsilon && (minG >= -psd_tol);

    auto check_norm = [&](bool gate, double value, double bound, double at, const char* what) {
        if (gate && value > bound * (1.0 + 1e-9) + 1e-12)
            rep.violations.push_back({what, value, bound, at});
    };
    check_norm(rep.gate_P, rep.max_norm_P, rep.constants.C_P, argmaxP, "norm(P) > C_P");
    check_norm(rep.gate_Upsilon, rep.max_norm_Upsilon, rep.constants.C_Upsilon, argmaxU,
               "norm(Upsilon) > C_Upsilon");
    check_norm(rep.gate_Gamma, rep.max_norm_Gamma, rep.constants.C_Gamma, argmaxG,
               "norm(Gamma) > C_Gamma");
    if (rep.gate_P && minP < -psd_tol)
        rep.violations.push_back({"min-eig(P) < 0", minP, 0.0, 0.0});
    if (rep.gate_Upsilon && minU < -psd_tol)
        rep.violations.push_back({"min-eig(Upsilon) < 0", minU, 0.0, 0.0});
    return rep;
}

// ---------------------------------------------------------------------------
// Full coefficient solve
// ---------------------------------------------------------------------------

/// Time-gridded (P, Upsilon, Gamma, psi, phi, mu) with solver metadata.
struct CoefficientSolution {
    XiPath xi;
    PsiPhiPath psiphi;
    MuPath mu;
    SolveReport report;
    ParamVector params;
};

inline CoefficientSolution solve_coefficients(const ProblemData& pd, const ParamVector& params,
                                              const SolverConfig& cfg = {}) {
    CoefficientSolution out;
    out.params = params;
    XiSolution xs = solve_xi(pd, params, cfg);
    out.xi = std::move(xs.path);
    out.report = std::move(xs.report);
    out.psiphi = solve_psi_phi(pd, params, out.xi, cfg);
    out.mu = solve_mu(pd, params, out.xi, out.psiphi);
    return out;
}

} // namespace lqmfg
