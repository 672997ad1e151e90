#pragma once

#include "lqmfg/riccati.hpp"

#include <cstdlib>
#include <future>
#include <thread>

namespace lqmfg {

/// The population state enters only through its mean.
struct MeanState {
    Vector ybar;
};

enum class VFKind { master, nash };

/// Quadratic value function assembled from solved coefficient paths:
///   1/2 <P(t)x, x> + <Upsilon(t)y, x> + 1/2 <Gamma(t)y, y>
///   + <psi(t), x> + <phi(t), y> + mu(t),
/// where y is the population mean (Master) or the opponents' average (Nash).
struct ValueFunction {
    VFKind kind = VFKind::master;
    int N = 0; // players, Nash only
    XiPath xi;
    PsiPhiPath psiphi;
    MuPath mu;
    SpacePtr space;
};

inline ValueFunction make_master_value(CoefficientSolution sol) {
    ValueFunction vf;
    vf.kind = VFKind::master;
    vf.space = sol.xi.space;
    vf.xi = std::move(sol.xi);
    vf.psiphi = std::move(sol.psiphi);
    vf.mu = std::move(sol.mu);
    return vf;
}

inline ValueFunction make_nash_value(int N, CoefficientSolution sol) {
    if (N < 2) throw ValidationError("make_nash_value: need N >= 2");
    ValueFunction vf;
    vf.kind = VFKind::nash;
    vf.N = N;
    vf.space = sol.xi.space;
    vf.xi = std::move(sol.xi);
    vf.psiphi = std::move(sol.psiphi);
    vf.mu = std::move(sol.mu);
    return vf;
}

inline double eval_value(const ValueFunction& vf, double t, const Vector& x,
                         const MeanState& m) {
    const GalerkinSpace& H = *vf.space;
    if (x.size() != H.dim || m.ybar.size() != H.dim)
        throw std::invalid_argument("eval_value: dimension mismatch");
    Matrix P = vf.xi.P_at(t), U = vf.xi.Upsilon_at(t), G = vf.xi.Gamma_at(t);
    Vector psi = vf.psiphi.psi_at(t), phi = vf.psiphi.phi_at(t);
    double mu = vf.mu.mu_at(t);
    return 0.5 * inner(H, P * x, x) + inner(H, U * m.ybar, x) +
           0.5 * inner(H, G * m.ybar, m.ybar) + inner(H, psi, x) + inner(H, phi, m.ybar) + mu;
}

/// v^{N,i}(t, x) = v^N(t, x_i, mean of the others).
inline double eval_nash_value(const ValueFunction& vf, double t, int i,
                              const std::vector<Vector>& xs) {
    if (vf.kind != VFKind::nash) throw std::invalid_argument("eval_nash_value: not a Nash value");
    if (static_cast<int>(xs.size()) != vf.N)
        throw std::invalid_argument("eval_nash_value: expected " + std::to_string(vf.N) + " states");
    if (i < 0 || i >= vf.N) throw std::invalid_argument("eval_nash_value: bad player index");
    Vector xbar = Vector::Zero(vf.space->dim);
    for (int j = 0; j < vf.N; ++j)
        if (j != i) xbar += xs[static_cast<size_t>(j)];
    xbar /= static_cast<double>(vf.N - 1);
    return eval_value(vf, t, xs[static_cast<size_t>(i)], {xbar});
}

/// H(t, x, p) = -<Ax, p> + 1/2 <B R^{-1}(t) B* p, p>. Needs the generator
/// as a matrix.
inline double hamiltonian(const ProblemData& pd, double t, const Vector& x, const Vector& p) {
    if (pd.sg_A.kind != SemigroupKind::matrix_exponential)
        throw ValidationError("hamiltonian: generator unavailable for this semigroup kind");
    const GalerkinSpace& H = *pd.state_space;
    DerivedOperators der = derive_operators(pd);
    Vector bp = der.calB.at_time(t) * p;
    return -inner(H, pd.sg_A.generator * x, p) + 0.5 * inner(H, bp, p);
}

/// Minimizer of the control Hamiltonian:
/// alpha* = -R(t)^{-1} B* (P(t) x + Upsilon(t) ybar + psi(t)).
inline Vector feedback_control(const ValueFunction& vf, const ProblemData& pd, double t,
                               const Vector& x, const MeanState& m) {
    const GalerkinSpace& H = *pd.state_space;
    if (x.size() != H.dim || m.ybar.size() != H.dim)
        throw std::invalid_argument("feedback_control: dimension mismatch");
    Vector grad = vf.xi.P_at(t) * x + vf.xi.Upsilon_at(t) * m.ybar + vf.psiphi.psi_at(t);
    Matrix b_star = adjoint_of(*pd.control_space, H, pd.B.entries);
    Matrix R = pd.R.at_time(t);
    return -Eigen::PartialPivLU<Matrix>(R).solve(b_star * grad);
}

// ---------------------------------------------------------------------------
// Nash -> Master convergence sweep
// ---------------------------------------------------------------------------

struct SweepRow {
    int N = 0;
    ParamVector params;
    bool ok = false;
    std::string error;
    double d_N = 0;           // sup_t ||Xi^{a_N}(t) - Xi(t)||, Euclidean over operator norms
    double gap_P = 0, gap_Upsilon = 0, gap_Gamma = 0;
    double gap_psi = 0, gap_phi = 0, gap_mu = 0;
    SolveReport report;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    double slope = std::numeric_limits<double>::quiet_NaN(); // fitted log d(N) vs log N
    bool slope_valid = false;
    SolveReport master_report;
};

namespace detail {

inline int sweep_threads() {
    if (const char* env = std::getenv("LQMFG_THREADS")) {
        int k = std::atoi(env);
        if (k >= 1) return k;
    }
    unsigned hc = std::thread::hardware_concurrency();
    return hc ? static_cast<int>(hc) : 1;
}

} // namespace detail

/// Solve the coefficient system for the Master parameters and for each
/// nash_params(N), on the common grid, and measure the gaps. Individual
/// solve failures are recorded and the sweep continues.
inline SweepReport convergence_sweep(const ProblemData& pd, const std::vector<int>& Ns,
                                     const SolverConfig& cfg = {}) {
    const GalerkinSpace& H = *pd.state_space;
    CoefficientSolution master = solve_coefficients(pd, master_params(), cfg);

    auto solve_one = [&](int N) {
        SweepRow row;
        row.N = N;
        row.params = nash_params(N);
        try {
            CoefficientSolution nash = solve_coefficients(pd, row.params, cfg);
            row.report = nash.report;
            for (size_t i = 0; i < pd.grid.size(); ++i) {
                double gp = op_norm(H, H, nash.xi.P[i] - master.xi.P[i]);
                double gu = op_norm(H, H, nash.xi.Upsilon[i] - master.xi.Upsilon[i]);
                double gg = op_norm(H, H, nash.xi.Gamma[i] - master.xi.Gamma[i]);
                row.gap_P = std::max(row.gap_P, gp);
                row.gap_Upsilon = std::max(row.gap_Upsilon, gu);
                row.gap_Gamma = std::max(row.gap_Gamma, gg);
                row.d_N = std::max(row.d_N, detail::stacked_norm3(gp, gu, gg));
                row.gap_psi = std::max(row.gap_psi,
                                       norm(H, nash.psiphi.psi[i] - master.psiphi.psi[i]));
                row.gap_phi = std::max(row.gap_phi,
                                       norm(H, nash.psiphi.phi[i] - master.psiphi.phi[i]));
                row.gap_mu = std::max(row.gap_mu, std::abs(nash.mu.mu[i] - master.mu.mu[i]));
            }
            row.ok = true;
        } catch (const std::exception& e) {
            row.ok = false;
            row.error = e.what();
        }
        return row;
    };

    SweepReport rep;
    rep.master_report = master.report;
    rep.rows.resize(Ns.size());
    const int threads = std::max(1, detail::sweep_threads());
    for (size_t base = 0; base < Ns.size(); base += static_cast<size_t>(threads)) {
        size_t end = std::min(Ns.size(), base + static_cast<size_t>(threads));
        std::vector<std::future<SweepRow>> futs;
        for (size_t i = base; i < end; ++i)
            futs.push_back(std::async(std::launch::async, solve_one, Ns[i]));
        for (size_t i = base; i < end; ++i) rep.rows[i] = futs[i - base].get();
    }

    // least-squares slope of log d(N) against log N
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int m = 0;
    for (const auto& row : rep.rows) {
        if (!row.ok || row.d_N <= 0) continue;
        double lx = std::log(static_cast<double>(row.N)), ly = std::log(row.d_N);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++m;
    }
    if (m >= 2) {
        rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
        rep.slope_valid = std::isfinite(rep.slope);
    }
    return rep;
}

} // namespace lqmfg
