#pragma once

#include "lqmfg/hilbert.hpp"

#include <cmath>
#include <optional>
#include <sstream>
#include <vector>

namespace lqmfg {

/// A full LQ mean-field instance: dynamics (A, B, sigma), running and
/// terminal cost data, and the time grid shared by all paths and by the
/// solver quadrature.
struct ProblemData {
    SpacePtr state_space;   // H
    SpacePtr control_space; // V
    SpacePtr noise_space;   // K

    Semigroup sg_A;      // e^{tA}, e^{tA*}
    OperatorMatrix B;    // V -> H
    OperatorMatrix sigma; // K -> H

    TimeOperatorPath R;      // on V, self-adjoint coercive
    TimeOperatorPath Q, S, Z; // on H
    TimeVectorPath eta, zeta;
    TimeScalarPath lambda_run;

    OperatorMatrix Q_T, S_T, Z_T;
    Vector eta_T, zeta_T;
    double lambda_T = 0.0;

    double horizon_T = 0.0;
    std::vector<double> grid; // uniform, grid.front() = 0, grid.back() = T
};

/// 1/2 sigma sigma* and B R(t)^{-1} B*, with summary statistics.
struct DerivedOperators {
    OperatorMatrix calA;  // on H
    TimeOperatorPath calB; // on H
    double calB_sup_norm = 0.0;
    double calB_coercivity = 0.0; // min over grid of min-eig
};

/// The (a, b, c) triple selecting the Master system (0, 1, 0) or the
/// N-player Nash system (2/(N-1), (N-2)/(N-1), 1/(N-1)).
struct ParamVector {
    double a = 0.0, b = 1.0, c = 0.0;
};

inline ParamVector master_params() { return {0.0, 1.0, 0.0}; }

inline ParamVector nash_params(int N) {
    if (N < 2) throw ValidationError("nash_params: need N >= 2");
    double d = static_cast<double>(N - 1);
    return {2.0 / d, (N - 2) / d, 1.0 / d};
}

/// Solver admissibility box from the global-existence theorem:
/// a in [0, eps], b in [1-eps, 1+eps], c in [-eps, eps].
inline bool in_eps_box(const ParamVector& p, double eps) {
    return p.a >= -1e-15 && p.a <= eps && std::abs(p.b - 1.0) <= eps && std::abs(p.c) <= eps;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class Severity { fatal, warning, info };

struct ValidationItem {
    Severity severity;
    std::string code;
    std::string message;
    double value = 0.0;
};

struct ValidationReport {
    std::vector<ValidationItem> items;
    double lambda_R = 0.0;        // coercivity constant of R
    double delta_max = 0.0;       // largest delta with Q, S >= delta I
    double calB_coercivity = 0.0; // min-eig of B R^{-1} B* over the grid

    bool ok() const {
        for (const auto& it : items)
            if (it.severity == Severity::fatal) return false;
        return true;
    }

    std::string summary() const {
        std::ostringstream os;
        for (const auto& it : items) {
            os << (it.severity == Severity::fatal ? "[fatal] "
                   : it.severity == Severity::warning ? "[warn] " : "[info] ")
               << it.code << ": " << it.message << "\n";
        }
        return os.str();
    }
};

namespace detail {

inline void require_grid(const ProblemData& pd, std::vector<ValidationItem>& items) {
    if (pd.grid.size() < 2 || std::abs(pd.grid.front()) > 1e-14 ||
        std::abs(pd.grid.back() - pd.horizon_T) > 1e-12 * std::max(1.0, pd.horizon_T)) {
        items.push_back({Severity::fatal, "grid", "time grid does not cover [0, T]", 0});
        return;
    }
    double h = pd.grid[1] - pd.grid[0];
    for (size_t i = 0; i + 1 < pd.grid.size(); ++i) {
        if (std::abs((pd.grid[i + 1] - pd.grid[i]) - h) > 1e-10 * std::max(1.0, h)) {
            items.push_back({Severity::fatal, "grid", "time grid is not uniform", 0});
            return;
        }
    }
}

} // namespace detail

inline DerivedOperators derive_operators(const ProblemData& pd);

/// Check the standing assumptions: R coercive, Q/S/Q_T/S_T PSD, Z/Z_T
/// self-adjoint, semigroup growth bound as declared. With
/// check_nash_coercivity also reports the largest delta with
/// Q(t), S(t) >= delta I (the Nash-uniqueness hypothesis).
inline ValidationReport validate(const ProblemData& pd, bool check_nash_coercivity = false,
                                 double user_delta = 0.0) {
    ValidationReport rep;
    auto& items = rep.items;
    const GalerkinSpace& H = *pd.state_space;
    const GalerkinSpace& V = *pd.control_space;

    detail::require_grid(pd, items);

    if (pd.B.entries.rows() != H.dim || pd.B.entries.cols() != V.dim)
        items.push_back({Severity::fatal, "dims", "B is not V -> H", 0});
    if (pd.sigma.entries.rows() != H.dim || pd.sigma.entries.cols() != pd.noise_space->dim)
        items.push_back({Severity::fatal, "dims", "sigma is not K -> H", 0});

    const double psd_tol = 1e-10;

    // R(t): self-adjoint, coercive
    double lamR = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < pd.R.values.size(); ++i) {
        const Matrix& r = pd.R.values[i];
        if (sym_defect(V, r) > 1e-8)
            items.push_back({Severity::fatal, "R-symmetry", "R(t) not self-adjoint at grid point " + std::to_string(i), 0});
        lamR = std::min(lamR, min_eig_selfadjoint(V, r));
    }
    rep.lambda_R = lamR;
    if (!(lamR > 1e-12))
        items.push_back({Severity::fatal, "R-coercive", "R(t) is not coercive (min eigenvalue " + std::to_string(lamR) + ")", lamR});

    auto check_psd_path = [&](const TimeOperatorPath& p, const std::string& name, bool psd) {
        double mn = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < p.values.size(); ++i) {
            if (sym_defect(H, p.values[i]) > 1e-8)
                items.push_back({Severity::fatal, name + "-symmetry", name + "(t) not self-adjoint", 0});
            mn = std::min(mn, min_eig_selfadjoint(H, p.values[i]));
        }
        if (psd && mn < -psd_tol)
            items.push_back({Severity::fatal, name + "-psd", name + "(t) has negative eigenvalue " + std::to_string(mn), mn});
        return mn;
    };
    double minQ = check_psd_path(pd.Q, "Q", true);
    double minS = check_psd_path(pd.S, "S", true);
    check_psd_path(pd.Z, "Z", false);

    auto check_psd_term = [&](const OperatorMatrix& m, const std::string& name, bool psd) {
        if (sym_defect(H, m.entries) > 1e-8)
            items.push_back({Severity::fatal, name + "-symmetry", name + " not self-adjoint", 0});
        double mn = min_eig_selfadjoint(H, m.entries);
        if (psd && mn < -psd_tol)
            items.push_back({Severity::fatal, name + "-psd", name + " has negative eigenvalue " + std::to_string(mn), mn});
        return mn;
    };
    check_psd_term(pd.Q_T, "Q_T", true);
    check_psd_term(pd.S_T, "S_T", true);
    check_psd_term(pd.Z_T, "Z_T", false);

    // semigroup growth bound: the solver refuses to start on failure
    SemigroupCheckReport sg = check_semigroup(pd.sg_A, pd.horizon_T);
    if (!sg.growth_ok)
        items.push_back({Severity::fatal, "semigroup-growth",
                         "declared (M, omega) violated by sampled growth, excess " +
                             std::to_string(sg.max_growth_excess), sg.max_growth_excess});
    if (!sg.identity_ok)
        items.push_back({Severity::fatal, "semigroup-identity", "e^{0 A} != identity", sg.max_identity_err});
    if (!sg.law_ok)
        items.push_back({Severity::warning, "semigroup-law",
                         "semigroup property violated beyond tolerance, err " +
                             std::to_string(sg.max_law_err), sg.max_law_err});

    if (rep.ok()) {
        DerivedOperators der = derive_operators(pd);
        rep.calB_coercivity = der.calB_coercivity;
        if (der.calB_coercivity <= psd_tol)
            items.push_back({Severity::warning, "calB-coercive",
                             "B R^{-1} B* is not coercive (rank-deficient B); uniqueness theory "
                             "does not apply, solving proceeds",
                             der.calB_coercivity});
    }

    if (check_nash_coercivity) {
        rep.delta_max = std::max(0.0, std::min(minQ, minS));
        items.push_back({Severity::info, "nash-coercivity",
                         "largest admissible delta for Q, S >= delta I", rep.delta_max});
        if (rep.delta_max <= 0.0)
            items.push_back({Severity::warning, "nash-coercivity",
                             "Nash coercivity assumption fails (delta_max = 0)", 0});
        else if (user_delta > 0.0 && rep.delta_max < user_delta)
            items.push_back({Severity::warning, "nash-coercivity",
                             "requested delta exceeds delta_max", rep.delta_max});
    }
    return rep;
}

inline void ensure_valid(const ProblemData& pd) {
    ValidationReport rep = validate(pd);
    if (!rep.ok()) throw ValidationError("problem data invalid:\n" + rep.summary());
}

// ---------------------------------------------------------------------------
// Derived operators
// ---------------------------------------------------------------------------

inline DerivedOperators derive_operators(const ProblemData& pd) {
    const GalerkinSpace& H = *pd.state_space;
    DerivedOperators der;

    Matrix sig_star = adjoint_of(*pd.noise_space, H, pd.sigma.entries);
    Matrix calA = 0.5 * pd.sigma.entries * sig_star;
    der.calA = OperatorMatrix(sym_part(H, calA), pd.state_space, pd.state_space);

    Matrix b_star = adjoint_of(*pd.control_space, H, pd.B.entries);
    der.calB.grid = pd.grid;
    der.calB.in = pd.state_space;
    der.calB.out = pd.state_space;
    der.calB.interp = Interp::linear;
    der.calB.values.reserve(pd.R.values.size());
    double coer = std::numeric_limits<double>::infinity();
    double supn = 0.0;
    for (const Matrix& r : pd.R.values) {
        Eigen::PartialPivLU<Matrix> lu(r);
        if (std::abs(lu.determinant()) < 1e-300)
            throw ValidationError("derive_operators: R(t) numerically singular");
        Matrix y = lu.solve(b_star);
        Matrix calB = sym_part(H, pd.B.entries * y);
        coer = std::min(coer, min_eig_selfadjoint(H, calB));
        supn = std::max(supn, op_norm(H, H, calB));
        der.calB.values.push_back(std::move(calB));
    }
    der.calB_coercivity = coer;
    der.calB_sup_norm = supn;
    return der;
}

// ---------------------------------------------------------------------------
// Convenience builder for constant-in-time instances
// ---------------------------------------------------------------------------

struct ConstantProblemSpec {
    Matrix A, B, sigma;
    Matrix Q, S, Z, R;
    Vector eta, zeta;
    double lambda = 0.0;
    Matrix Q_T, S_T, Z_T;
    Vector eta_T, zeta_T;
    double lambda_T = 0.0;
    double T = 1.0;
    int grid_cells = 400;
    std::optional<double> bound_M, bound_omega;
};

/// Assemble a ProblemData from constant matrices on orthonormal spaces.
/// Unset cost blocks default to zero, B to the identity, R to the identity.
inline ProblemData make_constant_problem(ConstantProblemSpec s) {
    if (s.A.rows() == 0) throw ValidationError("make_constant_problem: A is required");
    const int n = static_cast<int>(s.A.rows());
    if (s.B.rows() == 0) s.B = Matrix::Identity(n, n);
    const int m = static_cast<int>(s.B.cols());
    if (s.sigma.rows() == 0) s.sigma = Matrix::Zero(n, n);
    const int k = static_cast<int>(s.sigma.cols());
    if (s.R.rows() == 0) s.R = Matrix::Identity(m, m);
    auto zero_if_empty = [&](Matrix& x) { if (x.rows() == 0) x = Matrix::Zero(n, n); };
    zero_if_empty(s.Q);
    zero_if_empty(s.S);
    zero_if_empty(s.Z);
    zero_if_empty(s.Q_T);
    zero_if_empty(s.S_T);
    zero_if_empty(s.Z_T);
    if (s.eta.size() == 0) s.eta = Vector::Zero(n);
    if (s.zeta.size() == 0) s.zeta = Vector::Zero(n);
    if (s.eta_T.size() == 0) s.eta_T = Vector::Zero(n);
    if (s.zeta_T.size() == 0) s.zeta_T = Vector::Zero(n);

    ProblemData pd;
    pd.state_space = make_space(n);
    pd.control_space = (m == n) ? pd.state_space : make_space(m);
    pd.noise_space = (k == n) ? pd.state_space : make_space(k);
    pd.horizon_T = s.T;
    pd.grid = uniform_grid(s.T, s.grid_cells);
    pd.sg_A = make_matrix_semigroup(pd.state_space, s.A, s.T, s.bound_M, s.bound_omega);
    pd.B = OperatorMatrix(s.B, pd.control_space, pd.state_space);
    pd.sigma = OperatorMatrix(s.sigma, pd.noise_space, pd.state_space);
    pd.R = constant_operator_path(pd.grid, s.R, pd.control_space, pd.control_space);
    pd.Q = constant_operator_path(pd.grid, s.Q, pd.state_space, pd.state_space);
    pd.S = constant_operator_path(pd.grid, s.S, pd.state_space, pd.state_space);
    pd.Z = constant_operator_path(pd.grid, s.Z, pd.state_space, pd.state_space);
    pd.eta = constant_vector_path(pd.grid, s.eta);
    pd.zeta = constant_vector_path(pd.grid, s.zeta);
    pd.lambda_run = constant_scalar_path(pd.grid, s.lambda);
    pd.Q_T = OperatorMatrix(s.Q_T, pd.state_space, pd.state_space);
    pd.S_T = OperatorMatrix(s.S_T, pd.state_space, pd.state_space);
    pd.Z_T = OperatorMatrix(s.Z_T, pd.state_space, pd.state_space);
    pd.eta_T = s.eta_T;
    pd.zeta_T = s.zeta_T;
    pd.lambda_T = s.lambda_T;
    return pd;
}

/// Rebuild the same instance on a finer/coarser uniform grid (resampling
/// every path by interpolation).
inline ProblemData with_grid(const ProblemData& pd, int cells) {
    ProblemData out = pd;
    out.grid = uniform_grid(pd.horizon_T, cells);
    auto resample_op = [&](const TimeOperatorPath& p) {
        TimeOperatorPath q = p;
        q.grid = out.grid;
        q.values.clear();
        q.values.reserve(out.grid.size());
        for (double t : out.grid) q.values.push_back(p.at_time(t));
        return q;
    };
    auto resample_vec = [&](const TimeVectorPath& p) {
        TimeVectorPath q = p;
        q.grid = out.grid;
        q.values.clear();
        for (double t : out.grid) q.values.push_back(p.at_time(t));
        return q;
    };
    out.R = resample_op(pd.R);
    out.Q = resample_op(pd.Q);
    out.S = resample_op(pd.S);
    out.Z = resample_op(pd.Z);
    out.eta = resample_vec(pd.eta);
    out.zeta = resample_vec(pd.zeta);
    TimeScalarPath lam = pd.lambda_run;
    lam.grid = out.grid;
    lam.values.clear();
    for (double t : out.grid) lam.values.push_back(pd.lambda_run.at_time(t));
    out.lambda_run = lam;
    return out;
}

} // namespace lqmfg
