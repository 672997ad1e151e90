#include "lqmfg/ode_oracle.hpp"
#include "lqmfg/riccati.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <boost/numeric/odeint.hpp>

#include <random>

using namespace lqmfg;
using Catch::Approx;

namespace {

ProblemData scalar_tanh_problem(int cells = 2000, double sigma = 0.0) {
    ConstantProblemSpec s;
    s.A = Matrix::Zero(1, 1);
    s.Q = Matrix::Identity(1, 1);
    if (sigma != 0.0) s.sigma = sigma * Matrix::Identity(1, 1);
    s.T = 1.0;
    s.grid_cells = cells;
    s.bound_M = 1.0;
    s.bound_omega = 0.0;
    return make_constant_problem(std::move(s));
}

Matrix random_psd(int n, std::mt19937_64& rng, double lo, double hi) {
    std::normal_distribution<double> g;
    Matrix a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = g(rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    Matrix q = qr.householderQ();
    std::uniform_real_distribution<double> u(lo, hi);
    Vector d(n);
    for (int i = 0; i < n; ++i) d[i] = u(rng);
    return q * d.asDiagonal() * q.transpose();
}

/// Random PSD instance with a skew generator, so (M, omega) = (1, 0) is
/// exact and the a priori constants stay finite.
ProblemData random_instance(int n, std::mt19937_64& rng, int cells) {
    std::normal_distribution<double> g;
    ConstantProblemSpec s;
    Matrix w(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) w(i, j) = g(rng);
    s.A = 0.4 * (w - w.transpose());
    s.bound_M = 1.0;
    s.bound_omega = 0.0;
    Matrix b(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) b(i, j) = g(rng);
    s.B = 0.7 * b / std::max(1.0, b.norm());
    s.sigma = 0.3 * Matrix::Identity(n, n);
    s.R = random_psd(n, rng, 1.0, 2.0);
    s.Q = random_psd(n, rng, 0.0, 0.4);
    s.S = random_psd(n, rng, 0.0, 0.4);
    s.Z = random_psd(n, rng, 0.0, 0.3);
    s.Q_T = random_psd(n, rng, 0.0, 0.4);
    s.S_T = random_psd(n, rng, 0.0, 0.4);
    s.Z_T = random_psd(n, rng, 0.0, 0.3);
    s.eta = Vector::NullaryExpr(n, [&](Eigen::Index) { return 0.3 * g(rng); });
    s.zeta = Vector::NullaryExpr(n, [&](Eigen::Index) { return 0.3 * g(rng); });
    s.eta_T = Vector::NullaryExpr(n, [&](Eigen::Index) { return 0.3 * g(rng); });
    s.zeta_T = Vector::NullaryExpr(n, [&](Eigen::Index) { return 0.3 * g(rng); });
    s.lambda = 0.1;
    s.lambda_T = 0.2;
    s.T = 1.0;
    s.grid_cells = cells;
    return make_constant_problem(std::move(s));
}

double xi_sup_gap(const XiPath& a, const XiPath& b) {
    const GalerkinSpace& H = *a.space;
    double worst = 0;
    for (size_t i = 0; i < a.grid.size(); ++i) {
        double t = a.grid[i];
        double gp = op_norm(H, H, a.P[i] - b.P_at(t));
        double gu = op_norm(H, H, a.Upsilon[i] - b.Upsilon_at(t));
        double gg = op_norm(H, H, a.Gamma[i] - b.Gamma_at(t));
        worst = std::max(worst, std::sqrt(gp * gp + gu * gu + gg * gg));
    }
    return worst;
}

/// Independent scalar backward-ODE oracle via adaptive Dormand-Prince.
/// Integrates x' = rhs(t, x) backward from x(T) = terminal and returns the
/// requested component at the given evaluation times.
std::vector<double> scalar_backward_oracle(
    const std::function<void(double, const std::vector<double>&, std::vector<double>&)>& rhs,
    std::vector<double> terminal, double T, const std::vector<double>& eval_times_ascending,
    size_t component) {
    namespace ode = boost::numeric::odeint;
    using state = std::vector<double>;
    // reversed time tau = T - t, forward integration starting at tau = 0
    auto sys = [&](const state& x, state& dxdt, double tau) {
        state forward(x.size());
        rhs(T - tau, x, forward); // dx/dt
        dxdt.resize(x.size());
        for (size_t i = 0; i < x.size(); ++i) dxdt[i] = -forward[i];
    };
    std::vector<double> taus{0.0};
    for (auto it = eval_times_ascending.rbegin(); it != eval_times_ascending.rend(); ++it)
        taus.push_back(T - *it);
    state x = terminal;
    std::vector<double> out;
    auto stepper = ode::make_controlled(1e-13, 1e-13, ode::runge_kutta_dopri5<state>());
    ode::integrate_times(stepper, sys, x, taus.begin(), taus.end(), 1e-4,
                         [&](const state& s, double) { out.push_back(s[component]); });
    out.erase(out.begin()); // drop the tau = 0 sample (that is t = T)
    std::reverse(out.begin(), out.end());
    return out;
}

} // namespace

TEST_CASE("bound_constants") {
    SECTION("zero costs: r = 0 and all a priori constants vanish") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.T = 1.0;
        s.grid_cells = 8;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        BoundConstants bc = bound_constants(make_constant_problem(std::move(s)), master_params());
        REQUIRE(bc.r == 0.0);
        REQUIRE(bc.C_P == 0.0);
        REQUIRE(bc.C_Upsilon == 0.0);
        REQUIRE(bc.C_Gamma == 0.0);
        REQUIRE(bc.tau == Approx(1.0));
    }
    SECTION("worked scalar instance, cross-checked against the fixed-point conditions") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.Q = Matrix::Identity(1, 1);
        s.Q_T = Matrix::Identity(1, 1);
        s.T = 1.0;
        s.grid_cells = 8;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        BoundConstants bc = bound_constants(make_constant_problem(std::move(s)), master_params());
        REQUIRE(bc.M_T == Approx(1.0));
        REQUIRE(bc.L_a == Approx(2.0));
        REQUIRE(bc.norm_VT == Approx(1.0));
        REQUIRE(bc.norm_V == Approx(1.0));
        REQUIRE(bc.C_P == Approx(2.0));
        REQUIRE(bc.r == Approx(4.0));
        REQUIRE(bc.tau == Approx(1.0 / 49.0));
        // independent verification: (r, tau) satisfy the invariance and
        // contraction conditions of the small-time fixed point
        double M2 = bc.M_T * bc.M_T;
        double invariance =
            M2 * (bc.norm_VT + bc.tau * bc.norm_V + 3 * bc.tau * bc.r * bc.r * bc.L_a * bc.norm_B);
        REQUIRE(invariance <= bc.r);
        REQUIRE(3 * bc.tau * bc.r * M2 * bc.L_a * bc.norm_B < 1.0);
    }
    SECTION("L_a for the two-player parameters") {
        ParamVector p = nash_params(2);
        REQUIRE(1 + std::abs(p.a) + std::abs(p.b) + std::abs(p.c) == Approx(4.0));
        BoundConstants bc = bound_constants(scalar_tanh_problem(8), p);
        REQUIRE(bc.L_a == Approx(4.0));
    }
}

TEST_CASE("solve_xi closed forms") {
    SECTION("Lyapunov case: B = 0, A = 0 integrates the data exactly") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.B = Matrix::Zero(2, 2);
        Matrix q(2, 2), qt(2, 2), ss(2, 2), st(2, 2);
        q << 1.0, 0.2, 0.2, 0.7;
        qt << 0.4, 0.1, 0.1, 0.3;
        ss << 0.5, 0.0, 0.0, 0.2;
        st << 0.1, 0.0, 0.0, 0.1;
        s.Q = q;
        s.Q_T = qt;
        s.S = ss;
        s.S_T = st;
        s.T = 1.0;
        s.grid_cells = 500;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiSolution sol = solve_xi(pd, master_params(), {});
        for (size_t i = 0; i < pd.grid.size(); ++i) {
            double rem = 1.0 - pd.grid[i];
            REQUIRE((sol.path.P[i] - (qt + rem * q)).cwiseAbs().maxCoeff() < 1e-10);
            REQUIRE((sol.path.Upsilon[i] - (st + rem * ss)).cwiseAbs().maxCoeff() < 1e-10);
            REQUIRE(sol.path.Gamma[i].cwiseAbs().maxCoeff() < 1e-10);
        }
    }
    SECTION("scalar Riccati has the tanh solution") {
        ProblemData pd = scalar_tanh_problem();
        XiSolution sol = solve_xi(pd, master_params(), {});
        double worst = 0;
        for (size_t i = 0; i < pd.grid.size(); ++i)
            worst = std::max(worst,
                             std::abs(sol.path.P[i](0, 0) - std::tanh(1.0 - pd.grid[i])));
        REQUIRE(worst < 1e-6);
        REQUIRE(sol.path.P_at(0.5)(0, 0) == Approx(0.46211715726000974).epsilon(1e-6));
        REQUIRE(sol.report.mild_residual < 1e-8);
    }
    SECTION("Upsilon equation against an adaptive ODE oracle") {
        // A = 0, calB = 1, Q = 1, Q_T = 0, S = 1, S_T = 0:
        // p' = p^2 - 1, u' = 2 p u + u^2 - 1, both zero at T
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.Q = Matrix::Identity(1, 1);
        s.S = Matrix::Identity(1, 1);
        s.T = 1.0;
        s.grid_cells = 2000;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiSolution sol = solve_xi(pd, master_params(), {});
        std::vector<double> ts{0.0, 0.25, 0.5};
        auto rhs = [](double, const std::vector<double>& x, std::vector<double>& d) {
            d.resize(2);
            d[0] = x[0] * x[0] - 1.0;
            d[1] = 2.0 * x[0] * x[1] + x[1] * x[1] - 1.0;
        };
        auto oracle_u = scalar_backward_oracle(rhs, {0.0, 0.0}, 1.0, ts, 1);
        for (size_t k = 0; k < ts.size(); ++k)
            REQUIRE(sol.path.Upsilon_at(ts[k])(0, 0) == Approx(oracle_u[k]).margin(1e-6));
    }
}

TEST_CASE("solve_psi_phi") {
    SECTION("homogeneous data give the zero solution") {
        ProblemData pd = scalar_tanh_problem(200);
        XiSolution sol = solve_xi(pd, master_params(), {});
        PsiPhiPath pp = solve_psi_phi(pd, master_params(), sol.path, {});
        for (size_t i = 0; i < pp.grid.size(); ++i) {
            REQUIRE(pp.psi[i].cwiseAbs().maxCoeff() < 1e-14);
            REQUIRE(pp.phi[i].cwiseAbs().maxCoeff() < 1e-14);
        }
    }
    SECTION("pure integration: psi(t) = T - t") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.B = Matrix::Zero(1, 1);
        s.eta = Vector::Ones(1);
        s.T = 1.0;
        s.grid_cells = 64;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiSolution sol = solve_xi(pd, master_params(), {});
        PsiPhiPath pp = solve_psi_phi(pd, master_params(), sol.path, {});
        for (size_t i = 0; i < pp.grid.size(); ++i)
            REQUIRE(pp.psi[i][0] == Approx(1.0 - pp.grid[i]).margin(1e-12));
    }
    SECTION("scalar psi ODE against the oracle") {
        // P = tanh(T - t), Upsilon = 0, calB = 1, eta = 1, eta_T = 0:
        // psi' = P psi - 1
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.Q = Matrix::Identity(1, 1);
        s.eta = Vector::Ones(1);
        s.T = 1.0;
        s.grid_cells = 2000;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiSolution sol = solve_xi(pd, master_params(), {});
        PsiPhiPath pp = solve_psi_phi(pd, master_params(), sol.path, {});
        std::vector<double> ts{0.0, 0.3, 0.6};
        auto rhs = [](double t, const std::vector<double>& x, std::vector<double>& d) {
            d.resize(1);
            d[0] = std::tanh(1.0 - t) * x[0] - 1.0;
        };
        auto oracle = scalar_backward_oracle(rhs, {0.0}, 1.0, ts, 0);
        for (size_t k = 0; k < ts.size(); ++k)
            REQUIRE(pp.psi_at(ts[k])[0] == Approx(oracle[k]).margin(2e-6));
    }
    SECTION("grid mismatch is rejected") {
        ProblemData pd = scalar_tanh_problem(100);
        XiSolution sol = solve_xi(pd, master_params(), {});
        ProblemData pd2 = with_grid(pd, 50);
        REQUIRE_THROWS_AS(solve_psi_phi(pd2, master_params(), sol.path, {}), ValidationError);
    }
}

TEST_CASE("solve_mu") {
    SECTION("all inputs zero: mu is the terminal constant") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.lambda_T = 3.0;
        s.T = 1.0;
        s.grid_cells = 16;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        CoefficientSolution sol = solve_coefficients(pd, master_params(), {});
        for (double m : sol.mu.mu) REQUIRE(m == Approx(3.0).margin(1e-14));
    }
    SECTION("trace of the tanh path integrates to log(cosh 1)/2") {
        // sigma = 1 gives calA = 1/2; mu(0) = 1/2 int_0^1 tanh(s) ds
        ProblemData pd = scalar_tanh_problem(2000, 1.0);
        CoefficientSolution sol = solve_coefficients(pd, master_params(), {});
        double expect = 0.5 * std::log(std::cosh(1.0));
        REQUIRE(sol.mu.mu[0] == Approx(expect).margin(1e-6));
        REQUIRE(sol.mu.mu.back() == 0.0);
    }
    SECTION("the c Gamma trace term is linear in c") {
        ProblemData pd = scalar_tanh_problem(400, 1.0);
        XiSolution sol = solve_xi(pd, master_params(), {});
        XiPath with_gamma = sol.path;
        with_gamma.Gamma = with_gamma.P; // Gamma = P by hand
        PsiPhiPath pp = solve_psi_phi(pd, master_params(), sol.path, {});
        ParamVector c0 = master_params();
        ParamVector c1 = master_params();
        c1.c = 1.0;
        MuPath mu0 = solve_mu(pd, c0, with_gamma, pp);
        MuPath mu1 = solve_mu(pd, c1, with_gamma, pp);
        REQUIRE(mu1.mu[0] == Approx(2.0 * mu0.mu[0]).epsilon(1e-10));
    }
}

TEST_CASE("check_apriori") {
    SECTION("master params with PSD data: P and Upsilon stay PSD") {
        std::mt19937_64 rng(23);
        ProblemData pd = random_instance(3, rng, 400);
        XiSolution sol = solve_xi(pd, master_params(), {});
        BoundReport rep = check_apriori(pd, master_params(), sol.path);
        REQUIRE(rep.gate_P);
        REQUIRE(rep.gate_Upsilon);
        REQUIRE(rep.min_eig_P >= -1e-8);
        REQUIRE(rep.min_eig_Upsilon >= -1e-8);
        REQUIRE(rep.violations.empty());
    }
    SECTION("zero-cost instance: all bounds hold as 0 <= 0") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.T = 1.0;
        s.grid_cells = 32;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiSolution sol = solve_xi(pd, master_params(), {});
        BoundReport rep = check_apriori(pd, master_params(), sol.path);
        REQUIRE(rep.max_norm_P == 0.0);
        REQUIRE(rep.constants.C_P == 0.0);
        REQUIRE(rep.violations.empty());
    }
    SECTION("scalar tanh: sup norm tanh(1) below C_P = 1") {
        ProblemData pd = scalar_tanh_problem(400);
        XiSolution sol = solve_xi(pd, master_params(), {});
        BoundReport rep = check_apriori(pd, master_params(), sol.path);
        REQUIRE(rep.max_norm_P == Approx(std::tanh(1.0)).margin(1e-6));
        REQUIRE(rep.constants.C_P == Approx(1.0));
        REQUIRE(rep.violations.empty());
    }
}

TEST_CASE("ode_oracle_xi") {
    SECTION("matches tanh") {
        ProblemData pd = scalar_tanh_problem(500);
        XiPath oracle = ode_oracle_xi(pd, master_params());
        double worst = 0;
        for (size_t i = 0; i < pd.grid.size(); ++i)
            worst = std::max(worst, std::abs(oracle.P[i](0, 0) - std::tanh(1.0 - pd.grid[i])));
        REQUIRE(worst < 1e-10);
    }
    SECTION("agreement with solve_xi on a random 4-dim PSD instance") {
        std::mt19937_64 rng(29);
        ProblemData pd = random_instance(4, rng, 800);
        XiSolution sol = solve_xi(pd, master_params(), {});
        XiPath oracle = ode_oracle_xi(pd, master_params());
        REQUIRE(xi_sup_gap(sol.path, oracle) < 1e-5);
    }
    SECTION("B = 0: oracle equals the closed-form integral") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.B = Matrix::Zero(2, 2);
        Matrix q(2, 2), qt(2, 2);
        q << 1.0, 0.2, 0.2, 0.7;
        qt << 0.4, 0.1, 0.1, 0.3;
        s.Q = q;
        s.Q_T = qt;
        s.T = 1.0;
        s.grid_cells = 100;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        XiPath oracle = ode_oracle_xi(pd, master_params());
        for (size_t i = 0; i < pd.grid.size(); ++i) {
            double rem = 1.0 - pd.grid[i];
            REQUIRE((oracle.P[i] - (qt + rem * q)).cwiseAbs().maxCoeff() < 1e-8);
        }
    }
    SECTION("unavailable for transport semigroups") {
        auto hat = make_hat_space(9, 1.0);
        ProblemData pd;
        pd.state_space = pd.control_space = pd.noise_space = hat;
        pd.sg_A = make_transport_semigroup(hat, 0.0, 1.0);
        pd.horizon_T = 1.0;
        pd.grid = uniform_grid(1.0, 8);
        REQUIRE_THROWS_AS(ode_oracle_xi(pd, master_params()), ValidationError);
    }
}

TEST_CASE("solver invariants") {
    std::mt19937_64 rng(31);
    ProblemData pd = random_instance(3, rng, 400);

    SECTION("stored matrices are self-adjoint to 1e-10 and terminal data are bitwise") {
        XiSolution sol = solve_xi(pd, master_params(), {});
        const GalerkinSpace& H = *pd.state_space;
        for (size_t i = 0; i < pd.grid.size(); ++i) {
            REQUIRE(sym_defect(H, sol.path.P[i]) < 1e-10);
            REQUIRE(sym_defect(H, sol.path.Upsilon[i]) < 1e-10);
            REQUIRE(sym_defect(H, sol.path.Gamma[i]) < 1e-10);
        }
        REQUIRE((sol.path.P.back() - pd.Q_T.entries).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((sol.path.Upsilon.back() - pd.S_T.entries).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((sol.path.Gamma.back() - pd.Z_T.entries).cwiseAbs().maxCoeff() == 0.0);
        PsiPhiPath pp = solve_psi_phi(pd, master_params(), sol.path, {});
        REQUIRE((pp.psi.back() - pd.eta_T).cwiseAbs().maxCoeff() == 0.0);
        REQUIRE((pp.phi.back() - pd.zeta_T).cwiseAbs().maxCoeff() == 0.0);
        MuPath mu = solve_mu(pd, master_params(), sol.path, pp);
        REQUIRE(mu.mu.back() == pd.lambda_T);
    }
    SECTION("grid halving shrinks the oracle gap by at least 3x") {
        XiSolution coarse = solve_xi(pd, master_params(), {});
        XiPath oc = ode_oracle_xi(pd, master_params());
        double gap_coarse = xi_sup_gap(coarse.path, oc);
        ProblemData fine = with_grid(pd, 800);
        XiSolution fs = solve_xi(fine, master_params(), {});
        XiPath of = ode_oracle_xi(fine, master_params());
        double gap_fine = xi_sup_gap(fs.path, of);
        REQUIRE(gap_coarse / std::max(gap_fine, 1e-15) >= 3.0);
    }
    SECTION("uniqueness: zero and terminal-datum initial guesses agree") {
        SolverConfig a, b;
        b.zero_initial_guess = true;
        XiSolution sa = solve_xi(pd, master_params(), a);
        XiSolution sb = solve_xi(pd, master_params(), b);
        REQUIRE(xi_sup_gap(sa.path, sb.path) < 10 * a.picard_tol * 10);
    }
    SECTION("nash parameters solve and report interval data") {
        XiSolution sol = solve_xi(pd, nash_params(8), {});
        REQUIRE_FALSE(sol.report.intervals.empty());
        for (const auto& iv : sol.report.intervals)
            REQUIRE(iv.final_residual <= 1e-10);
    }
}

TEST_CASE("faithful mode") {
    ProblemData pd = scalar_tanh_problem(2000);
    SolverConfig adaptive;
    SolverConfig faithful;
    faithful.faithful = true;
    XiSolution sa = solve_xi(pd, master_params(), adaptive);
    XiSolution sf = solve_xi(pd, master_params(), faithful);

    SECTION("every interval contracts below 1/2") {
        REQUIRE(sf.report.intervals.size() > 10);
        for (const auto& iv : sf.report.intervals) REQUIRE(iv.contraction_ratio < 0.5);
    }
    SECTION("first interval iterates stay inside the radius-r ball") {
        const SolveInterval& first = sf.report.intervals.back(); // solved first, ends at T
        REQUIRE(first.t_end == Approx(pd.horizon_T));
        REQUIRE(first.max_radius <= first.r + 1e-12);
    }
    SECTION("concatenated solution matches the adaptive one") {
        REQUIRE(xi_sup_gap(sa.path, sf.path) < 1e-8);
    }
    SECTION("faithful tau shorter than the grid step is an error") {
        ProblemData coarse = with_grid(pd, 10); // h = 0.1 > tau = 1/25
        SolverConfig cfg;
        cfg.faithful = true;
        REQUIRE_THROWS_AS(solve_xi(coarse, master_params(), cfg), SolveError);
    }
}

TEST_CASE("solver error paths") {
    SECTION("picard failure carries the offending interval") {
        ProblemData pd = scalar_tanh_problem(100);
        SolverConfig cfg;
        cfg.max_picard = 2;
        cfg.picard_tol = 1e-15;
        try {
            solve_xi(pd, master_params(), cfg);
            FAIL("expected SolveError");
        } catch (const SolveError& e) {
            REQUIRE(std::string(e.what()).find("[") != std::string::npos);
        }
    }
    SECTION("invalid data are rejected before solving") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(1, 1);
        s.Q = -Matrix::Identity(1, 1); // not PSD
        s.T = 1.0;
        s.grid_cells = 16;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        REQUIRE_THROWS_AS(solve_xi(pd, master_params(), {}), ValidationError);
    }
    SECTION("eps-box violations warn but solve") {
        ProblemData pd = scalar_tanh_problem(200);
        SolverConfig cfg;
        cfg.eps_box = 0.5;
        XiSolution sol = solve_xi(pd, nash_params(2), cfg); // a = 2 outside the box
        REQUIRE_FALSE(sol.report.warnings.empty());
    }
}
