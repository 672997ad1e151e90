#pragma once

#include "lqmfg/riccati.hpp"

#include <boost/numeric/odeint.hpp>
#include <boost/numeric/odeint/external/eigen/eigen.hpp>

namespace lqmfg {

/// Cross-check path: integrate the differential form of the coefficient
/// triple backward with an adaptive Dormand-Prince scheme, on instances
/// whose generator is available as a matrix. Never used as the primary
/// solver.
inline XiPath ode_oracle_xi(const ProblemData& pd, const ParamVector& params,
                            double abs_tol = 1e-12, double rel_tol = 1e-12) {
    if (pd.sg_A.kind != SemigroupKind::matrix_exponential)
        throw ValidationError("ode_oracle_xi: generator matrix unavailable for this semigroup kind");

    const GalerkinSpace& H = *pd.state_space;
    const int n = H.dim;
    const double T = pd.horizon_T;
    DerivedOperators der = derive_operators(pd);
    const Matrix A = pd.sg_A.generator;
    const Matrix Astar = adjoint_of(H, H, A);

    using state = Eigen::VectorXd;
    auto pack = [n](const Matrix& p, const Matrix& u, const Matrix& g) {
        state x(3 * n * n);
        Eigen::Map<Matrix>(x.data(), n, n) = p;
        Eigen::Map<Matrix>(x.data() + n * n, n, n) = u;
        Eigen::Map<Matrix>(x.data() + 2 * n * n, n, n) = g;
        return x;
    };

    // reversed time: K(tau) := X(T - tau), integrated forward from tau = 0
    auto rhs = [&](const state& x, state& dxdt, double tau) {
        double t = T - tau;
        Eigen::Map<const Matrix> p(x.data(), n, n), u(x.data() + n * n, n, n),
            g(x.data() + 2 * n * n, n, n);
        Matrix Bm = der.calB.at_time(t);
        Matrix Qm = pd.Q.at_time(t), Sm = pd.S.at_time(t), Zm = pd.Z.at_time(t);
        Matrix pb = p * Bm, ub = u * Bm, gb = g * Bm;
        Matrix dp = p * A + Astar * p - pb * p - params.a * (ub * u) + Qm;
        Matrix du = u * A + Astar * u - (ub * p + pb * u) - params.b * (ub * u) -
                    params.c * (ub * g) + Sm;
        Matrix dg = g * A + Astar * g - (gb * p + params.b * (gb * u) + pb * g +
                                         params.b * (ub * g) + ub * u) + Zm;
        dxdt.resize(3 * n * n);
        Eigen::Map<Matrix>(dxdt.data(), n, n) = dp;
        Eigen::Map<Matrix>(dxdt.data() + n * n, n, n) = du;
        Eigen::Map<Matrix>(dxdt.data() + 2 * n * n, n, n) = dg;
    };

    const size_t M = pd.grid.size() - 1;
    std::vector<double> taus(M + 1);
    for (size_t i = 0; i <= M; ++i) taus[i] = T - pd.grid[M - i];

    XiPath out;
    out.grid = pd.grid;
    out.space = pd.state_space;
    out.P.assign(M + 1, Matrix());
    out.Upsilon.assign(M + 1, Matrix());
    out.Gamma.assign(M + 1, Matrix());

    state x = pack(pd.Q_T.entries, pd.S_T.entries, pd.Z_T.entries);
    size_t obs = 0;
    auto observer = [&](const state& s, double) {
        size_t gi = M - obs;
        out.P[gi] = Eigen::Map<const Matrix>(s.data(), n, n);
        out.Upsilon[gi] = Eigen::Map<const Matrix>(s.data() + n * n, n, n);
        out.Gamma[gi] = Eigen::Map<const Matrix>(s.data() + 2 * n * n, n, n);
        ++obs;
    };

    namespace ode = boost::numeric::odeint;
    auto stepper = ode::make_controlled(
        abs_tol, rel_tol,
        ode::runge_kutta_dopri5<state, double, state, double, ode::vector_space_algebra>());
    double dt0 = std::max(1e-8, (pd.grid[1] - pd.grid[0]) / 16.0);
    ode::integrate_times(stepper, rhs, x, taus.begin(), taus.end(), dt0, observer);
    return out;
}

} // namespace lqmfg
