#pragma once

#include "lqmfg/master_nash.hpp"

#include <cstdint>
#include <random>

namespace lqmfg {

struct SimConfig {
    double dt = 1e-3;
    int n_paths = 1;
    std::uint64_t seed = 12345;
    double t0 = 0.0;
    Vector x0;
    Vector ybar0; // defaults to x0
    bool store_paths = false;
};

struct TrajectoryBundle {
    std::vector<double> times;
    std::vector<Vector> mean_path;
    std::vector<std::vector<Vector>> sample_paths; // per path, if stored
    std::vector<double> realized_costs;            // per path
    double mc_mean = 0.0;
    double mc_se = 0.0;
};

namespace detail {

/// Deterministic per-path Gaussian stream: Box-Muller over mt19937_64,
/// independent of thread scheduling.
class GaussianStream {
public:
    GaussianStream(std::uint64_t seed, std::uint64_t path)
        : rng_(seed ^ (0x9E3779B97F4A7C15ULL * (path + 1))) {}

    double next() {
        if (have_) {
            have_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do { u1 = uniform(); } while (u1 <= 1e-300);
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * M_PI * u2);
        have_ = true;
        return r * std::cos(2.0 * M_PI * u2);
    }

private:
    double uniform() {
        return (static_cast<double>(rng_() >> 11)) * (1.0 / 9007199254740992.0);
    }
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool have_ = false;
};

/// Per-step feedback decomposition alpha*(t_k, x, y) = gain_k x + gain_y_k y
/// + bias_k, precomputed on the simulation grid.
struct FeedbackTable {
    std::vector<double> times;
    std::vector<Matrix> gain, gain_y;
    std::vector<Vector> bias;
};

inline FeedbackTable make_feedback_table(const ProblemData& pd, const ValueFunction& vf,
                                         const std::vector<double>& times) {
    FeedbackTable ft;
    ft.times = times;
    const GalerkinSpace& H = *pd.state_space;
    Matrix b_star = adjoint_of(*pd.control_space, H, pd.B.entries);
    ft.gain.reserve(times.size());
    ft.gain_y.reserve(times.size());
    ft.bias.reserve(times.size());
    for (double t : times) {
        Eigen::PartialPivLU<Matrix> lu(pd.R.at_time(t));
        ft.gain.push_back(-lu.solve(b_star * vf.xi.P_at(t)));
        ft.gain_y.push_back(-lu.solve(b_star * vf.xi.Upsilon_at(t)));
        ft.bias.push_back(-lu.solve(b_star * vf.psiphi.psi_at(t)));
    }
    return ft;
}

} // namespace detail

/// Running cost 1/2 <R alpha, alpha> + F~(t, x, y).
inline double running_cost(const ProblemData& pd, double t, const Vector& x, const Vector& y,
                           const Vector& alpha) {
    const GalerkinSpace& H = *pd.state_space;
    const GalerkinSpace& V = *pd.control_space;
    double c = 0.5 * inner(V, pd.R.at_time(t) * alpha, alpha);
    c += 0.5 * inner(H, pd.Q.at_time(t) * x, x);
    c += inner(H, pd.S.at_time(t) * y, x);
    c += 0.5 * inner(H, pd.Z.at_time(t) * y, y);
    c += inner(H, pd.eta.at_time(t), x);
    c += inner(H, pd.zeta.at_time(t), y);
    c += pd.lambda_run.at_time(t);
    return c;
}

/// Terminal cost G~(x, y).
inline double terminal_cost(const ProblemData& pd, const Vector& x, const Vector& y) {
    const GalerkinSpace& H = *pd.state_space;
    return 0.5 * inner(H, pd.Q_T.entries * x, x) + inner(H, pd.S_T.entries * y, x) +
           0.5 * inner(H, pd.Z_T.entries * y, y) + inner(H, pd.eta_T, x) +
           inner(H, pd.zeta_T, y) + pd.lambda_T;
}

/// Deterministic mean-field flow under the equilibrium feedback:
/// ybar' = A ybar + B alpha*(t, ybar, ybar), integrated by an exponential
/// Heun step (the linear part applied through the semigroup).
inline TimeVectorPath mean_flow(const ProblemData& pd, const ValueFunction& vf, double t0,
                                const Vector& ybar0, double dt) {
    if (vf.kind != VFKind::master)
        throw std::invalid_argument("mean_flow: value function must be of master kind");
    double span = pd.horizon_T - t0;
    auto steps = static_cast<long>(std::llround(span / dt));
    if (steps < 1 || std::abs(steps * dt - span) > 1e-9 * std::max(1.0, span))
        throw std::invalid_argument("mean_flow: dt does not divide T - t0");

    std::vector<double> times(static_cast<size_t>(steps) + 1);
    for (long k = 0; k <= steps; ++k) times[static_cast<size_t>(k)] = t0 + k * dt;
    detail::FeedbackTable ft = detail::make_feedback_table(pd, vf, times);

    Matrix E = step_matrix(pd.sg_A, dt);
    std::vector<Matrix> drift(times.size());
    std::vector<Vector> drift_b(times.size());
    for (size_t k = 0; k < times.size(); ++k) {
        drift[k] = pd.B.entries * (ft.gain[k] + ft.gain_y[k]);
        drift_b[k] = pd.B.entries * ft.bias[k];
    }

    TimeVectorPath path;
    path.grid = times;
    path.values.reserve(times.size());
    Vector y = ybar0;
    path.values.push_back(y);
    for (size_t k = 0; k + 1 < times.size(); ++k) {
        Vector f0 = drift[k] * y + drift_b[k];
        Vector pred = E * (y + dt * f0);
        Vector f1 = drift[k + 1] * pred + drift_b[k + 1];
        y = E * y + 0.5 * dt * (E * f0 + f1);
        path.values.push_back(y);
    }
    return path;
}

/// Sample paths of dX = [AX + B alpha*] dt + sigma dW under the equilibrium
/// feedback, with the population mean frozen at the mean flow. Exponential
/// Heun for the drift, Maruyama increment for the noise; realized costs are
/// accumulated stepwise by the trapezoid rule.
inline TrajectoryBundle simulate_paths(const ProblemData& pd, const ValueFunction& vf,
                                       const SimConfig& cfg) {
    if (cfg.n_paths < 1) throw std::invalid_argument("simulate_paths: n_paths >= 1");
    Vector x0 = cfg.x0;
    if (x0.size() == 0) throw std::invalid_argument("simulate_paths: x0 not set");
    Vector y0 = cfg.ybar0.size() ? cfg.ybar0 : x0;

    TrajectoryBundle out;
    TimeVectorPath mean = mean_flow(pd, vf, cfg.t0, y0, cfg.dt);
    out.times = mean.grid;
    out.mean_path = mean.values;
    const size_t steps = mean.grid.size() - 1;
    const size_t K = mean.grid.size();
    const GalerkinSpace& H = *pd.state_space;
    const GalerkinSpace& V = *pd.control_space;

    detail::FeedbackTable ft = detail::make_feedback_table(pd, vf, mean.grid);

    // per-step pieces: drift f(t_k, x) = BG_k x + bc_k, cost rate
    // c_k(x) = 1/2 a^T WR a + 1/2 x^T WQ x + ws_k . x + c0_k with
    // a = gain_k x + ac_k
    std::vector<Matrix> BG(K), WQ(K), WR(K), gain(K);
    std::vector<Vector> bc(K), ac(K), ws(K);
    std::vector<double> c0(K);
    for (size_t k = 0; k < K; ++k) {
        double t = mean.grid[k];
        const Vector& y = mean.values[k];
        gain[k] = ft.gain[k];
        ac[k] = ft.gain_y[k] * y + ft.bias[k];
        BG[k] = pd.B.entries * gain[k];
        bc[k] = pd.B.entries * ac[k];
        Matrix wq = H.orthonormal ? Matrix(pd.Q.at_time(t)) : Matrix(H.gram * pd.Q.at_time(t));
        Matrix wr = V.orthonormal ? Matrix(pd.R.at_time(t)) : Matrix(V.gram * pd.R.at_time(t));
        WQ[k] = 0.5 * (wq + wq.transpose());
        WR[k] = 0.5 * (wr + wr.transpose());
        Vector sy = pd.S.at_time(t) * y + pd.eta.at_time(t);
        ws[k] = H.orthonormal ? sy : Vector(H.gram * sy);
        c0[k] = 0.5 * inner(H, pd.Z.at_time(t) * y, y) + inner(H, pd.zeta.at_time(t), y) +
                pd.lambda_run.at_time(t);
    }

    Matrix E = step_matrix(pd.sg_A, cfg.dt);
    Matrix Esig = E * pd.sigma.entries;
    const int kdim = pd.noise_space->dim;
    const double dt = cfg.dt, sqdt = std::sqrt(dt);
    const bool noiseless = pd.sigma.entries.cwiseAbs().maxCoeff() == 0.0;

    auto rate = [&](size_t k, const Vector& x) {
        Vector a = gain[k] * x + ac[k];
        return 0.5 * a.dot(WR[k] * a) + 0.5 * x.dot(WQ[k] * x) + ws[k].dot(x) + c0[k];
    };

    out.realized_costs.resize(static_cast<size_t>(cfg.n_paths));
    if (cfg.store_paths) out.sample_paths.resize(static_cast<size_t>(cfg.n_paths));

    Vector x, f0, pred, f1, dw(kdim);
    for (int pidx = 0; pidx < cfg.n_paths; ++pidx) {
        detail::GaussianStream gs(cfg.seed, static_cast<std::uint64_t>(pidx));
        x = x0;
        double cost = 0.0;
        double crate = rate(0, x);
        std::vector<Vector>* store =
            cfg.store_paths ? &out.sample_paths[static_cast<size_t>(pidx)] : nullptr;
        if (store) store->push_back(x);
        for (size_t k = 0; k < steps; ++k) {
            f0 = BG[k] * x + bc[k];
            pred = E * (x + dt * f0);
            f1 = BG[k + 1] * pred + bc[k + 1];
            x = E * x + 0.5 * dt * (E * f0 + f1);
            if (!noiseless) {
                for (int j = 0; j < kdim; ++j) dw[j] = gs.next() * sqdt;
                x += Esig * dw;
            }
            double crate1 = rate(k + 1, x);
            cost += 0.5 * dt * (crate + crate1);
            crate = crate1;
            if (store) store->push_back(x);
        }
        cost += terminal_cost(pd, x, mean.values.back());
        out.realized_costs[static_cast<size_t>(pidx)] = cost;
    }

    double sum = 0.0;
    for (double c : out.realized_costs) sum += c;
    out.mc_mean = sum / static_cast<double>(cfg.n_paths);
    if (cfg.n_paths > 1) {
        double ss = 0.0;
        for (double c : out.realized_costs) ss += (c - out.mc_mean) * (c - out.mc_mean);
        out.mc_se = std::sqrt(ss / (cfg.n_paths - 1.0)) / std::sqrt(static_cast<double>(cfg.n_paths));
    }
    return out;
}

} // namespace lqmfg
