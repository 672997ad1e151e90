#pragma once

#include "lqmfg/model_file.hpp"
#include "lqmfg/ode_oracle.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace lqmfg {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
    }
    void header(const std::vector<std::string>& cols) { line(cols); }
    void row(const std::vector<double>& vals) {
        for (size_t i = 0; i < vals.size(); ++i) {
            if (i) out_ << ',';
            out_ << g17(vals[i]);
        }
        out_ << '\n';
    }
    void line(const std::vector<std::string>& cells) {
        for (size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline json constants_json(const BoundConstants& bc) {
    return {{"M_T", bc.M_T},   {"L_a", bc.L_a},         {"r", bc.r},
            {"tau", bc.tau},   {"C_P", bc.C_P},         {"C_Upsilon", bc.C_Upsilon},
            {"C_Gamma", bc.C_Gamma}, {"C_Xi", bc.C_Xi}, {"norm_V", bc.norm_V},
            {"norm_VT", bc.norm_VT}, {"norm_B", bc.norm_B}};
}

inline json report_json(const SolveReport& rep) {
    json intervals = json::array();
    for (const auto& iv : rep.intervals) {
        intervals.push_back({{"t_start", iv.t_start},
                             {"t_end", iv.t_end},
                             {"picard_iterations", iv.picard_iterations},
                             {"final_residual", iv.final_residual},
                             {"r", iv.r},
                             {"tau", iv.tau},
                             {"contraction_ratio", iv.contraction_ratio},
                             {"max_radius", iv.max_radius}});
    }
    json violations = json::array();
    for (const auto& v : rep.bound_violations)
        violations.push_back({{"what", v.what}, {"value", v.value}, {"bound", v.bound}, {"time", v.time}});
    return {{"constants", constants_json(rep.constants)},
            {"intervals", intervals},
            {"bounds",
             {{"gate_P", rep.bounds.gate_P},
              {"gate_Upsilon", rep.bounds.gate_Upsilon},
              {"gate_Gamma", rep.bounds.gate_Gamma},
              {"max_norm_P", rep.bounds.max_norm_P},
              {"max_norm_Upsilon", rep.bounds.max_norm_Upsilon},
              {"max_norm_Gamma", rep.bounds.max_norm_Gamma},
              {"min_eig_P", rep.bounds.min_eig_P},
              {"min_eig_Upsilon", rep.bounds.min_eig_Upsilon},
              {"min_eig_Gamma", rep.bounds.min_eig_Gamma},
              {"min_eig_Qa", rep.bounds.min_eig_Qa},
              {"min_eig_Sa", rep.bounds.min_eig_Sa}}},
            {"bound_violations", violations},
            {"warnings", rep.warnings},
            {"mild_residual", rep.mild_residual},
            {"asym_residual", rep.asym_residual},
            {"total_picard", rep.total_picard}};
}

inline json config_json(const ModelFile& mf, const std::string& params_selector) {
    return {{"model", mf.source_path}, {"kind", mf.kind},        {"params", params_selector},
            {"grid", mf.grid},         {"tol", mf.tol},          {"max_iter", mf.max_iter},
            {"faithful", mf.faithful}, {"strict", mf.strict},    {"eps_box", mf.eps_box},
            {"T", mf.T},               {"seed", mf.seed},        {"dt", mf.dt},
            {"paths", mf.paths}};
}

inline void write_json(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    out << j.dump(2) << '\n';
}

inline ParamVector parse_selector(const std::string& sel, std::string* desc = nullptr) {
    if (sel == "master") {
        if (desc) *desc = "master";
        return master_params();
    }
    if (sel.rfind("nash:", 0) == 0) {
        int N = std::atoi(sel.c_str() + 5);
        if (N < 2) throw ParseError("params selector: nash:N needs N >= 2");
        if (desc) *desc = "nash:" + std::to_string(N);
        return nash_params(N);
    }
    throw ParseError("params selector must be 'master' or 'nash:N', got '" + sel + "'");
}

/// The vintage model has Q = 0, so the Nash-uniqueness hypothesis (Q, S
/// coercive) fails; solving the Nash variant is refused unless a q_reg
/// regularization makes it coercive.
inline void check_vintage_nash(const LoadedModel& lm, const std::string& selector) {
    if (!lm.vintage || selector == "master") return;
    ValidationReport vr = validate(lm.pd, true);
    if (vr.delta_max <= 0.0)
        throw ValidationError(
            "the vintage model has Q = 0, so the Nash coercivity assumption (Q, S >= delta I "
            "with delta > 0) fails and the Nash system's global theory does not apply; add a "
            "q_reg > 0 regularization in [costs] to proceed (measured delta_max = " +
            std::to_string(vr.delta_max) + ")");
}

struct CliOverrides {
    std::optional<int> grid;
    std::optional<double> tol;
    std::optional<bool> faithful, strict;
    std::optional<std::uint64_t> seed;
};

inline ModelFile load_with_overrides(const std::string& model_path, const CliOverrides& ov) {
    ModelFile mf = parse_model_file(model_path);
    if (ov.grid) mf.grid = *ov.grid;
    if (ov.tol) mf.tol = *ov.tol;
    if (ov.faithful) mf.faithful = *ov.faithful;
    if (ov.strict) mf.strict = *ov.strict;
    if (ov.seed) mf.seed = *ov.seed;
    return mf;
}

inline void write_coefficients_csv(const std::filesystem::path& path,
                                   const CoefficientSolution& sol) {
    const int n = sol.xi.space->dim;
    std::vector<std::string> cols{"t"};
    auto block = [&](const std::string& name) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                cols.push_back(name + "_" + std::to_string(i) + "_" + std::to_string(j));
    };
    block("P");
    block("Upsilon");
    block("Gamma");
    for (int i = 0; i < n; ++i) cols.push_back("psi_" + std::to_string(i));
    for (int i = 0; i < n; ++i) cols.push_back("phi_" + std::to_string(i));
    cols.push_back("mu");

    CsvWriter csv(path);
    csv.header(cols);
    std::vector<double> row;
    for (size_t k = 0; k < sol.xi.grid.size(); ++k) {
        row.clear();
        row.push_back(sol.xi.grid[k]);
        auto push_mat = [&](const Matrix& m) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) row.push_back(m(i, j));
        };
        push_mat(sol.xi.P[k]);
        push_mat(sol.xi.Upsilon[k]);
        push_mat(sol.xi.Gamma[k]);
        for (int i = 0; i < n; ++i) row.push_back(sol.psiphi.psi[k][i]);
        for (int i = 0; i < n; ++i) row.push_back(sol.psiphi.phi[k][i]);
        row.push_back(sol.mu.mu[k]);
        csv.row(row);
    }
}

inline void write_values_csv(const std::filesystem::path& path, const ProblemData& pd,
                             const CoefficientSolution& sol) {
    ValueFunction vf = make_master_value(sol);
    const int n = pd.state_space->dim;
    std::vector<std::pair<std::string, std::pair<Vector, Vector>>> points;
    for (int k = 0; k < std::min(n, 3); ++k) {
        Vector e = Vector::Zero(n);
        e[k] = 1.0;
        points.push_back({"x=e" + std::to_string(k) + ";y=0", {e, Vector::Zero(n)}});
        points.push_back({"x=0;y=e" + std::to_string(k), {Vector::Zero(n), e}});
    }
    points.push_back({"x=ones;y=ones", {Vector::Ones(n), Vector::Ones(n)}});
    points.push_back({"x=0;y=0", {Vector::Zero(n), Vector::Zero(n)}});

    CsvWriter csv(path);
    csv.line({"t", "point", "value"});
    size_t M = pd.grid.size() - 1;
    size_t stride = std::max<size_t>(1, M / 10);
    for (size_t k = 0; k <= M; k += stride) {
        double t = pd.grid[k];
        for (const auto& [label, xy] : points) {
            double v = eval_value(vf, t, xy.first, {xy.second});
            csv.line({g17(t), label, g17(v)});
        }
    }
}

} // namespace detail

// ---------------------------------------------------------------------------
// Commands (exit code 0 success, 1 validation/model failure, 2 solver failure)
// ---------------------------------------------------------------------------

inline int cmd_solve(const std::string& model_path, const std::string& params_selector,
                     const std::string& out_dir, const detail::CliOverrides& ov = {}) {
    try {
        std::string desc;
        ParamVector prm = detail::parse_selector(params_selector, &desc);
        ModelFile mf = detail::load_with_overrides(model_path, ov);
        LoadedModel lm = build_from_model(mf);
        detail::check_vintage_nash(lm, params_selector == "master" ? "master" : "nash");

        std::filesystem::create_directories(out_dir);
        try {
            CoefficientSolution sol = solve_coefficients(lm.pd, prm, lm.solver);
            detail::write_coefficients_csv(std::filesystem::path(out_dir) / "coefficients.csv", sol);
            detail::write_values_csv(std::filesystem::path(out_dir) / "values.csv", lm.pd, sol);
            json rep = detail::report_json(sol.report);
            rep["command"] = "solve";
            rep["config"] = detail::config_json(mf, desc);
            ValidationReport vr = validate(lm.pd, true);
            rep["validation"] = {{"lambda_R", vr.lambda_R},
                                 {"delta_max", vr.delta_max},
                                 {"calB_coercivity", vr.calB_coercivity}};
            detail::write_json(std::filesystem::path(out_dir) / "report.json", rep);
        } catch (const SolveError& e) {
            std::cerr << "solver failure: " << e.what() << "\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_nash_sweep(const std::string& model_path, const std::vector<int>& Ns,
                          const std::string& out_dir, const detail::CliOverrides& ov = {}) {
    try {
        ModelFile mf = detail::load_with_overrides(model_path, ov);
        LoadedModel lm = build_from_model(mf);
        detail::check_vintage_nash(lm, "nash");
        std::filesystem::create_directories(out_dir);

        SweepReport rep;
        try {
            rep = convergence_sweep(lm.pd, Ns, lm.solver);
        } catch (const SolveError& e) {
            std::cerr << "solver failure (master solve): " << e.what() << "\n";
            return 2;
        }

        detail::CsvWriter csv(std::filesystem::path(out_dir) / "sweep.csv");
        csv.header({"N", "a", "b", "c", "ok", "d_N", "gap_P", "gap_Upsilon", "gap_Gamma",
                    "gap_psi", "gap_phi", "gap_mu", "slope"});
        for (const auto& row : rep.rows) {
            csv.line({std::to_string(row.N), detail::g17(row.params.a), detail::g17(row.params.b),
                      detail::g17(row.params.c), row.ok ? "1" : "0", detail::g17(row.d_N),
                      detail::g17(row.gap_P), detail::g17(row.gap_Upsilon),
                      detail::g17(row.gap_Gamma), detail::g17(row.gap_psi),
                      detail::g17(row.gap_phi), detail::g17(row.gap_mu), detail::g17(rep.slope)});
        }
        json master = detail::report_json(rep.master_report);
        master["command"] = "nash-sweep";
        master["config"] = detail::config_json(mf, "master");
        detail::write_json(std::filesystem::path(out_dir) / "report_master.json", master);
        for (const auto& row : rep.rows) {
            if (!row.ok) {
                detail::write_json(std::filesystem::path(out_dir) /
                                       ("report_nash_" + std::to_string(row.N) + ".json"),
                                   json{{"N", row.N}, {"ok", false}, {"error", row.error}});
                continue;
            }
            json jr = detail::report_json(row.report);
            jr["N"] = row.N;
            jr["ok"] = true;
            detail::write_json(std::filesystem::path(out_dir) /
                                   ("report_nash_" + std::to_string(row.N) + ".json"),
                               jr);
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_vintage(const std::string& model_path, const std::string& out_dir,
                       const std::string& params_selector = "master",
                       const detail::CliOverrides& ov = {}) {
    try {
        ModelFile mf = detail::load_with_overrides(model_path, ov);
        if (mf.kind != "vintage")
            throw ValidationError("cmd_vintage: model file is not a vintage model");
        LoadedModel lm = build_from_model(mf);
        detail::check_vintage_nash(lm, params_selector);
        ParamVector prm = detail::parse_selector(params_selector);
        std::filesystem::create_directories(out_dir);

        CoefficientSolution sol;
        try {
            sol = solve_coefficients(lm.pd, prm, lm.solver);
        } catch (const SolveError& e) {
            std::cerr << "solver failure: " << e.what() << "\n";
            return 2;
        }

        json rep = detail::report_json(sol.report);
        rep["command"] = "vintage";
        rep["config"] = detail::config_json(mf, params_selector);
        detail::write_json(std::filesystem::path(out_dir) / "report.json", rep);

        // age profiles of psi(t)
        {
            detail::CsvWriter csv(std::filesystem::path(out_dir) / "psi_profile.csv");
            csv.header({"t", "s", "psi"});
            const auto& nodes = lm.pd.state_space->nodes;
            size_t M = lm.pd.grid.size() - 1;
            size_t stride = std::max<size_t>(1, M / 8);
            for (size_t k = 0; k <= M; k += stride) {
                for (size_t j = 0; j < nodes.size(); ++j)
                    csv.row({lm.pd.grid[k], nodes[j], sol.psiphi.psi[k][static_cast<Eigen::Index>(j)]});
            }
        }

        // Galerkin-vs-closed-form transport study
        {
            detail::CsvWriter csv(std::filesystem::path(out_dir) / "oracle_gap.csv");
            csv.header({"n", "t", "l2_gap", "nonneg_ok"});
            for (int n : {16, 32, 64, 128}) {
                VintageOracleReport orep = vintage_oracle_check(*lm.vintage, n);
                for (auto [t, gap] : orep.gap_by_time)
                    csv.row({static_cast<double>(n), t, gap, orep.nonneg_ok ? 1.0 : 0.0});
            }
        }

        // price-positivity monitor along the mean flow
        {
            ValueFunction vf = make_master_value(sol);
            double span = lm.pd.horizon_T - lm.sim.t0;
            double dtm = span / std::max<size_t>(1, 4 * (lm.pd.grid.size() - 1));
            TimeVectorPath flow = mean_flow(lm.pd, vf, lm.sim.t0, lm.sim.ybar0, dtm);
            detail::CsvWriter csv(std::filesystem::path(out_dir) / "price_monitor.csv");
            csv.header({"t", "min_price"});
            const auto& nodes = lm.pd.state_space->nodes;
            size_t stride = std::max<size_t>(1, (flow.grid.size() - 1) / 64);
            for (size_t k = 0; k < flow.grid.size(); k += stride) {
                double t = flow.grid[k];
                double mn = std::numeric_limits<double>::infinity();
                for (double s : nodes) {
                    double mean_here = detail::pl_eval(nodes, flow.values[k], s);
                    mn = std::min(mn, lm.vintage->a_fun(t, s) - lm.vintage->b_fun(t, s) * mean_here);
                }
                csv.row({t, mn});
            }
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

inline int cmd_simulate(const std::string& model_path, const std::string& out_dir,
                        const detail::CliOverrides& ov = {}) {
    try {
        ModelFile mf = detail::load_with_overrides(model_path, ov);
        LoadedModel lm = build_from_model(mf);
        std::filesystem::create_directories(out_dir);

        CoefficientSolution sol;
        try {
            sol = solve_coefficients(lm.pd, master_params(), lm.solver);
        } catch (const SolveError& e) {
            std::cerr << "solver failure: " << e.what() << "\n";
            return 2;
        }
        ValueFunction vf = make_master_value(sol);
        TrajectoryBundle traj = simulate_paths(lm.pd, vf, lm.sim);

        const int n = lm.pd.state_space->dim;
        {
            std::vector<std::string> cols{"t"};
            for (int i = 0; i < n; ++i) cols.push_back("mean_" + std::to_string(i));
            if (lm.sim.store_paths)
                for (int p = 0; p < lm.sim.n_paths; ++p)
                    for (int i = 0; i < n; ++i)
                        cols.push_back("path" + std::to_string(p) + "_" + std::to_string(i));
            detail::CsvWriter csv(std::filesystem::path(out_dir) / "trajectories.csv");
            csv.header(cols);
            std::vector<double> row;
            for (size_t k = 0; k < traj.times.size(); ++k) {
                row.clear();
                row.push_back(traj.times[k]);
                for (int i = 0; i < n; ++i) row.push_back(traj.mean_path[k][i]);
                if (lm.sim.store_paths)
                    for (int p = 0; p < lm.sim.n_paths; ++p)
                        for (int i = 0; i < n; ++i)
                            row.push_back(traj.sample_paths[static_cast<size_t>(p)][k][i]);
                csv.row(row);
            }
        }

        double value = eval_value(vf, lm.sim.t0, lm.sim.x0, {lm.sim.ybar0});
        double diff = std::abs(traj.mc_mean - value);
        bool noiseless = lm.pd.sigma.entries.cwiseAbs().maxCoeff() == 0.0;
        json summary = {{"value_function", value},
                        {"mc_mean_cost", traj.mc_mean},
                        {"mc_se", traj.mc_se},
                        {"abs_diff", diff},
                        {"within_3se", traj.mc_se > 0 ? diff <= 3.0 * traj.mc_se : true},
                        {"noiseless", noiseless},
                        {"n_paths", lm.sim.n_paths},
                        {"dt", lm.sim.dt},
                        {"seed", lm.sim.seed},
                        {"config", detail::config_json(mf, "master")}};
        detail::write_json(std::filesystem::path(out_dir) / "cost_summary.json", summary);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace lqmfg
