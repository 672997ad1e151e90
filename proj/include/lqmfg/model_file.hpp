#pragma once

#include "lqmfg/expr.hpp"
#include "lqmfg/simulate.hpp"
#include "lqmfg/vintage.hpp"

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace lqmfg {

/// Declarative model document. Sections and keys:
///
///   [space]     dim
///   [dynamics]  kind ("generator" | "vintage"), T, A, B, sigma,
///               bound_M, bound_omega,
///               sbar, nu, rho, basis_n, a_expr, b_expr, g_expr
///   [costs]     Q, S, Z, R, eta, zeta, lambda, Q_T, S_T, Z_T, eta_T,
///               zeta_T, lambda_T, q_reg,
///               Q_tscale, S_tscale, Z_tscale, R_tscale, eta_tscale,
///               zeta_tscale, lambda_expr
///   [solver]    grid, tol, max_iter, faithful, strict, eps_box
///   [simulate]  dt, paths, seed, t0, x0, ybar0, x0_expr, store_paths
///
/// Matrices are bracketed rows separated by ';': [1 0; 0 1]. Vectors are a
/// single bracketed row. Expression strings are double-quoted and use the
/// variables t (time) and s (age). Unknown sections or keys are rejected.
struct ModelFile {
    // [space]
    int dim = 0;

    // [dynamics]
    std::string kind = "generator";
    Matrix A, B, sigma;
    double T = 0;
    std::optional<double> bound_M, bound_omega;
    double sbar = 0, nu = 0, rho = 0;
    int basis_n = 0;
    std::string a_expr, b_expr, g_expr;

    // [costs]
    Matrix Q, S, Z, R, Q_T, S_T, Z_T;
    Vector eta, zeta, eta_T, zeta_T;
    double lambda = 0, lambda_T = 0;
    double q_reg = 0;
    std::string Q_tscale, S_tscale, Z_tscale, R_tscale, eta_tscale, zeta_tscale, lambda_expr;

    // [solver]
    int grid = 400;
    double tol = 1e-10;
    int max_iter = 200;
    bool faithful = false;
    bool strict = false;
    double eps_box = 1.0;

    // [simulate]
    double dt = 1e-3;
    int paths = 1;
    std::uint64_t seed = 12345;
    double t0 = 0;
    Vector x0, ybar0;
    std::string x0_expr;
    bool store_paths = false;

    std::string source_path;
};

namespace detail {

struct RawValue {
    std::string text;
    int line = 0;
};

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline double parse_number(const RawValue& v, const std::string& key) {
    try {
        size_t used = 0;
        double d = std::stod(v.text, &used);
        if (trim(v.text.substr(used)).empty()) return d;
    } catch (...) {
    }
    throw ParseError("model file line " + std::to_string(v.line) + ": key '" + key +
                     "' expects a number, got '" + v.text + "'");
}

inline bool parse_bool(const RawValue& v, const std::string& key) {
    std::string t = trim(v.text);
    if (t == "true") return true;
    if (t == "false") return false;
    throw ParseError("model file line " + std::to_string(v.line) + ": key '" + key +
                     "' expects true/false");
}

inline std::string parse_string(const RawValue& v, const std::string& key) {
    std::string t = trim(v.text);
    if (t.size() >= 2 && t.front() == '"' && t.back() == '"') return t.substr(1, t.size() - 2);
    throw ParseError("model file line " + std::to_string(v.line) + ": key '" + key +
                     "' expects a double-quoted string");
}

inline Matrix parse_matrix(const RawValue& v, const std::string& key) {
    std::string t = trim(v.text);
    if (t.size() < 2 || t.front() != '[' || t.back() != ']')
        throw ParseError("model file line " + std::to_string(v.line) + ": key '" + key +
                         "' expects a bracketed matrix like [1 0; 0 1]");
    t = t.substr(1, t.size() - 2);
    std::vector<std::vector<double>> rows;
    std::stringstream rowstream(t);
    std::string rowtext;
    while (std::getline(rowstream, rowtext, ';')) {
        std::vector<double> row;
        std::stringstream cell(rowtext);
        double x;
        while (cell >> x) row.push_back(x);
        if (!cell.eof())
            throw ParseError("model file line " + std::to_string(v.line) + ": bad entry in '" +
                             key + "'");
        if (!row.empty()) rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ParseError("model file line " + std::to_string(v.line) + ": empty matrix for '" +
                         key + "'");
    size_t cols = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != cols)
            throw ParseError("model file line " + std::to_string(v.line) +
                             ": ragged matrix for '" + key + "'");
    Matrix m(rows.size(), cols);
    for (size_t i = 0; i < rows.size(); ++i)
        for (size_t j = 0; j < cols; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

inline Vector parse_vector(const RawValue& v, const std::string& key) {
    Matrix m = parse_matrix(v, key);
    if (m.rows() != 1 && m.cols() != 1)
        throw ParseError("model file line " + std::to_string(v.line) + ": key '" + key +
                         "' expects a vector");
    return (m.rows() == 1) ? Vector(m.transpose().col(0)) : Vector(m.col(0));
}

} // namespace detail

inline ModelFile parse_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file: " + path);

    static const std::map<std::string, std::set<std::string>> schema = {
        {"space", {"dim"}},
        {"dynamics",
         {"kind", "T", "A", "B", "sigma", "bound_M", "bound_omega", "sbar", "nu", "rho",
          "basis_n", "a_expr", "b_expr", "g_expr"}},
        {"costs",
         {"Q", "S", "Z", "R", "eta", "zeta", "lambda", "Q_T", "S_T", "Z_T", "eta_T", "zeta_T",
          "lambda_T", "q_reg", "Q_tscale", "S_tscale", "Z_tscale", "R_tscale", "eta_tscale",
          "zeta_tscale", "lambda_expr"}},
        {"solver", {"grid", "tol", "max_iter", "faithful", "strict", "eps_box"}},
        {"simulate", {"dt", "paths", "seed", "t0", "x0", "ybar0", "x0_expr", "store_paths"}},
    };

    std::map<std::string, std::map<std::string, detail::RawValue>> doc;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ParseError("model file line " + std::to_string(lineno) + ": bad section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            if (!schema.count(section))
                throw ParseError("model file line " + std::to_string(lineno) +
                                 ": unknown section [" + section + "]");
            continue;
        }
        size_t eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw ParseError("model file line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        std::string val = detail::trim(line.substr(eq + 1));
        if (!schema.at(section).count(key))
            throw ParseError("model file line " + std::to_string(lineno) + ": unknown key '" +
                             key + "' in section [" + section + "]");
        if (doc[section].count(key))
            throw ParseError("model file line " + std::to_string(lineno) + ": duplicate key '" +
                             key + "'");
        doc[section][key] = {val, lineno};
    }

    ModelFile mf;
    mf.source_path = path;
    auto get = [&](const std::string& sec, const std::string& key) -> const detail::RawValue* {
        auto s = doc.find(sec);
        if (s == doc.end()) return nullptr;
        auto k = s->second.find(key);
        return (k == s->second.end()) ? nullptr : &k->second;
    };
    auto num = [&](const std::string& sec, const std::string& key, double dflt) {
        const auto* v = get(sec, key);
        return v ? detail::parse_number(*v, key) : dflt;
    };

    if (const auto* v = get("space", "dim")) mf.dim = static_cast<int>(detail::parse_number(*v, "dim"));
    if (const auto* v = get("dynamics", "kind")) mf.kind = detail::parse_string(*v, "kind");
    if (mf.kind != "generator" && mf.kind != "vintage")
        throw ParseError("model file: [dynamics] kind must be \"generator\" or \"vintage\"");
    mf.T = num("dynamics", "T", 0.0);
    if (mf.T <= 0) throw ParseError("model file: [dynamics] T must be set positive");

    if (const auto* v = get("dynamics", "A")) mf.A = detail::parse_matrix(*v, "A");
    if (const auto* v = get("dynamics", "B")) mf.B = detail::parse_matrix(*v, "B");
    if (const auto* v = get("dynamics", "sigma")) mf.sigma = detail::parse_matrix(*v, "sigma");
    if (const auto* v = get("dynamics", "bound_M")) mf.bound_M = detail::parse_number(*v, "bound_M");
    if (const auto* v = get("dynamics", "bound_omega")) mf.bound_omega = detail::parse_number(*v, "bound_omega");
    mf.sbar = num("dynamics", "sbar", 0.0);
    mf.nu = num("dynamics", "nu", 0.0);
    mf.rho = num("dynamics", "rho", 0.0);
    mf.basis_n = static_cast<int>(num("dynamics", "basis_n", 0));
    if (const auto* v = get("dynamics", "a_expr")) mf.a_expr = detail::parse_string(*v, "a_expr");
    if (const auto* v = get("dynamics", "b_expr")) mf.b_expr = detail::parse_string(*v, "b_expr");
    if (const auto* v = get("dynamics", "g_expr")) mf.g_expr = detail::parse_string(*v, "g_expr");

    if (mf.kind == "generator") {
        if (mf.dim <= 0) throw ParseError("model file: [space] dim required for generator models");
        if (mf.A.rows() == 0) mf.A = Matrix::Zero(mf.dim, mf.dim);
        if (mf.A.rows() != mf.dim || mf.A.cols() != mf.dim)
            throw ParseError("model file: A must be dim x dim");
    } else {
        if (mf.basis_n < 2) throw ParseError("model file: vintage models need basis_n >= 2");
        if (mf.sbar <= 0) throw ParseError("model file: vintage models need sbar > 0");
        if (mf.a_expr.empty() || mf.b_expr.empty() || mf.g_expr.empty())
            throw ParseError("model file: vintage models need a_expr, b_expr, g_expr");
    }

    auto opt_matrix = [&](const char* key, Matrix& dst) {
        if (const auto* v = get("costs", key)) dst = detail::parse_matrix(*v, key);
    };
    auto opt_vector = [&](const char* key, Vector& dst) {
        if (const auto* v = get("costs", key)) dst = detail::parse_vector(*v, key);
    };
    opt_matrix("Q", mf.Q);
    opt_matrix("S", mf.S);
    opt_matrix("Z", mf.Z);
    opt_matrix("R", mf.R);
    opt_matrix("Q_T", mf.Q_T);
    opt_matrix("S_T", mf.S_T);
    opt_matrix("Z_T", mf.Z_T);
    opt_vector("eta", mf.eta);
    opt_vector("zeta", mf.zeta);
    opt_vector("eta_T", mf.eta_T);
    opt_vector("zeta_T", mf.zeta_T);
    mf.lambda = num("costs", "lambda", 0.0);
    mf.lambda_T = num("costs", "lambda_T", 0.0);
    mf.q_reg = num("costs", "q_reg", 0.0);
    auto opt_expr = [&](const char* key, std::string& dst) {
        if (const auto* v = get("costs", key)) dst = detail::parse_string(*v, key);
    };
    opt_expr("Q_tscale", mf.Q_tscale);
    opt_expr("S_tscale", mf.S_tscale);
    opt_expr("Z_tscale", mf.Z_tscale);
    opt_expr("R_tscale", mf.R_tscale);
    opt_expr("eta_tscale", mf.eta_tscale);
    opt_expr("zeta_tscale", mf.zeta_tscale);
    opt_expr("lambda_expr", mf.lambda_expr);

    mf.grid = static_cast<int>(num("solver", "grid", mf.grid));
    mf.tol = num("solver", "tol", mf.tol);
    mf.max_iter = static_cast<int>(num("solver", "max_iter", mf.max_iter));
    if (const auto* v = get("solver", "faithful")) mf.faithful = detail::parse_bool(*v, "faithful");
    if (const auto* v = get("solver", "strict")) mf.strict = detail::parse_bool(*v, "strict");
    mf.eps_box = num("solver", "eps_box", mf.eps_box);

    mf.dt = num("simulate", "dt", mf.dt);
    mf.paths = static_cast<int>(num("simulate", "paths", mf.paths));
    mf.seed = static_cast<std::uint64_t>(num("simulate", "seed", static_cast<double>(mf.seed)));
    mf.t0 = num("simulate", "t0", mf.t0);
    if (const auto* v = get("simulate", "x0")) mf.x0 = detail::parse_vector(*v, "x0");
    if (const auto* v = get("simulate", "ybar0")) mf.ybar0 = detail::parse_vector(*v, "ybar0");
    if (const auto* v = get("simulate", "x0_expr")) mf.x0_expr = detail::parse_string(*v, "x0_expr");
    if (const auto* v = get("simulate", "store_paths")) mf.store_paths = detail::parse_bool(*v, "store_paths");
    return mf;
}

// ---------------------------------------------------------------------------
// Instantiation
// ---------------------------------------------------------------------------

struct LoadedModel {
    ProblemData pd;
    std::optional<VintageModel> vintage;
    SolverConfig solver;
    SimConfig sim;
    ModelFile raw;
};

namespace detail {

inline std::function<double(double)> tscale_fn(const std::string& text) {
    if (text.empty()) return [](double) { return 1.0; };
    Expr e = Expr::parse(text, {"t"});
    return [e](double t) { return e.eval({t}); };
}

} // namespace detail

/// Build the runnable instance from a parsed model file.
inline LoadedModel build_from_model(const ModelFile& mf) {
    LoadedModel lm;
    lm.raw = mf;
    lm.solver.picard_tol = mf.tol;
    lm.solver.max_picard = mf.max_iter;
    lm.solver.faithful = mf.faithful;
    lm.solver.strict = mf.strict;
    lm.solver.eps_box = mf.eps_box;

    if (mf.kind == "vintage") {
        VintageModel vm;
        vm.sbar = mf.sbar;
        vm.nu = mf.nu;
        vm.rho = mf.rho;
        vm.horizon_T = mf.T;
        Expr ea = Expr::parse(mf.a_expr, {"t", "s"});
        Expr eb = Expr::parse(mf.b_expr, {"t", "s"});
        Expr eg = Expr::parse(mf.g_expr, {"s"});
        vm.a_fun = [ea](double t, double s) { return ea.eval({t, s}); };
        vm.b_fun = [eb](double t, double s) { return eb.eval({t, s}); };
        vm.g_fun = [eg](double s) { return eg.eval({s}); };
        lm.pd = vintage_build_problem(vm, mf.basis_n, mf.grid, 0.0, mf.q_reg);
        lm.vintage = std::move(vm);
    } else {
        ConstantProblemSpec spec;
        spec.A = mf.A;
        spec.B = mf.B;
        spec.sigma = mf.sigma;
        spec.Q = mf.Q;
        spec.S = mf.S;
        spec.Z = mf.Z;
        spec.R = mf.R;
        spec.eta = mf.eta;
        spec.zeta = mf.zeta;
        spec.lambda = mf.lambda;
        spec.Q_T = mf.Q_T;
        spec.S_T = mf.S_T;
        spec.Z_T = mf.Z_T;
        spec.eta_T = mf.eta_T;
        spec.zeta_T = mf.zeta_T;
        spec.lambda_T = mf.lambda_T;
        spec.T = mf.T;
        spec.grid_cells = mf.grid;
        spec.bound_M = mf.bound_M;
        spec.bound_omega = mf.bound_omega;
        lm.pd = make_constant_problem(std::move(spec));

        // optional scalar time profiles on the constant blocks
        auto scale_op = [&](TimeOperatorPath& p, const std::string& expr) {
            if (expr.empty()) return;
            auto f = detail::tscale_fn(expr);
            for (size_t i = 0; i < p.grid.size(); ++i) p.values[i] *= f(p.grid[i]);
        };
        scale_op(lm.pd.Q, mf.Q_tscale);
        scale_op(lm.pd.S, mf.S_tscale);
        scale_op(lm.pd.Z, mf.Z_tscale);
        scale_op(lm.pd.R, mf.R_tscale);
        if (!mf.eta_tscale.empty()) {
            auto f = detail::tscale_fn(mf.eta_tscale);
            for (size_t i = 0; i < lm.pd.grid.size(); ++i) lm.pd.eta.values[i] *= f(lm.pd.grid[i]);
        }
        if (!mf.zeta_tscale.empty()) {
            auto f = detail::tscale_fn(mf.zeta_tscale);
            for (size_t i = 0; i < lm.pd.grid.size(); ++i) lm.pd.zeta.values[i] *= f(lm.pd.grid[i]);
        }
        if (!mf.lambda_expr.empty()) {
            auto f = detail::tscale_fn(mf.lambda_expr);
            for (size_t i = 0; i < lm.pd.grid.size(); ++i) lm.pd.lambda_run.values[i] = f(lm.pd.grid[i]);
        }
    }

    lm.sim.dt = mf.dt;
    lm.sim.n_paths = mf.paths;
    lm.sim.seed = mf.seed;
    lm.sim.t0 = mf.t0;
    const int hdim = lm.pd.state_space->dim;
    if (mf.x0.size()) {
        if (mf.x0.size() != hdim) throw ParseError("model file: x0 has wrong dimension");
        lm.sim.x0 = mf.x0;
    } else if (!mf.x0_expr.empty()) {
        if (mf.kind != "vintage") throw ParseError("model file: x0_expr is for vintage models");
        Expr ex = Expr::parse(mf.x0_expr, {"s"});
        lm.sim.x0 = detail::project_function(*lm.pd.state_space,
                                             [ex](double s) { return ex.eval({s}); });
    } else {
        lm.sim.x0 = Vector::Zero(hdim);
    }
    lm.sim.ybar0 = mf.ybar0.size() ? mf.ybar0 : lm.sim.x0;
    if (lm.sim.ybar0.size() != hdim) throw ParseError("model file: ybar0 has wrong dimension");
    lm.sim.store_paths = mf.store_paths;
    return lm;
}

} // namespace lqmfg
