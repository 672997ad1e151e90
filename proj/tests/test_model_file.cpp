#include "lqmfg/expr.hpp"
#include "lqmfg/model_file.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

using namespace lqmfg;
using Catch::Approx;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    auto dir = std::filesystem::temp_directory_path() / "lqmfg_model_tests";
    std::filesystem::create_directories(dir);
    auto path = dir / name;
    std::ofstream out(path);
    out << content;
    return path.string();
}

} // namespace

TEST_CASE("expression evaluator") {
    SECTION("precedence and parentheses") {
        Expr e = Expr::parse("2 + 3 * 4", {});
        REQUIRE(e.eval({}) == Approx(14.0));
        REQUIRE(Expr::parse("(2 + 3) * 4", {}).eval({}) == Approx(20.0));
        REQUIRE(Expr::parse("1 - 2 - 3", {}).eval({}) == Approx(-4.0));
        REQUIRE(Expr::parse("8 / 4 / 2", {}).eval({}) == Approx(1.0));
    }
    SECTION("unary minus and functions") {
        REQUIRE(Expr::parse("-3 + 5", {}).eval({}) == Approx(2.0));
        REQUIRE(Expr::parse("exp(0)", {}).eval({}) == Approx(1.0));
        REQUIRE(Expr::parse("sin(0) + cos(0)", {}).eval({}) == Approx(1.0));
        REQUIRE(Expr::parse("exp(-1)", {}).eval({}) == Approx(std::exp(-1.0)));
    }
    SECTION("variables") {
        Expr e = Expr::parse("1 + 0.1 * exp(-s) * cos(t)", {"t", "s"});
        REQUIRE(e.eval({0.0, 0.0}) == Approx(1.1));
        REQUIRE(e.eval({0.0, 1.0}) == Approx(1.0 + 0.1 * std::exp(-1.0)));
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(Expr::parse("foo(1)", {}), ParseError);
        REQUIRE_THROWS_AS(Expr::parse("1 + bar", {}), ParseError);
        REQUIRE_THROWS_AS(Expr::parse("(1 + 2", {}), ParseError);
        REQUIRE_THROWS_AS(Expr::parse("1 2", {}), ParseError);
    }
}

TEST_CASE("model file parsing") {
    SECTION("generator model round trip") {
        std::string path = write_temp("gen.model", R"(
# comment line
[space]
dim = 2

[dynamics]
kind = "generator"
T = 2.0
A = [0 1; -1 0]
sigma = [0.1 0; 0 0.1]
bound_M = 1.0
bound_omega = 0.0

[costs]
Q = [1 0; 0 1]
S = [0.5 0; 0 0.5]
eta = [0.1 -0.2]
lambda_T = 0.3

[solver]
grid = 100
tol = 1e-9
faithful = true

[simulate]
dt = 0.01
paths = 16
seed = 77
x0 = [1 0]
)");
        ModelFile mf = parse_model_file(path);
        REQUIRE(mf.dim == 2);
        REQUIRE(mf.T == Approx(2.0));
        REQUIRE(mf.A(0, 1) == Approx(1.0));
        REQUIRE(mf.eta[1] == Approx(-0.2));
        REQUIRE(mf.lambda_T == Approx(0.3));
        REQUIRE(mf.grid == 100);
        REQUIRE(mf.tol == Approx(1e-9));
        REQUIRE(mf.faithful);
        REQUIRE(mf.seed == 77);

        LoadedModel lm = build_from_model(mf);
        REQUIRE(lm.pd.state_space->dim == 2);
        REQUIRE(lm.pd.grid.size() == 101);
        REQUIRE(lm.solver.faithful);
        REQUIRE(lm.sim.n_paths == 16);
        REQUIRE(lm.sim.ybar0 == lm.sim.x0);
    }
    SECTION("unknown keys and sections are rejected") {
        std::string bad1 = write_temp("bad1.model", "[space]\ndim = 1\nfoo = 2\n");
        REQUIRE_THROWS_AS(parse_model_file(bad1), ParseError);
        std::string bad2 = write_temp("bad2.model", "[nonsense]\nx = 1\n");
        REQUIRE_THROWS_AS(parse_model_file(bad2), ParseError);
        std::string bad3 = write_temp("bad3.model",
                                      "[space]\ndim = 1\ndim = 2\n");
        REQUIRE_THROWS_AS(parse_model_file(bad3), ParseError);
    }
    SECTION("missing required fields") {
        std::string no_t = write_temp("no_t.model", "[space]\ndim = 1\n");
        REQUIRE_THROWS_AS(parse_model_file(no_t), ParseError);
        std::string no_exprs = write_temp(
            "no_exprs.model", "[dynamics]\nkind = \"vintage\"\nT = 1.0\nsbar = 2.0\nbasis_n = 9\n");
        REQUIRE_THROWS_AS(parse_model_file(no_exprs), ParseError);
    }
    SECTION("ragged matrices are rejected") {
        std::string bad = write_temp("ragged.model",
                                     "[space]\ndim = 2\n[dynamics]\nT = 1.0\nA = [1 2; 3]\n");
        REQUIRE_THROWS_AS(parse_model_file(bad), ParseError);
    }
    SECTION("time-scale expressions are applied to the constant blocks") {
        std::string path = write_temp("tscale.model", R"(
[space]
dim = 1
[dynamics]
T = 1.0
A = [0]
bound_M = 1.0
bound_omega = 0.0
[costs]
Q = [1]
Q_tscale = "1 + t"
)");
        LoadedModel lm = build_from_model(parse_model_file(path));
        REQUIRE(lm.pd.Q.values.front()(0, 0) == Approx(1.0));
        REQUIRE(lm.pd.Q.values.back()(0, 0) == Approx(2.0));
    }
    SECTION("vintage model with expressions and x0_expr") {
        std::string path = write_temp("vint.model", R"MODEL(
[dynamics]
kind = "vintage"
T = 1.0
sbar = 2.0
nu = 0.5
rho = 0.1
basis_n = 17
a_expr = "1"
b_expr = "0.2 + 0.05*s"
g_expr = "1 - s/2"
[solver]
grid = 16
[simulate]
x0_expr = "s*s*exp(-s)"
)MODEL");
        LoadedModel lm = build_from_model(parse_model_file(path));
        REQUIRE(lm.vintage.has_value());
        REQUIRE(lm.pd.state_space->dim == 17);
        REQUIRE(lm.pd.state_space->basis_label == "hat-functions");
        // projected x0 is close to the function at the nodes
        const auto& nodes = lm.pd.state_space->nodes;
        for (size_t j = 0; j < nodes.size(); ++j) {
            double s = nodes[j];
            REQUIRE(lm.sim.x0[static_cast<Eigen::Index>(j)] ==
                    Approx(s * s * std::exp(-s)).margin(5e-3));
        }
    }
}
