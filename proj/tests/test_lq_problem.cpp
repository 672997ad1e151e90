#include "lqmfg/lq_problem.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <random>

using namespace lqmfg;
using Catch::Approx;

namespace {

ProblemData zero_cost_problem(int n = 2) {
    ConstantProblemSpec s;
    s.A = Matrix::Zero(n, n);
    s.T = 1.0;
    s.grid_cells = 8;
    s.bound_M = 1.0;
    s.bound_omega = 0.0;
    return make_constant_problem(std::move(s));
}

} // namespace

TEST_CASE("validate") {
    SECTION("all-zero costs with R = I are valid; nash coercivity fails at 0") {
        ProblemData pd = zero_cost_problem();
        ValidationReport rep = validate(pd, true);
        REQUIRE(rep.ok());
        REQUIRE(rep.delta_max == 0.0);
        bool warned = false;
        for (const auto& it : rep.items)
            if (it.code == "nash-coercivity" && it.severity == Severity::warning) warned = true;
        REQUIRE(warned);
    }
    SECTION("identity costs give delta_max = 1") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.Q = Matrix::Identity(2, 2);
        s.S = Matrix::Identity(2, 2);
        s.T = 1.0;
        s.grid_cells = 8;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ValidationReport rep = validate(make_constant_problem(std::move(s)), true);
        REQUIRE(rep.ok());
        REQUIRE(rep.delta_max == Approx(1.0));
    }
    SECTION("negative eigenvalue in Q_T is fatal") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        Matrix qt = Matrix::Identity(2, 2);
        qt(1, 1) = -0.1;
        s.Q_T = qt;
        s.T = 1.0;
        s.grid_cells = 8;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ValidationReport rep = validate(make_constant_problem(std::move(s)));
        REQUIRE_FALSE(rep.ok());
    }
    SECTION("non-coercive R is fatal") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        Matrix r = Matrix::Identity(2, 2);
        r(1, 1) = 0.0;
        s.R = r;
        s.T = 1.0;
        s.grid_cells = 8;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ValidationReport rep = validate(make_constant_problem(std::move(s)));
        REQUIRE_FALSE(rep.ok());
        REQUIRE(rep.lambda_R == Approx(0.0).margin(1e-14));
    }
    SECTION("validate is idempotent") {
        ProblemData pd = zero_cost_problem();
        ValidationReport a = validate(pd, true);
        ValidationReport b = validate(pd, true);
        REQUIRE(a.ok() == b.ok());
        REQUIRE(a.items.size() == b.items.size());
        REQUIRE(a.delta_max == b.delta_max);
    }
}

TEST_CASE("derive_operators") {
    SECTION("sigma = 0 gives calA = 0") {
        ProblemData pd = zero_cost_problem();
        DerivedOperators der = derive_operators(pd);
        REQUIRE(der.calA.entries.cwiseAbs().maxCoeff() == 0.0);
    }
    SECTION("B = I, R = 2I gives calB = I/2") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        s.R = 2.0 * Matrix::Identity(2, 2);
        s.T = 1.0;
        s.grid_cells = 4;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        DerivedOperators der = derive_operators(make_constant_problem(std::move(s)));
        REQUIRE((der.calB.values[0] - 0.5 * Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-14);
    }
    SECTION("rank-one B gives the outer product") {
        ConstantProblemSpec s;
        s.A = Matrix::Zero(2, 2);
        Matrix b(2, 1);
        b << 1, 0;
        s.B = b;
        s.R = Matrix::Identity(1, 1);
        s.T = 1.0;
        s.grid_cells = 4;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        DerivedOperators der = derive_operators(pd);
        Matrix expect(2, 2);
        expect << 1, 0, 0, 0;
        REQUIRE((der.calB.values[0] - expect).cwiseAbs().maxCoeff() < 1e-14);
        REQUIRE(der.calB_coercivity == Approx(0.0).margin(1e-12));
        // rank-deficient B downgrades coercivity to a warning, not an error
        ValidationReport rep = validate(pd);
        REQUIRE(rep.ok());
        bool warned = false;
        for (const auto& it : rep.items)
            if (it.code == "calB-coercive") warned = true;
        REQUIRE(warned);
    }
    SECTION("calB is PSD whenever R is positive definite") {
        std::mt19937_64 rng(17);
        std::normal_distribution<double> g;
        ConstantProblemSpec s;
        s.A = Matrix::Zero(3, 3);
        Matrix b(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) b(i, j) = g(rng);
        s.B = b;
        Matrix r(3, 3);
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r(i, j) = g(rng);
        s.R = r * r.transpose() + 0.5 * Matrix::Identity(3, 3);
        s.T = 1.0;
        s.grid_cells = 4;
        s.bound_M = 1.0;
        s.bound_omega = 0.0;
        ProblemData pd = make_constant_problem(std::move(s));
        DerivedOperators der = derive_operators(pd);
        REQUIRE(der.calB_coercivity >= -1e-12);
        for (int rep = 0; rep < 8; ++rep) {
            Vector x(3);
            for (int i = 0; i < 3; ++i) x[i] = g(rng);
            REQUIRE(x.dot(der.calB.values[0] * x) >= -1e-12);
        }
    }
}

TEST_CASE("parameter vectors") {
    SECTION("nash_params formulas") {
        ParamVector p2 = nash_params(2);
        REQUIRE(p2.a == Approx(2.0));
        REQUIRE(p2.b == Approx(0.0));
        REQUIRE(p2.c == Approx(1.0));
        ParamVector p3 = nash_params(3);
        REQUIRE(p3.a == Approx(1.0));
        REQUIRE(p3.b == Approx(0.5));
        REQUIRE(p3.c == Approx(0.5));
        REQUIRE_THROWS_AS(nash_params(1), ValidationError);
    }
    SECTION("master_params and the large-N limit") {
        ParamVector m = master_params();
        REQUIRE(m.a == 0.0);
        REQUIRE(m.b == 1.0);
        REQUIRE(m.c == 0.0);
        ParamVector big = nash_params(1000001); // (N - 1) = 10^6
        REQUIRE(std::abs(big.a - m.a) <= 2e-6);
        REQUIRE(std::abs(big.b - m.b) <= 2e-6);
        REQUIRE(std::abs(big.c - m.c) <= 2e-6);
        // componentwise difference is (2, -1, 1)/(N-1)
        int N = 11;
        ParamVector pn = nash_params(N);
        REQUIRE(pn.a - m.a == Approx(2.0 / (N - 1)));
        REQUIRE(pn.b - m.b == Approx(-1.0 / (N - 1)));
        REQUIRE(pn.c - m.c == Approx(1.0 / (N - 1)));
    }
    SECTION("monotone approach for N >= 3") {
        ParamVector m = master_params();
        double prev_a = 2, prev_b = 2, prev_c = 2;
        for (int N = 3; N <= 12; ++N) {
            ParamVector p = nash_params(N);
            REQUIRE(std::abs(p.a - m.a) < prev_a);
            REQUIRE(std::abs(p.b - m.b) < prev_b);
            REQUIRE(std::abs(p.c - m.c) < prev_c);
            prev_a = std::abs(p.a - m.a);
            prev_b = std::abs(p.b - m.b);
            prev_c = std::abs(p.c - m.c);
        }
    }
    SECTION("eps admissibility box") {
        REQUIRE(in_eps_box(master_params(), 0.1));
        REQUIRE(in_eps_box(nash_params(100), 0.1));
        REQUIRE_FALSE(in_eps_box(nash_params(2), 0.5));
    }
}
