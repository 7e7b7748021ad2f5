#include <catch2/catch_amalgamated.hpp>

#include "carbontrace/simplex.hpp"

using namespace carbontrace;
using Catch::Approx;

namespace {

lp::Problem make(int m, int n) {
    lp::Problem p;
    p.A = Eigen::MatrixXd::Zero(m, n);
    p.b = Eigen::VectorXd::Zero(m);
    p.c = Eigen::VectorXd::Zero(n);
    p.lower = Eigen::VectorXd::Constant(n, 0.0);
    p.upper = Eigen::VectorXd::Constant(n, lp::kInf);
    return p;
}

}  // namespace

TEST_CASE("simple equality split") {
    // min 2x + 3y  s.t.  x + y = 10, 0 <= x,y <= 8
    lp::Problem p = make(1, 2);
    p.A << 1, 1;
    p.b << 10;
    p.c << 2, 3;
    p.upper << 8, 8;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.x[0] == Approx(8.0));
    CHECK(s.x[1] == Approx(2.0));
    CHECK(s.objective == Approx(22.0));
}

TEST_CASE("free variables and both bound directions") {
    // min y - x  s.t.  x + y - z = 4, x in [0,5], y in [-3,3], z free.
    lp::Problem p = make(1, 3);
    p.A << 1, 1, -1;
    p.b << 4;
    p.c << -1, 1, 0;
    p.lower << 0, -3, -lp::kInf;
    p.upper << 5, 3, lp::kInf;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.x[0] == Approx(5.0));
    CHECK(s.x[1] == Approx(-3.0));
    CHECK(s.x[2] == Approx(-2.0));  // balances the row
    CHECK(s.objective == Approx(-8.0));
}

TEST_CASE("conflicting bounds are infeasible with a named row") {
    lp::Problem p = make(1, 1);
    p.A << 1;
    p.b << 3;
    p.upper << 1;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Infeasible);
    REQUIRE_FALSE(s.infeasible_rows.empty());
    CHECK(s.infeasible_rows[0] == 0);
}

TEST_CASE("unbounded rays are reported") {
    // min -x with x free and a vacuous row tying x to a free helper.
    lp::Problem p = make(1, 2);
    p.A << 1, -1;
    p.b << 0;
    p.c << -1, 0;
    p.lower << 0, -lp::kInf;
    p.upper << lp::kInf, lp::kInf;
    lp::Solution s = lp::solve(p);
    CHECK(s.status == lp::Status::Unbounded);
}

TEST_CASE("degenerate ties terminate under the index rule") {
    // Beale's classic cycling instance (slacks included); naive pivoting
    // loops forever, Bland's rule must reach -1/20.
    lp::Problem p = make(3, 7);
    p.A << 0.25, -60, -1.0 / 25.0, 9, 1, 0, 0,
           0.5,  -90, -1.0 / 50.0, 3, 0, 1, 0,
           0,      0,           1, 0, 0, 0, 1;
    p.b << 0, 0, 1;
    p.c << -0.75, 150, -0.02, 6, 0, 0, 0;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.objective == Approx(-0.05).margin(1e-9));
}

TEST_CASE("alternate optima are detected") {
    // Two equally priced routes to satisfy the row.
    lp::Problem p = make(1, 2);
    p.A << 1, 1;
    p.b << 4;
    p.c << 7, 7;
    p.upper << 10, 10;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    CHECK(s.objective == Approx(28.0));
    CHECK(s.alternate_optima);

    p.c << 7, 8;  // now unique
    lp::Solution u = lp::solve(p);
    CHECK_FALSE(u.alternate_optima);
    CHECK(u.x[0] == Approx(4.0));
}

TEST_CASE("equality residuals are polished to machine noise") {
    // A chain of rows whose solution has mixed magnitudes.
    lp::Problem p = make(3, 5);
    p.A << 3, 1, 0, 0, 1,
           0, 2, 5, 0, 0,
           1, 0, 0, 4, -2;
    p.b << 7, 11, 5;
    p.c << 1, 2, 3, 4, 5;
    p.upper << 100, 100, 100, 100, 100;
    lp::Solution s = lp::solve(p);
    REQUIRE(s.status == lp::Status::Optimal);
    Eigen::VectorXd residual = p.b - p.A * s.x;
    CHECK(residual.lpNorm<Eigen::Infinity>() < 1e-12);
}
