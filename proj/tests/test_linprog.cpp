// Two-phase simplex tests on small LPs with known optima.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "eqr/linprog.hpp"
#include "eqr/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using eqr::linprog::LpStatus;

TEST_CASE("textbook inequality LP") {
  // min -3x - 5y  s.t.  x <= 4, 2y <= 12, 3x + 2y <= 18, x,y >= 0.
  // Optimum at (2, 6) with value -36.
  VectorXd c(2);
  c << -3, -5;
  MatrixXd aub(3, 2);
  aub << 1, 0, 0, 2, 3, 2;
  VectorXd bub(3);
  bub << 4, 12, 18;
  const auto sol = eqr::linprog::solve(c, MatrixXd(0, 2), VectorXd(0), aub,
                                       bub);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-36.0).epsilon(1e-10));
  CHECK(sol.x(0) == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(sol.x(1) == doctest::Approx(6.0).epsilon(1e-10));
}

TEST_CASE("equality rows force a transportation-style optimum") {
  // min x1 + 2 x2 + 3 x3  s.t.  x1 + x2 + x3 = 1, x2 + x3 = 0.4.
  // Put all remaining mass on the cheapest columns: x = (0.6, 0.4, 0).
  VectorXd c(3);
  c << 1, 2, 3;
  MatrixXd aeq(2, 3);
  aeq << 1, 1, 1, 0, 1, 1;
  VectorXd beq(2);
  beq << 1, 0.4;
  const auto sol = eqr::linprog::solve(c, aeq, beq, MatrixXd(0, 3),
                                       VectorXd(0));
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.4).epsilon(1e-10));
  CHECK(sol.x(0) == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(sol.x(1) == doctest::Approx(0.4).epsilon(1e-10));
  CHECK(sol.x(2) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("infeasible and unbounded problems are classified") {
  VectorXd c(1);
  c << 1;
  MatrixXd aeq(1, 1);
  aeq << 1;
  VectorXd beq(1);
  beq << -2;  // x = -2 conflicts with x >= 0
  CHECK(eqr::linprog::solve(c, aeq, beq, MatrixXd(0, 1), VectorXd(0))
            .status == LpStatus::Infeasible);

  VectorXd cneg(1);
  cneg << -1;  // min -x with only x >= 0: unbounded below
  MatrixXd aub(1, 1);
  aub << -1;
  VectorXd bub(1);
  bub << 0;
  CHECK(eqr::linprog::solve(cneg, MatrixXd(0, 1), VectorXd(0), aub, bub)
            .status == LpStatus::Unbounded);
}

TEST_CASE("degenerate cycling guard terminates on the Beale example") {
  // Beale's classic cycling LP for naive most-negative pricing.
  VectorXd c(4);
  c << -0.75, 150, -0.02, 6;
  MatrixXd aub(3, 4);
  aub << 0.25, -60, -0.04, 9, 0.5, -90, -0.02, 3, 0, 0, 1, 0;
  VectorXd bub(3);
  bub << 0, 0, 1;
  const auto sol = eqr::linprog::solve(c, MatrixXd(0, 4), VectorXd(0), aub,
                                       bub);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(-0.05).epsilon(1e-9));
}

TEST_CASE("basic solutions have at most m nonzero structural variables") {
  // Many-column problem: pick the cheapest convex combination hitting a
  // target mean. The simplex should return a vertex (<= 2 nonzeros).
  eqr::Xoshiro256pp rng(5);
  const int cols = 200;
  VectorXd c(cols);
  MatrixXd aeq(2, cols);
  for (int j = 0; j < cols; ++j) {
    const double p = rng.uniform(-1.0, 1.0);
    aeq(0, j) = 1.0;
    aeq(1, j) = p;
    c(j) = p * p;  // convex cost favors points near zero
  }
  VectorXd beq(2);
  beq << 1.0, 0.25;
  const auto sol = eqr::linprog::solve(c, aeq, beq, MatrixXd(0, cols),
                                       VectorXd(0));
  REQUIRE(sol.status == LpStatus::Optimal);
  int nonzeros = 0;
  for (int j = 0; j < cols; ++j)
    if (std::abs(sol.x(j)) > 1e-9) ++nonzeros;
  CHECK(nonzeros <= 2);
  CHECK((aeq * sol.x - beq).cwiseAbs().maxCoeff() < 1e-9);
  // Objective must not beat the convexity lower bound (mean^2).
  CHECK(sol.objective >= 0.25 * 0.25 - 1e-9);
}

TEST_CASE("mixed equality and inequality rows") {
  // min x + y  s.t.  x + y >= 1 encoded as -x - y <= -1, x - y = 0.2.
  VectorXd c(2);
  c << 1, 1;
  MatrixXd aeq(1, 2);
  aeq << 1, -1;
  VectorXd beq(1);
  beq << 0.2;
  MatrixXd aub(1, 2);
  aub << -1, -1;
  VectorXd bub(1);
  bub << -1;
  const auto sol = eqr::linprog::solve(c, aeq, beq, aub, bub);
  REQUIRE(sol.status == LpStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(sol.x(0) == doctest::Approx(0.6).epsilon(1e-10));
  CHECK(sol.x(1) == doctest::Approx(0.4).epsilon(1e-10));
}
