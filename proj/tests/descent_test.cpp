#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <Eigen/Dense>

#include "atinf/descent.hpp"
#include "oracles.hpp"

using namespace atinf;
using oracle::vec;

namespace {

bool monotone(const Trajectory& t) {
  for (std::size_t k = 1; k < t.values.size(); ++k)
    if (t.values[k] > t.values[k - 1] + 1e-12) return false;
  return true;
}

MinimaxProblem example33() { return oracle::minimax({"1/(abs(x1)+1)", "0"}, {"x1"}); }

}  // namespace

TEST_CASE("strongly convex square converges") {
  const Trajectory t = minimize(oracle::minimax({"x1^2"}), vec({3}));
  CHECK(t.status == Trajectory::Status::Converged);
  CHECK(std::abs(t.final_point[0]) < 1e-4);
  CHECK(t.final_value < 1e-8);
  CHECK(monotone(t));
}

TEST_CASE("exponential escapes toward minus infinity") {
  const Trajectory t = minimize(oracle::minimax({"exp(x1)"}), vec({0}));
  REQUIRE(t.status == Trajectory::Status::Escaped);
  CHECK(t.escape_direction[0] == doctest::Approx(-1.0));
  CHECK(std::abs(t.limit_estimate) < 1e-6);
  CHECK(monotone(t));
}

TEST_CASE("golden example escapes inside the feasible set") {
  const MinimaxProblem p = example33();
  const Trajectory t = minimize(p, vec({0}));
  REQUIRE(t.status == Trajectory::Status::Escaped);
  CHECK(t.escape_direction[0] == doctest::Approx(-1.0));
  CHECK(std::abs(t.limit_estimate) < 1e-6);
  for (const Vec& x : t.iterates) CHECK(p.feasible(x));
  CHECK(monotone(t));
}

TEST_CASE("escape evidence follows the closed-form subgradients") {
  const SamplingPlan plan = SamplingPlan::defaults(1);
  {
    const Trajectory t = minimize(oracle::minimax({"exp(x1)"}), vec({0}));
    const EscapeEvidence e = escape_evidence(t, plan);
    REQUIRE_FALSE(e.witnesses.empty());
    for (const EkelandWitness& w : e.witnesses)
      CHECK(w.u_norm == doctest::Approx(std::exp(w.x1[0])).epsilon(1e-9).scale(1e-300));
    CHECK(e.smallest_u_norm <= 1e-3);
  }
  {
    const Trajectory t = minimize(example33(), vec({0}));
    const EscapeEvidence e = escape_evidence(t, plan);
    REQUIRE_FALSE(e.witnesses.empty());
    for (const EkelandWitness& w : e.witnesses) {
      const double closed = 1.0 / std::pow(std::abs(w.x1[0]) + 1.0, 2);
      CHECK(w.u_norm == doctest::Approx(closed).epsilon(1e-6).scale(1e-300));
    }
    CHECK(e.smallest_u_norm <= 1e-3);
    CHECK(e.tail.size() >= 10);
    for (std::size_t k = 1; k < e.tail.size(); ++k) CHECK(e.tail[k].norm() >= e.tail[k - 1].norm());
  }
}

TEST_CASE("escape evidence needs an escaped trajectory") {
  const Trajectory t = minimize(oracle::minimax({"x1^2"}), vec({3}));
  CHECK_THROWS_WITH_AS(escape_evidence(t, SamplingPlan::defaults(1)), "trajectory not escaped",
                       PreconditionError);
}

TEST_CASE("escape requires the full tail conditions") {
  // A linear objective is unbounded below.
  const Trajectory lin = minimize(oracle::minimax({"x1"}), vec({0}));
  CHECK(lin.status == Trajectory::Status::UnboundedBelow);
  CHECK(lin.ekeland_witnesses.empty());

  // -sqrt(1 + x^2) goes to minus infinity too slowly to look flat.
  const Trajectory slow = minimize(oracle::minimax({"-sqrt(1 + x1^2)"}), vec({1}), {.budget = 200});
  CHECK(slow.status != Trajectory::Status::Escaped);
  CHECK(slow.status != Trajectory::Status::Converged);

  for (const auto& f : {"exp(x1)", "1/(abs(x1)+1)", "exp(x1 + x2) + 1/(1 + x2^2)"}) {
    const int dim = std::string(f).find("x2") == std::string::npos ? 1 : 2;
    const Trajectory t = minimize(oracle::minimax({f}, {}, dim), Vec::Zero(dim));
    if (t.status != Trajectory::Status::Escaped) continue;
    REQUIRE(t.iterates.size() >= 10);
    const std::size_t n = t.iterates.size();
    for (std::size_t k = n - 10; k < n; ++k) CHECK(t.iterates[k].norm() >= 1e3);
    bool small = false;
    for (const EkelandWitness& w : t.ekeland_witnesses) small = small || w.u_norm <= 1e-3;
    CHECK(small);
  }
}

TEST_CASE("Ekeland witness examples") {
  {
    const MinimaxProblem p = oracle::minimax({"x1^2"});
    const EkelandWitness w = ekeland_witness(p, vec({0.1}), 0.01);
    CHECK(w.value_decrease);
    CHECK(w.within_lambda);
    CHECK(w.perturbed_min);
    CHECK(w.samples_checked == 200);
    CHECK(w.lambda == doctest::Approx(0.1));
    CHECK(oracle::ekeland_conclusions_hold(p, vec({0.1}), w.x1, 0.01, 5));
  }
  {
    const MinimaxProblem p = oracle::minimax({"exp(x1)"});
    const double eps = std::exp(-5.0);
    const EkelandWitness w = ekeland_witness(p, vec({-5}), eps);
    CHECK(w.x1[0] <= -5.0);
    CHECK(w.u_norm == doctest::Approx(std::exp(w.x1[0])));
    CHECK(w.u_norm <= std::sqrt(eps));
  }
  {
    // With a generous eps the start itself is admissible.
    const MinimaxProblem p = oracle::minimax({"x1^2"});
    const EkelandWitness w = ekeland_witness(p, vec({2}), 5.0);
    CHECK(w.value_decrease);
    CHECK(w.within_lambda);
    CHECK(oracle::ekeland_conclusions_hold(p, vec({2}), w.x1, 5.0, 6));
  }
}

TEST_CASE("Ekeland witnesses pass independent checks") {
  int index = 0;
  for (const auto& in : oracle::ekeland_instances()) {
    const MinimaxProblem p = oracle::minimax(in.objectives, {}, in.dim);
    const double eps = p.phi_at(in.x0) - in.infimum + in.slack;
    CAPTURE(index);
    try {
      const EkelandWitness w = ekeland_witness(p, in.x0, eps, {.seed = std::uint64_t(index)});
      CHECK(w.value_decrease);
      CHECK(w.within_lambda);
      CHECK(w.perturbed_min);
      CHECK(w.u_norm <= w.lambda + 1e-8);
      CHECK(oracle::ekeland_conclusions_hold(p, in.x0, w.x1, eps, 100 + index));
    } catch (const EkelandError& e) {
      FAIL_CHECK("witness not certified: " << e.what());
    }
    ++index;
  }
}

TEST_CASE("strongly convex problems reach the analytic minimizer") {
  std::mt19937_64 rng(51);
  std::uniform_int_distribution<int> coef(-3, 3), diag(2, 6);
  for (int i = 0; i < 10; ++i) {
    // phi = 1/2 x'Qx - c'x with Q diagonally dominant, so x* = Q^{-1} c.
    Eigen::Matrix2d Q;
    const double off = coef(rng) / 2.0;
    Q << diag(rng), off, off, diag(rng);
    const Eigen::Vector2d c(coef(rng), coef(rng));
    const std::string text = "0.5*(" + std::to_string(Q(0, 0)) + ")*x1^2 + (" +
                             std::to_string(off) + ")*x1*x2 + 0.5*(" + std::to_string(Q(1, 1)) +
                             ")*x2^2 - (" + std::to_string(c[0]) + ")*x1 - (" +
                             std::to_string(c[1]) + ")*x2";
    const Trajectory t = minimize(oracle::minimax({text}, {}, 2), vec({5, -7}));
    CHECK(t.status == Trajectory::Status::Converged);
    CHECK((t.final_point - Vec(Q.ldlt().solve(c))).norm() < 1e-4);
    CHECK(monotone(t));
  }
  const Trajectory soft =
      minimize(oracle::minimax({"log(exp(x1 - 1) + exp(1 - x1)) + x2^2"}, {}, 2), vec({-4, 3}));
  CHECK(soft.status == Trajectory::Status::Converged);
  CHECK((soft.final_point - vec({1, 0})).norm() < 1e-4);
}

TEST_CASE("nonsmooth max of squares converges to the kink") {
  const MinimaxProblem p = oracle::minimax({"x1^2", "(x1-1)^2"});
  std::vector<Vec> starts = {vec({-10}), vec({-1}), vec({0.25}), vec({7})};
  for (const Trajectory& t : minimize_many(p, starts, {}, 2)) {
    CHECK(t.status == Trajectory::Status::Converged);
    CHECK(t.final_point[0] == doctest::Approx(0.5).epsilon(1e-4));
    CHECK(monotone(t));
  }
}

TEST_CASE("infeasible starts are projected or penalized") {
  Eigen::MatrixXd A(1, 1);
  A << 1;
  MinimaxProblem p = oracle::minimax({"(x1 - 3)^2"});
  p.ground = GroundSet::polyhedron(A, vec({1}));
  const Trajectory t = minimize(p, vec({5}));
  CHECK(t.start_projected);
  CHECK(t.status == Trajectory::Status::Converged);
  CHECK(t.final_point[0] == doctest::Approx(1.0).epsilon(1e-6));

  // A constraint violated at the start is driven to feasibility by the penalty.
  const MinimaxProblem q = oracle::minimax({"x1^2"}, {"2 - x1"});
  const Trajectory u = minimize(q, vec({0}));
  CHECK(u.status == Trajectory::Status::Converged);
  CHECK(u.final_point[0] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(u.penalty_weight >= 10.0);

  CHECK_THROWS_AS(minimize(oracle::minimax({"log(x1)"}), vec({-1})), DomainError);
}

TEST_CASE("parallel runs match sequential ones") {
  const MinimaxProblem p = oracle::minimax({"x1^2 + exp(x2)", "abs(x1 - x2)"}, {}, 2);
  std::vector<Vec> starts;
  for (int i = 0; i < 6; ++i) starts.push_back(vec({double(i) - 3, 1.5 * i}));
  const auto a = minimize_many(p, starts, {}, 1);
  const auto b = minimize_many(p, starts, {}, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].values == b[i].values);
    CHECK(a[i].status == b[i].status);
  }
}

TEST_CASE("trajectory CSV") {
  const Trajectory t = minimize(oracle::minimax({"x1^2 + x2^2"}, {}, 2), vec({1, 2}));
  std::ostringstream out;
  write_trajectory_csv(out, t);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "k,x_1,x_2,phi");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    CHECK(std::count(line.begin(), line.end(), ',') == 3);
    ++rows;
  }
  CHECK(rows == t.iterates.size());
}

TEST_CASE("status names") {
  CHECK(to_string(Trajectory::Status::Converged) == "converged");
  CHECK(to_string(Trajectory::Status::Escaped) == "escaped");
  CHECK(to_string(Trajectory::Status::BudgetExhausted) == "budget-exhausted");
  CHECK(to_string(Trajectory::Status::UnboundedBelow) == "unbounded-below");
}
