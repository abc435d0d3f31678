#include <doctest.h>

#include <cmath>

#include "atinf/errors.hpp"
#include "atinf/pareto.hpp"
#include "oracles.hpp"

using namespace atinf;
using oracle::vec;

namespace {

VectorProblem example33() { return oracle::vector_problem({"1/(abs(x1)+1)", "0"}, {"x1"}); }
VectorProblem squares() { return oracle::vector_problem({"x1^2", "(x1-1)^2"}); }

using SetOutcome = SolutionSetVerdict::Outcome;

}  // namespace

TEST_CASE("auxiliary problems subtract the candidate value") {
  const MinimaxProblem a = build_auxiliary(example33(), vec({0, 0}));
  for (double x : {-100.0, -3.0, -0.5, 0.0})
    CHECK(a.phi_at(vec({x})) == doctest::Approx(1.0 / (std::abs(x) + 1.0)));
  CHECK(a.constraints.size() == 1);

  const VectorProblem lin = oracle::vector_problem({"x1", "-x1"});
  const MinimaxProblem b = build_auxiliary(lin, vec({1, -1}));
  for (int i = 0; i <= 200; ++i) {
    const double x = -10.0 + 0.1 * i;
    CHECK(b.phi_at(vec({x})) == doctest::Approx(std::abs(x - 1.0)));
  }

  const VectorProblem sq = squares();
  for (double x0 : {-2.0, 0.3, 4.0}) {
    const MinimaxProblem c = build_auxiliary(sq, sq.values(vec({x0})));
    CHECK(c.phi_at(vec({x0})) == 0.0);
  }

  CHECK_THROWS_AS(build_auxiliary(sq, vec({0})), DimensionError);
  CHECK_THROWS_AS(build_auxiliary(sq, vec({0, INFINITY})), PreconditionError);
}

TEST_CASE("shifting objectives leaves the asymptotic sets unchanged") {
  const SamplingPlan plan = SamplingPlan::defaults(1);
  const VectorProblem vps[] = {example33(), squares(),
                               oracle::vector_problem({"atan(x1)", "abs(x1 - 2)"})};
  for (const VectorProblem& vp : vps) {
    const MinimaxProblem aux = build_auxiliary(vp, vec({3.5, -1.25}));
    for (std::size_t i = 0; i < vp.objectives.size(); ++i) {
      const AsymptoticSet a = subdiff_at_infinity(vp.objectives[i], plan);
      const AsymptoticSet b = subdiff_at_infinity(aux.objectives[i], plan);
      CHECK(a.lipschitz_at_infinity == b.lipschitz_at_infinity);
      CHECK(a.recession_cone.generators.size() == b.recession_cone.generators.size());
      if (!a.bounded_part.empty())
        CHECK(hausdorff(a.bounded_part, b.bounded_part) < plan.cluster_tol);
      else
        CHECK(b.bounded_part.empty());
    }
  }
}

TEST_CASE("golden example candidate value at zero") {
  const ParetoReport r = check_weak_value_at_infinity(example33(), vec({0, 0}),
                                                      SamplingPlan::defaults(1));
  CHECK(r.outcome == ParetoReport::Outcome::Consistent);
  CHECK(r.evidence.passes);
  CHECK(r.evidence.nonnegative_on_samples);
  CHECK(r.evidence.escape_to_zero);
  CHECK(r.evidence.samples_checked > 50);
  CHECK(r.evidence.infimum_estimate >= -1e-8);
  CHECK_FALSE(r.refutation.has_value());
  REQUIRE(r.kkt.kkt.feasible);
  CHECK(std::abs(r.kkt.kkt.beta[0]) <= 1e-8);
  CHECK(r.weak_solution_set.outcome == SetOutcome::Inconclusive);
  CHECK(r.solution_set.outcome == SetOutcome::Inconclusive);
}

TEST_CASE("a value below the closure fails the evidence") {
  const ParetoReport r = check_weak_value_at_infinity(example33(), vec({-1, 0}),
                                                      SamplingPlan::defaults(1));
  CHECK(r.outcome == ParetoReport::Outcome::EvidenceFails);
  CHECK_FALSE(r.evidence.passes);
  CHECK(r.evidence.infimum_estimate == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_FALSE(r.refutation.has_value());
}

TEST_CASE("dominated candidate values are refuted soundly") {
  const VectorProblem vp = squares();
  const SamplingPlan plan = SamplingPlan::defaults(1);
  for (double x0 : {0.5, 0.0, 1.0, 2.0}) {
    const Vec ybar = vp.values(vec({x0})) + vec({0.1, 0.1});
    const ParetoReport r = check_weak_value_at_infinity(vp, ybar, plan);
    REQUIRE(r.outcome == ParetoReport::Outcome::Refuted);
    REQUIRE(r.refutation.has_value());
    const Vec f = vp.values(*r.refutation);
    const double tol = 1e-8 * (1.0 + ybar.cwiseAbs().maxCoeff());
    for (int i = 0; i < f.size(); ++i) CHECK(f[i] < ybar[i] - tol);
  }

  // (0.2, 0.2) is not attained from below: no x has x^2 < 0.2 and
  // (x - 1)^2 < 0.2 at once, and nothing escapes either.
  const ParetoReport r = check_weak_value_at_infinity(vp, vec({0.2, 0.2}), plan);
  CHECK(r.outcome == ParetoReport::Outcome::EvidenceFails);
  CHECK_FALSE(r.refutation.has_value());
}

TEST_CASE("solution sets of the squares pair") {
  const SamplingPlan plan = SamplingPlan::defaults(1);
  const SolutionSetVerdict weak = weak_solution_set_check(squares(), plan);
  CHECK(weak.outcome == SetOutcome::NonemptyCompact);
  CHECK_FALSE(weak.certificate.feasible);
  REQUIRE_FALSE(weak.cross_check_points.empty());
  for (const Vec& x : weak.cross_check_points) {
    CHECK(x[0] >= -1e-6);
    CHECK(x[0] <= 1.0 + 1e-6);
  }

  const SolutionSetVerdict strong = pareto_solution_set_check(squares(), plan);
  CHECK(strong.outcome == SetOutcome::NonemptyBounded);
  CHECK_FALSE(strong.closedness_claimed);
  CHECK(strong.note.find("closedness is not claimed") != std::string::npos);
}

TEST_CASE("inconclusive and inapplicable solution-set tests") {
  const SamplingPlan plan = SamplingPlan::defaults(1);
  CHECK(weak_solution_set_check(example33(), plan).outcome == SetOutcome::Inconclusive);
  CHECK(pareto_solution_set_check(example33(), plan).outcome == SetOutcome::Inconclusive);
  const VectorProblem bumps = oracle::vector_problem({"1/(x1^2+1)", "1/(x1^2+2)"});
  CHECK(weak_solution_set_check(bumps, plan).outcome == SetOutcome::Inconclusive);

  const VectorProblem bad = oracle::vector_problem({"x1^2", "x1"}, {"0*x1"});
  CHECK(weak_solution_set_check(bad, plan).outcome == SetOutcome::NotApplicable);
  CHECK(pareto_solution_set_check(bad, plan).outcome == SetOutcome::NotApplicable);
  CHECK(check_weak_value_at_infinity(bad, vec({0, 0}), plan).outcome ==
        ParetoReport::Outcome::NotApplicable);
}

TEST_CASE("bounded Pareto verdicts come with compact weak verdicts") {
  const std::vector<std::pair<std::vector<std::string>, int>> corpus = {
      {{"x1^2", "(x1-1)^2"}, 1},
      {{"x1^2 + x2^2", "(x1-1)^2 + x2^2"}, 2},
      {{"abs(x1) + x1^2", "exp(x1) + exp(-x1)"}, 1},
      {{"x1^4", "(x1 + 2)^2", "abs(x1 - 1)"}, 1},
      {{"1/(x1^2+1)", "1/(x1^2+2)"}, 1},
      {{"x1", "-x1"}, 1},
  };
  int bounded = 0;
  for (const auto& [f, dim] : corpus) {
    const VectorProblem vp = oracle::vector_problem(f, {}, dim);
    const SamplingPlan plan = SamplingPlan::defaults(dim);
    const SolutionSetVerdict strong = pareto_solution_set_check(vp, plan);
    CHECK_FALSE(strong.closedness_claimed);
    if (strong.outcome != SetOutcome::NonemptyBounded) continue;
    ++bounded;
    CHECK(weak_solution_set_check(vp, plan).outcome == SetOutcome::NonemptyCompact);
  }
  CHECK(bounded >= 3);
}

TEST_CASE("candidate values are nondominated samples") {
  ParetoOptions options;
  options.assume_values_nonempty = false;
  const SolutionSetVerdict v =
      weak_solution_set_check(squares(), SamplingPlan::defaults(1), options);
  REQUIRE_FALSE(v.candidate_values.empty());
  for (const Vec& a : v.candidate_values)
    for (const Vec& b : v.candidate_values)
      CHECK_FALSE(((b.array() <= a.array()).all() && (b.array() < a.array()).any()));
}

TEST_CASE("vector problems need two objectives") {
  VectorProblem vp = oracle::vector_problem({"x1", "x1^2"});
  vp.objectives.pop_back();
  CHECK_THROWS(vp.validate());
}

TEST_CASE("outcome names") {
  CHECK(to_string(ParetoReport::Outcome::Consistent) == "consistent");
  CHECK(to_string(ParetoReport::Outcome::EvidenceFails) == "evidence-fails");
  CHECK(to_string(ParetoReport::Outcome::Refuted) == "refuted");
  CHECK(to_string(ParetoReport::Outcome::NotApplicable) == "not-applicable");
  CHECK(to_string(SetOutcome::NonemptyBounded) == "nonempty-bounded");
}
