#include "atinf/kkt.hpp"

#include <algorithm>
#include <random>

#include "atinf/errors.hpp"
#include "parallel.hpp"
#include "seeding.hpp"

namespace atinf {

namespace {

VCone ground_cone(const AsymptoticData& sets, int dim) {
  if (!sets.ground) return VCone{dim, {}};
  return sets.ground->recession_cone;
}

// cone{co d g_j(inf)}: the bounded part's points as generators, zeros kept.
std::vector<VCone> constraint_cones(const AsymptoticData& sets, int dim) {
  std::vector<VCone> out;
  for (const AsymptoticSet& s : sets.constraints)
    out.push_back(VCone::from_generators(dim, s.bounded_part.points));
  return out;
}

bool all_lipschitz(const std::vector<AsymptoticSet>& sets) {
  return std::all_of(sets.begin(), sets.end(),
                     [](const AsymptoticSet& s) { return s.lipschitz_at_infinity; });
}

std::vector<Trajectory> run_starts(const MinimaxProblem& p, const std::vector<Vec>& starts,
                                   const DescentOptions& options, int workers,
                                   std::string& note) {
  try {
    return minimize_many(p, starts, options, workers);
  } catch (const Error& e) {
    note += std::string("descent failed: ") + e.what() + "; ";
    return {};
  }
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::HypothesisUnmet: return "hypothesis-unmet";
  }
  return "unknown";
}

std::string to_string(SufficiencyVerdict::Outcome o) {
  switch (o) {
    case SufficiencyVerdict::Outcome::NonemptyCompact: return "nonempty-compact";
    case SufficiencyVerdict::Outcome::Inconclusive: return "inconclusive";
    case SufficiencyVerdict::Outcome::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

AsymptoticData estimate_asymptotics(const MinimaxProblem& p, const SamplingPlan& plan) {
  p.validate();
  if (plan.dim() != p.dim) throw DimensionError("sampling plan dimension differs from the problem");
  AsymptoticData d;
  for (const Expr& f : p.objectives) d.objectives.push_back(subdiff_at_infinity(f, plan));
  for (const Expr& g : p.constraints) d.constraints.push_back(subdiff_at_infinity(g, plan));
  d.phi = p.objectives.size() == 1 ? d.objectives.front() : subdiff_at_infinity(p.phi(), plan);
  try {
    d.ground = normal_cone_at_infinity(p.ground, plan);
  } catch (const PreconditionError&) {
    d.ground.reset();
  }
  return d;
}

CqVerdict check_cq(const MinimaxProblem& p, const SamplingPlan& plan) {
  return check_cq(p, estimate_asymptotics(p, plan), plan);
}

CqVerdict check_cq(const MinimaxProblem& p, const AsymptoticData& sets, const SamplingPlan& plan) {
  CqVerdict v;
  if (p.constraints.empty()) {
    v.verdict = Verdict::Holds;
    v.note = "no constraints; holds vacuously";
    return v;
  }
  if (!all_lipschitz(sets.constraints)) {
    v.verdict = Verdict::HypothesisUnmet;
    v.note = "some constraint is not Lipschitz at infinity";
    return v;
  }
  const std::vector<VCone> cones = constraint_cones(sets, p.dim);
  v.certificate = zero_in_sum({}, cones, ground_cone(sets, p.dim), plan.lp_tol);
  if (v.certificate.feasible) {
    v.verdict = Verdict::Fails;
    v.beta = v.certificate.beta;
    v.note = "a nontrivial multiplier combination of constraint limits reaches 0";
  } else {
    v.verdict = Verdict::Holds;
  }
  return v;
}

std::vector<Vec> seeded_starts(const MinimaxProblem& p, int count, std::uint64_t seed) {
  std::mt19937_64 rng(detail::splitmix(seed ^ 0x5eedULL));
  std::uniform_real_distribution<double> coord(-10.0, 10.0);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(p.dim);
    for (int j = 0; j < p.dim; ++j) x[j] = coord(rng);
    out.push_back(p.ground.project(x));
  }
  return out;
}

StandingAssumptions check_standing_assumptions(const MinimaxProblem& p,
                                               const AsymptoticData& sets,
                                               const SamplingPlan& plan,
                                               const std::vector<Trajectory>& runs) {
  StandingAssumptions a;
  a.objectives_lipschitz = all_lipschitz(sets.objectives);
  a.constraints_lipschitz = all_lipschitz(sets.constraints);
  for (const Vec& d : plan.directions) {
    for (double r : plan.radii()) {
      if (r < plan.escape_floor) continue;
      const Vec x = p.ground.project(r * d);
      bool ok = false;
      try {
        ok = x.norm() >= plan.escape_floor && p.feasible(x);
      } catch (const DomainError&) {
      }
      if (ok) {
        a.feasible_set_unbounded = true;
        break;
      }
    }
    if (a.feasible_set_unbounded) break;
  }
  a.record = std::numeric_limits<double>::infinity();
  for (const Trajectory& t : runs) {
    a.record = std::min(a.record, t.record);
    if (t.status == Trajectory::Status::UnboundedBelow) a.bounded_below = false;
  }
  if (runs.empty()) a.record = 0.0;
  if (!a.feasible_set_unbounded) a.note += "no feasible sample beyond the escape floor; ";
  if (!a.bounded_below) a.note += "objective appears unbounded below; ";
  if (!a.objectives_lipschitz) a.note += "some objective is not Lipschitz at infinity; ";
  if (!a.constraints_lipschitz) a.note += "some constraint is not Lipschitz at infinity; ";
  return a;
}

SufficiencyVerdict sufficiency_check(const MinimaxProblem& p, const SamplingPlan& plan,
                                     const AnalysisOptions& options) {
  const AsymptoticData sets = estimate_asymptotics(p, plan);
  return sufficiency_check(p, sets, check_cq(p, sets, plan), plan, options);
}

SufficiencyVerdict sufficiency_check(const MinimaxProblem& p, const AsymptoticData& sets,
                                     const CqVerdict& cq, const SamplingPlan& plan,
                                     const AnalysisOptions& options) {
  SufficiencyVerdict s;
  if (cq.verdict != Verdict::Holds) {
    s.outcome = SufficiencyVerdict::Outcome::NotApplicable;
    s.note = "constraint qualification at infinity does not hold";
    return s;
  }
  if (!sets.ground) {
    s.outcome = SufficiencyVerdict::Outcome::NotApplicable;
    s.note = "ground set appears bounded";
    return s;
  }
  const std::vector<VCone> cones = constraint_cones(sets, p.dim);
  const VCone ground = ground_cone(sets, p.dim);
  std::vector<VPolytope> hulls;
  if (all_lipschitz(sets.objectives)) {
    for (const AsymptoticSet& f : sets.objectives) hulls.push_back(f.bounded_part);
  } else {
    // Without Lipschitz objectives the test runs on the estimate for the
    // max itself, provided its singular part cannot cancel a feasible normal.
    std::vector<Vec> normals = ground.generators;
    for (const VCone& c : cones)
      for (const Vec& g : c.generators)
        if (g.norm() > 0.0) normals.push_back(g);
    const VCone normal_cone = VCone::from_generators(p.dim, normals, 1e-12, true);
    if (opposite_cones_meet(sets.phi.recession_cone, normal_cone)) {
      s.outcome = SufficiencyVerdict::Outcome::NotApplicable;
      s.note = "singular part of the objective meets the negative normal cone";
      return s;
    }
    hulls.push_back(sets.phi.bounded_part);
    s.note = "objective not Lipschitz at infinity; tested the max directly; ";
  }
  s.certificate = zero_in_sum(hulls, cones, ground, plan.lp_tol);
  if (s.certificate.feasible) {
    s.outcome = SufficiencyVerdict::Outcome::Inconclusive;
    s.note += "0 lies in the asymptotic sum; the test is inconclusive";
    return s;
  }
  s.outcome = SufficiencyVerdict::Outcome::NonemptyCompact;
  s.note += "solution set nonempty and compact (certified at estimate level)";
  if (!options.run_descent || options.cross_validation_starts <= 0) return s;

  const std::vector<Vec> starts =
      seeded_starts(p, options.cross_validation_starts, options.descent.seed);
  DescentOptions d = options.descent;
  d.escape_floor = plan.escape_floor;
  d.lp_tol = plan.lp_tol;
  std::string note;
  const std::vector<Trajectory> runs = run_starts(p, starts, d, plan.workers, note);
  s.cross_validated = !runs.empty();
  for (const Trajectory& t : runs) {
    bool bounded = t.status == Trajectory::Status::Converged;
    for (const Vec& x : t.iterates) bounded = bounded && x.norm() < plan.escape_floor;
    s.cross_validated = s.cross_validated && bounded;
    s.minimizers.push_back(t.final_point);
    s.minimizer_values.push_back(t.final_value);
  }
  if (!s.cross_validated) s.note += "; " + note + "descent cross-check did not confirm";
  return s;
}

KktReport kkt_at_infinity(const MinimaxProblem& p, const SamplingPlan& plan,
                          const AnalysisOptions& options) {
  KktReport r;
  r.sets = estimate_asymptotics(p, plan);
  r.cq = check_cq(p, r.sets, plan);
  r.unreliable = r.cq.verdict != Verdict::Holds;

  std::vector<Trajectory> runs;
  std::string note;
  if (options.run_descent) {
    std::vector<Vec> starts = options.starts;
    if (starts.empty()) starts.push_back(p.ground.project(Vec::Zero(p.dim)));
    DescentOptions d = options.descent;
    d.escape_floor = plan.escape_floor;
    d.lp_tol = plan.lp_tol;
    runs = run_starts(p, starts, d, plan.workers, note);
  }
  r.assumptions = check_standing_assumptions(p, r.sets, plan, runs);
  r.assumptions.note += note;
  for (const Trajectory& t : runs) {
    if (t.status == Trajectory::Status::Escaped) {
      r.escape = escape_evidence(t, plan);
      break;
    }
  }

  if (!r.assumptions.bounded_below) {
    r.kkt_verdict = Verdict::HypothesisUnmet;
    r.message = "objective appears unbounded below; analysis aborted";
    r.sufficiency.outcome = SufficiencyVerdict::Outcome::NotApplicable;
    r.sufficiency.note = r.message;
    return r;
  }

  std::vector<VPolytope> hulls;
  for (const AsymptoticSet& f : r.sets.objectives) hulls.push_back(f.bounded_part);
  r.kkt = zero_in_sum(hulls, constraint_cones(r.sets, p.dim), ground_cone(r.sets, p.dim),
                      plan.lp_tol);

  if (!r.assumptions.objectives_lipschitz) {
    r.kkt_verdict = Verdict::HypothesisUnmet;
    r.message = std::string("some objective is not Lipschitz at infinity; membership ") +
                (r.kkt.feasible ? "feasible" : "infeasible") + " (informational)";
  } else if (!r.assumptions.feasible_set_unbounded) {
    r.kkt_verdict = Verdict::HypothesisUnmet;
    r.message = "feasible set appears bounded";
  } else if (r.kkt.feasible) {
    r.kkt_verdict = Verdict::Holds;
    r.message = "KKT conditions at infinity hold";
  } else {
    r.kkt_verdict = Verdict::Fails;
    r.message = "necessary condition violated: no minimizing sequence escapes to infinity";
  }
  if (r.unreliable) r.message += "; certificate unreliable: CQ at infinity " + to_string(r.cq.verdict);
  if (r.kkt_verdict != Verdict::Fails && !r.escape)
    r.message += "; no escape found";

  r.sufficiency = sufficiency_check(p, r.sets, r.cq, plan, options);
  return r;
}

}  // namespace atinf
