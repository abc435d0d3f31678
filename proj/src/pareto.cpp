#include "atinf/pareto.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "atinf/errors.hpp"

namespace atinf {

namespace {

constexpr int kExtraStarts = 64;

double scale_of(const Vec& ybar) { return 1.0 + ybar.cwiseAbs().maxCoeff(); }

// Feasible points: the plan rays at small and large radii, seeded box starts,
// all projected onto the ground set.
std::vector<Vec> feasible_samples(const MinimaxProblem& p, const SamplingPlan& plan) {
  std::vector<double> radii = {0.0, 0.1, 0.3, 1.0, 3.0};
  for (double r : plan.radii()) radii.push_back(r);
  std::vector<Vec> candidates;
  for (const Vec& d : plan.directions)
    for (double r : radii) candidates.push_back(p.ground.project(r * d));
  for (Vec& x : seeded_starts(p, kExtraStarts, plan.seed)) candidates.push_back(std::move(x));
  std::vector<Vec> out;
  for (Vec& x : candidates) {
    try {
      if (x.allFinite() && p.feasible(x)) out.push_back(std::move(x));
    } catch (const DomainError&) {
    }
  }
  return out;
}

std::optional<double> value_at(const Expr& e, const Vec& x) {
  try {
    const double v = e.eval(x);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

std::vector<Vec> nondominated(const std::vector<Vec>& values) {
  std::vector<Vec> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < values.size() && !dominated; ++j) {
      if (i == j) continue;
      dominated = (values[j].array() <= values[i].array()).all() &&
                  (values[j].array() < values[i].array()).any();
    }
    if (!dominated && std::none_of(out.begin(), out.end(),
                                   [&](const Vec& v) { return (v - values[i]).norm() == 0.0; }))
      out.push_back(values[i]);
  }
  return out;
}

SolutionSetVerdict solution_set_test(const VectorProblem& vp, const SamplingPlan& plan,
                                     const ParetoOptions& options, bool pareto) {
  vp.validate();
  const MinimaxProblem mp = as_minimax(vp);
  const AsymptoticData sets = estimate_asymptotics(mp, plan);
  const CqVerdict cq = check_cq(mp, sets, plan);
  SolutionSetVerdict v;
  if (cq.verdict != Verdict::Holds) {
    v.outcome = SolutionSetVerdict::Outcome::NotApplicable;
    v.note = "constraint qualification at infinity does not hold";
    return v;
  }
  if (!sets.ground) {
    v.outcome = SolutionSetVerdict::Outcome::NotApplicable;
    v.note = "ground set appears bounded";
    return v;
  }
  std::vector<VCone> cones;
  std::vector<Vec> normals = sets.ground->recession_cone.generators;
  for (const AsymptoticSet& g : sets.constraints) {
    cones.push_back(VCone::from_generators(vp.dim, g.bounded_part.points));
    for (const Vec& q : g.bounded_part.points)
      if (q.norm() > 0.0) normals.push_back(q);
  }
  const VCone normal_cone = VCone::from_generators(vp.dim, normals, 1e-12, true);
  std::vector<VPolytope> hulls;
  for (const AsymptoticSet& f : sets.objectives) {
    if (!f.lipschitz_at_infinity) {
      if (opposite_cones_meet(f.recession_cone, normal_cone)) {
        v.outcome = SolutionSetVerdict::Outcome::NotApplicable;
        v.note = "singular part of an objective meets the negative normal cone";
        return v;
      }
      v.note = "some objective is not Lipschitz at infinity; singular parts checked; ";
    }
    hulls.push_back(f.bounded_part);
  }
  v.certificate = zero_in_sum(hulls, cones, sets.ground->recession_cone, plan.lp_tol);
  if (v.certificate.feasible) {
    v.outcome = SolutionSetVerdict::Outcome::Inconclusive;
    v.note += "0 lies in the asymptotic sum; the test is inconclusive";
  } else if (pareto) {
    v.outcome = SolutionSetVerdict::Outcome::NonemptyBounded;
    v.note += "Pareto solution set nonempty and bounded (certified at estimate level); "
              "closedness is not claimed";
  } else {
    v.outcome = SolutionSetVerdict::Outcome::NonemptyCompact;
    v.note += "weak Pareto solution set nonempty and compact (certified at estimate level)";
  }

  if (!options.assume_values_nonempty) {
    std::vector<Vec> values;
    for (const Vec& x : feasible_samples(mp, plan)) {
      try {
        values.push_back(vp.values(x));
      } catch (const DomainError&) {
      }
    }
    v.candidate_values = nondominated(values);
    if (v.candidate_values.empty() && v.outcome != SolutionSetVerdict::Outcome::Inconclusive) {
      v.outcome = SolutionSetVerdict::Outcome::Inconclusive;
      v.note += "; no candidate values found";
    }
  }

  const bool positive = v.outcome == SolutionSetVerdict::Outcome::NonemptyCompact ||
                        v.outcome == SolutionSetVerdict::Outcome::NonemptyBounded;
  if (positive && options.analysis.run_descent && options.cross_check_starts > 0) {
    DescentOptions d = options.analysis.descent;
    d.escape_floor = plan.escape_floor;
    d.lp_tol = plan.lp_tol;
    for (const Vec& s : seeded_starts(mp, options.cross_check_starts, d.seed)) {
      try {
        const MinimaxProblem aux = build_auxiliary(vp, vp.values(s));
        const Trajectory t = minimize(aux, s, d);
        if (t.status == Trajectory::Status::Converged) v.cross_check_points.push_back(t.final_point);
      } catch (const Error&) {
      }
    }
  }
  return v;
}

}  // namespace

std::string to_string(SolutionSetVerdict::Outcome o) {
  switch (o) {
    case SolutionSetVerdict::Outcome::NonemptyCompact: return "nonempty-compact";
    case SolutionSetVerdict::Outcome::NonemptyBounded: return "nonempty-bounded";
    case SolutionSetVerdict::Outcome::Inconclusive: return "inconclusive";
    case SolutionSetVerdict::Outcome::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

std::string to_string(ParetoReport::Outcome o) {
  switch (o) {
    case ParetoReport::Outcome::Consistent: return "consistent";
    case ParetoReport::Outcome::EvidenceFails: return "evidence-fails";
    case ParetoReport::Outcome::Refuted: return "refuted";
    case ParetoReport::Outcome::NotApplicable: return "not-applicable";
  }
  return "unknown";
}

MinimaxProblem build_auxiliary(const VectorProblem& vp, const Vec& ybar) {
  vp.validate();
  if (ybar.size() != int(vp.objectives.size()))
    throw DimensionError("candidate value needs one entry per objective");
  if (!ybar.allFinite()) throw PreconditionError("candidate value must be finite");
  MinimaxProblem p;
  p.dim = vp.dim;
  p.ground = vp.ground;
  p.constraints = vp.constraints;
  for (std::size_t i = 0; i < vp.objectives.size(); ++i)
    p.objectives.push_back(vp.objectives[i] - Expr::constant(ybar[int(i)], vp.dim));
  return p;
}

MinimaxProblem as_minimax(const VectorProblem& vp) {
  MinimaxProblem p;
  p.dim = vp.dim;
  p.ground = vp.ground;
  p.constraints = vp.constraints;
  p.objectives = vp.objectives;
  return p;
}

ParetoReport check_weak_value_at_infinity(const VectorProblem& vp, const Vec& ybar,
                                          const SamplingPlan& plan,
                                          const ParetoOptions& options) {
  const MinimaxProblem aux = build_auxiliary(vp, ybar);
  ParetoReport r;
  r.candidate_value = ybar;
  r.kkt = kkt_at_infinity(aux, plan, options.analysis);
  if (r.kkt.cq.verdict != Verdict::Holds) {
    r.outcome = ParetoReport::Outcome::NotApplicable;
    r.message = "constraint qualification at infinity does not hold";
    return r;
  }

  const double tol = 1e-8 * scale_of(ybar);
  const Expr phi = aux.phi();
  std::vector<Vec> samples = feasible_samples(aux, plan);

  DescentOptions d = options.analysis.descent;
  d.escape_floor = plan.escape_floor;
  d.lp_tol = plan.lp_tol;
  std::vector<Vec> starts = options.analysis.starts;
  if (starts.empty()) starts.push_back(aux.ground.project(Vec::Zero(aux.dim)));
  for (const Trajectory& t : minimize_many(aux, starts, d, plan.workers)) {
    for (std::size_t k = 0; k < t.iterates.size(); ++k)
      if (aux.feasible(t.iterates[k])) samples.push_back(t.iterates[k]);
    if (!r.evidence.escape && t.status == Trajectory::Status::Escaped) {
      r.evidence.escape = escape_evidence(t, plan);
      r.evidence.escape_to_zero = std::abs(t.limit_estimate) <= 1e-6 * scale_of(ybar);
    }
    if (r.evidence.descent_status.empty()) r.evidence.descent_status = to_string(t.status);
  }

  double lowest = std::numeric_limits<double>::infinity();
  double worst = -tol;
  for (const Vec& x : samples) {
    const auto v = value_at(phi, x);
    if (!v) continue;
    ++r.evidence.samples_checked;
    lowest = std::min(lowest, *v);
    if (*v < worst) {
      // Recheck objective by objective before reporting.
      const Vec fx = vp.values(x);
      if (((fx - ybar).array() < -tol).all()) {
        worst = *v;
        r.refutation = x;
      }
    }
  }
  r.evidence.infimum_estimate = lowest;
  r.evidence.nonnegative_on_samples = lowest >= -tol;
  r.evidence.passes = r.evidence.nonnegative_on_samples && r.evidence.escape_to_zero;

  if (r.refutation) {
    r.outcome = ParetoReport::Outcome::Refuted;
    r.message = "not a weak Pareto value: a feasible point improves every objective";
  } else if (r.evidence.passes) {
    r.outcome = ParetoReport::Outcome::Consistent;
    r.message = "consistent with a weak Pareto value at infinity";
  } else {
    r.outcome = ParetoReport::Outcome::EvidenceFails;
    r.message = r.evidence.escape ? "escape found but the auxiliary value does not tend to 0"
                                  : "no escape found";
  }
  r.weak_solution_set = weak_solution_set_check(vp, plan, options);
  r.solution_set = pareto_solution_set_check(vp, plan, options);
  return r;
}

SolutionSetVerdict weak_solution_set_check(const VectorProblem& vp, const SamplingPlan& plan,
                                           const ParetoOptions& options) {
  return solution_set_test(vp, plan, options, false);
}

SolutionSetVerdict pareto_solution_set_check(const VectorProblem& vp, const SamplingPlan& plan,
                                             const ParetoOptions& options) {
  return solution_set_test(vp, plan, options, true);
}

}  // namespace atinf
