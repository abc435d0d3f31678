#include "atinf/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include "atinf/errors.hpp"
#include "parallel.hpp"
#include "seeding.hpp"

namespace atinf {

namespace {

using detail::splitmix;

// A ray is one direction, straight or jittered; rays 2j and 2j+1 belong to
// direction j.
struct Ray {
  int direction;
  bool perturbed;
};

std::vector<Ray> make_rays(const SamplingPlan& plan) {
  std::vector<Ray> rays;
  const bool jitter = plan.dim() > 1 && plan.jitter > 0;
  for (int j = 0; j < int(plan.directions.size()); ++j) {
    rays.push_back({j, false});
    if (jitter) rays.push_back({j, true});
  }
  return rays;
}

std::vector<Vec> ray_points(const SamplingPlan& plan, const Ray& ray,
                            const std::vector<double>& radii) {
  const Vec& d = plan.directions[ray.direction];
  std::vector<Vec> pts;
  pts.reserve(radii.size());
  std::mt19937_64 rng(splitmix(plan.seed ^ splitmix(std::uint64_t(ray.direction) + 1)));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double r : radii) {
    Vec dir = d;
    if (ray.perturbed) {
      for (int i = 0; i < dir.size(); ++i) dir[i] += plan.jitter * normal(rng);
      dir.normalize();
    }
    pts.push_back(r * dir);
  }
  return pts;
}

// Unit direction of a vector that may contain infinities.
Vec direction_of(const Vec& u) {
  if (u.allFinite()) return u.normalized();
  Vec s = Vec::Zero(u.size());
  for (int i = 0; i < u.size(); ++i)
    if (std::isinf(u[i])) s[i] = u[i] > 0 ? 1.0 : -1.0;
  return s.normalized();
}

double max_norm(const std::vector<Vec>& vs) {
  double m = 0.0;
  for (const Vec& v : vs) m = std::max(m, v.allFinite() ? v.norm() : INFINITY);
  return m;
}

struct Sample {
  int k;
  double radius;
  std::vector<Vec> vertices;
  double norm;
};

struct RayOutcome {
  DirectionDiagnostic diag;
  std::vector<Vec> candidates;
  std::vector<double> candidate_radius;
  std::optional<Vec> recession;
  double tail_max_norm = 0.0;
  int samples = 0;
};

RayOutcome sample_ray(const Expr& e, const SamplingPlan& plan, const Ray& ray,
                      const std::vector<double>& radii) {
  RayOutcome out;
  out.diag.direction = ray.direction;
  out.diag.perturbed = ray.perturbed;
  const std::vector<Vec> pts = ray_points(plan, ray, radii);
  std::vector<Sample> samples;
  for (int k = 0; k < int(pts.size()); ++k) {
    try {
      VPolytope p = subdiff_at(e, pts[k]);
      const double nrm = max_norm(p.points);
      samples.push_back({k, radii[k], std::move(p.points), nrm});
    } catch (const DomainError&) {
    } catch (const PreconditionError&) {
    }
  }
  out.samples = int(samples.size());
  out.diag.valid_samples = out.samples;
  if (samples.empty()) {
    out.diag.status = "invalid";
    return out;
  }

  // Divergence: the gradient norm grows by at least sqrt(rho) per radius
  // step over the last five steps, or the last sample is already infinite.
  const double growth = std::sqrt(plan.radius_ratio);
  bool diverged = !std::isfinite(samples.back().norm);
  if (!diverged && samples.size() >= 6) {
    diverged = true;
    for (std::size_t s = samples.size() - 5; s < samples.size(); ++s) {
      const double prev = samples[s - 1].norm;
      const double cur = samples[s].norm;
      if (!(cur > 0.0) || !(std::isinf(cur) || cur >= growth * prev)) {
        diverged = false;
        break;
      }
    }
  }
  if (diverged) {
    const auto& last = samples.back().vertices;
    const auto big = std::max_element(last.begin(), last.end(), [](const Vec& a, const Vec& b) {
      const double na = a.allFinite() ? a.norm() : INFINITY;
      const double nb = b.allFinite() ? b.norm() : INFINITY;
      return na < nb;
    });
    out.recession = direction_of(*big);
    out.diag.status = "diverged";
    return out;
  }

  const int tail_start = (plan.radius_steps + 1) / 2;
  std::vector<const Sample*> tail;
  for (const Sample& s : samples)
    if (s.k >= tail_start && s.radius >= plan.escape_floor) tail.push_back(&s);
  if (tail.empty()) {
    out.diag.status = "unsettled";
    return out;
  }
  for (const Sample* s : tail) out.tail_max_norm = std::max(out.tail_max_norm, s->norm);

  // Limit candidates: vertices recurring at the last three tail radii.
  const std::size_t first = tail.size() > 3 ? tail.size() - 3 : 0;
  for (std::size_t t = first; t < tail.size(); ++t) {
    for (const Vec& v : tail[t]->vertices) {
      out.candidates.push_back(v);
      out.candidate_radius.push_back(tail[t]->radius);
    }
  }
  bool settled = tail.size() >= 2;
  if (settled) {
    const auto& a = tail[tail.size() - 2]->vertices;
    const auto& b = tail.back()->vertices;
    for (const Vec& v : b) {
      double best = INFINITY;
      for (const Vec& w : a) best = std::min(best, (v - w).norm());
      if (best > 1e-4 * (1.0 + v.norm())) settled = false;
    }
  }
  out.diag.status = settled ? "converged" : "unsettled";
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<Vec> quasi_uniform_directions(int dim, int count, std::uint64_t seed) {
  if (dim < 1 || count < 1) throw PreconditionError("directions need positive dimension and count");
  std::vector<Vec> dirs;
  if (dim == 1) {
    for (int k = 0; k < count; ++k) dirs.push_back(Vec::Constant(1, k % 2 == 0 ? 1.0 : -1.0));
    return dirs;
  }
  if (dim == 2) {
    for (int k = 0; k < count; ++k) {
      const double a = 2.0 * std::numbers::pi * k / count;
      Vec d(2);
      d << std::cos(a), std::sin(a);
      for (int i = 0; i < 2; ++i)
        if (std::fabs(d[i]) < 1e-15) d[i] = 0.0;
      dirs.push_back(d.normalized());
    }
    return dirs;
  }
  for (int i = 0; i < dim && int(dirs.size()) < count; ++i) {
    dirs.push_back(Vec::Unit(dim, i));
    if (int(dirs.size()) < count) dirs.push_back(-Vec::Unit(dim, i));
  }
  std::mt19937_64 rng(splitmix(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  while (int(dirs.size()) < count) {
    Vec d(dim);
    for (int i = 0; i < dim; ++i) d[i] = normal(rng);
    d.normalize();
    dirs.push_back(d);
    if (int(dirs.size()) < count) dirs.push_back(-d);
  }
  return dirs;
}

SamplingPlan SamplingPlan::defaults(int dim, std::uint64_t seed) {
  return with_directions(dim, std::max(2 * dim, 16), seed);
}

SamplingPlan SamplingPlan::with_directions(int dim, int count, std::uint64_t seed) {
  SamplingPlan p;
  p.seed = seed;
  p.directions = quasi_uniform_directions(dim, count, seed);
  return p;
}

std::vector<double> SamplingPlan::radii() const {
  std::vector<double> r;
  for (int k = 0; k <= radius_steps; ++k) r.push_back(radius_base * std::pow(radius_ratio, k));
  return r;
}

void SamplingPlan::validate() const {
  if (directions.empty()) throw PreconditionError("sampling plan has no directions");
  const int n = dim();
  if (!(radius_ratio > 1.0)) throw PreconditionError("sampling plan needs radius ratio > 1");
  if (!(radius_base > 0.0)) throw PreconditionError("sampling plan needs a positive base radius");
  if (radius_steps < 8) throw PreconditionError("sampling plan needs at least 8 radius steps");
  if (int(directions.size()) < 2 * n)
    throw PreconditionError("sampling plan needs at least 2n directions");
  for (const Vec& d : directions) {
    if (d.size() != n) throw DimensionError("sampling directions have mixed dimensions");
    if (std::fabs(d.norm() - 1.0) > 1e-12) throw PreconditionError("sampling directions must be unit vectors");
  }
  if (!(cluster_tol > 0.0) || !(escape_floor > 0.0) || !(lp_tol > 0.0) || jitter < 0.0)
    throw PreconditionError("sampling plan tolerances must be positive");
}

AsymptoticSet subdiff_at_infinity(const Expr& e, const SamplingPlan& plan) {
  plan.validate();
  if (plan.dim() != e.dim()) throw DimensionError("sampling plan and expression dimensions differ");
  const std::vector<double> radii = plan.radii();
  const std::vector<Ray> rays = make_rays(plan);
  std::vector<RayOutcome> outcomes(rays.size());
  detail::parallel_for(int(rays.size()), plan.workers,
                       [&](int i) { outcomes[i] = sample_ray(e, plan, rays[i], radii); });

  AsymptoticSet set;
  std::vector<Vec> cands;
  std::vector<double> cand_r;
  std::vector<Vec> rec;
  bool any_valid = false;
  bool any_diverged = false;
  for (RayOutcome& o : outcomes) {
    set.samples_used += o.samples;
    set.diagnostics.push_back(o.diag);
    any_valid = any_valid || o.samples > 0;
    if (o.recession) {
      any_diverged = true;
      rec.push_back(*o.recession);
    }
    set.lipschitz_constant = std::max(set.lipschitz_constant, o.tail_max_norm);
    for (std::size_t c = 0; c < o.candidates.size(); ++c) {
      cands.push_back(o.candidates[c]);
      cand_r.push_back(o.candidate_radius[c]);
    }
  }
  if (!any_valid) throw DomainError("every sampled direction left the domain of the expression");

  set.tail_samples = cands;
  double scale = 0.0;
  for (const Vec& v : cands) scale = std::max(scale, v.norm());
  const double tol = plan.cluster_tol * (1.0 + scale);

  // Greedy clustering, farthest samples first; each representative is an
  // actual sample.
  std::vector<int> order(cands.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = int(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cand_r[a] > cand_r[b]; });
  std::vector<Vec> reps;
  for (int i : order) {
    const bool near = std::any_of(reps.begin(), reps.end(),
                                  [&](const Vec& r) { return (r - cands[i]).norm() <= tol; });
    if (!near) reps.push_back(cands[i]);
  }
  set.bounded_part = VPolytope::from_points(e.dim(), std::move(reps), tol);
  set.recession_cone = VCone::from_generators(e.dim(), std::move(rec), 1e-6, /*normalize=*/true);
  set.lipschitz_at_infinity = !any_diverged && set.recession_cone.is_zero();
  set.lipschitz_radius = radii[std::size_t((plan.radius_steps + 1) / 2)];
  if (!set.lipschitz_at_infinity) set.lipschitz_constant = INFINITY;
  return set;
}

AsymptoticSet normal_cone_at_infinity(const GroundSet& omega, const SamplingPlan& plan) {
  plan.validate();
  if (plan.dim() != omega.dim()) throw DimensionError("sampling plan and ground set dimensions differ");
  const std::vector<double> radii = plan.radii();
  const std::vector<Ray> rays = make_rays(plan);

  struct Outcome {
    std::vector<Vec> gens;
    int far = 0;
  };
  std::vector<Outcome> outcomes(rays.size());
  detail::parallel_for(int(rays.size()), plan.workers, [&](int i) {
    for (const Vec& x : ray_points(plan, rays[i], radii)) {
      const Vec p = omega.project(x);
      if (p.norm() < plan.escape_floor) continue;
      ++outcomes[i].far;
      for (const Vec& g : normal_cone_at(omega, p, /*scale_by_norm=*/true).generators)
        outcomes[i].gens.push_back(g);
    }
  });

  AsymptoticSet set;
  std::vector<Vec> gens;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    set.samples_used += outcomes[i].far;
    set.diagnostics.push_back({rays[i].direction, rays[i].perturbed, outcomes[i].far,
                               outcomes[i].far > 0 ? "converged" : "invalid"});
    for (const Vec& g : outcomes[i].gens) gens.push_back(g);
  }
  if (set.samples_used == 0) throw PreconditionError("Omega appears bounded");

  const int n = omega.dim();
  set.recession_cone = VCone::from_generators(n, gens, 1e-6, /*normalize=*/true);
  std::vector<Vec> pts{Vec::Zero(n)};
  for (const Vec& g : set.recession_cone.generators) pts.push_back(g);
  set.tail_samples = pts;
  set.bounded_part = VPolytope::from_points(n, std::move(pts), 1e-6);
  set.lipschitz_at_infinity = set.recession_cone.generators.empty();
  set.lipschitz_constant = set.lipschitz_at_infinity ? 0.0 : INFINITY;
  set.lipschitz_radius = plan.escape_floor;
  return set;
}

std::string to_string(InclusionReport::Status s) {
  switch (s) {
    case InclusionReport::Status::Holds: return "holds";
    case InclusionReport::Status::Violated: return "violated";
    case InclusionReport::Status::Inconclusive: return "inconclusive";
    case InclusionReport::Status::HypothesisUnmet: return "hypothesis-unmet";
  }
  return "unknown";
}

namespace {

void judge(InclusionReport& r, double slack) {
  const VPolytope& lhs = r.combined.bounded_part;
  if (lhs.empty()) {
    r.violation = 0.0;
  } else if (r.rhs.empty()) {
    r.violation = INFINITY;
  } else {
    r.violation = hausdorff_excess(lhs, r.rhs);
  }
  r.status = (r.violation <= slack && r.singular_is_zero) ? InclusionReport::Status::Holds
                                                          : InclusionReport::Status::Violated;
}

}  // namespace

InclusionReport check_sum_rule(const Expr& e1, const Expr& e2, const SamplingPlan& plan,
                               double slack) {
  InclusionReport r;
  r.parts.push_back(subdiff_at_infinity(e1, plan));
  r.parts.push_back(subdiff_at_infinity(e2, plan));
  r.combined = subdiff_at_infinity(e1 + e2, plan);
  if (opposite_cones_meet(r.parts[0].recession_cone, r.parts[1].recession_cone, plan.lp_tol)) {
    r.status = InclusionReport::Status::Inconclusive;
    r.note = "qualification fails in estimate: singular estimates meet oppositely away from 0";
    return r;
  }
  r.rhs = minkowski_sum(r.parts[0].bounded_part, r.parts[1].bounded_part);
  judge(r, slack);
  return r;
}

InclusionReport max_rule_at_infinity(std::span<const Expr> es, const SamplingPlan& plan,
                                     double slack) {
  if (es.empty()) throw PreconditionError("max rule needs at least one function");
  InclusionReport r;
  std::vector<Vec> pts;
  for (const Expr& e : es) {
    r.parts.push_back(subdiff_at_infinity(e, plan));
    for (const Vec& v : r.parts.back().bounded_part.points) pts.push_back(v);
  }
  const bool all_lipschitz = std::all_of(r.parts.begin(), r.parts.end(),
                                         [](const AsymptoticSet& a) { return a.lipschitz_at_infinity; });
  if (!all_lipschitz) {
    r.status = InclusionReport::Status::HypothesisUnmet;
    r.note = "some function is not Lipschitz at infinity";
    return r;
  }
  r.combined = subdiff_at_infinity(Expr::max(es), plan);
  r.rhs = VPolytope::from_points(es.front().dim(), std::move(pts));
  r.singular_is_zero = r.combined.recession_cone.is_zero();
  judge(r, slack);
  return r;
}

}  // namespace atinf
