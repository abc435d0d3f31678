#include "atinf/descent.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <random>

#include "parallel.hpp"
#include "seeding.hpp"

namespace atinf {

namespace {

constexpr double kUnboundedBelow = -1e12;
constexpr double kWeightStart = 10.0;
constexpr double kWeightCap = 1e9;
constexpr int kInfeasibleStreak = 20;
constexpr int kTailLength = 10;
constexpr double kEscapeStationarity = 1e-3;
constexpr int kEkelandSamples = 200;
constexpr int kEkelandRounds = 50;
constexpr int kEkelandInner = 500;
constexpr double kActivityLevels[] = {kActivityTol, 1e-8, 1e-6, 1e-4, 1e-2};

constexpr auto mix = detail::splitmix;

bool finite(const Vec& x) { return x.allFinite(); }

std::optional<double> try_eval(const Expr& e, const Vec& x) {
  try {
    const double v = e.eval(x);
    if (std::isfinite(v)) return v;
  } catch (const DomainError&) {
  }
  return std::nullopt;
}

bool feasible_at(const MinimaxProblem& p, const Vec& x) {
  try {
    return p.feasible(x);
  } catch (const DomainError&) {
    return false;
  }
}

Expr penalized(const MinimaxProblem& p, const Expr& phi, double weight) {
  if (p.constraints.empty()) return phi;
  const Expr zero = Expr::constant(0.0, p.dim);
  Expr sum;
  for (const Expr& g : p.constraints) {
    const Expr parts[] = {g, zero};
    Expr term = Expr::max(parts);
    sum = sum.empty() ? term : sum + term;
  }
  return phi + Expr::constant(weight, p.dim) * sum;
}

std::optional<VPolytope> branch_hull(const Expr& e, const Vec& x, double rel_tol) {
  try {
    return subdiff_at(e, x, rel_tol);
  } catch (const PreconditionError&) {
    return std::nullopt;
  } catch (const DomainError&) {
    return std::nullopt;
  }
}

// Least-norm element of the subdifferential estimate of phi + indicator(F)
// at a feasible x: the branch hull of phi plus the cone of the ground normals
// and of the branch gradients of active constraints.
Vec stationarity_vector(const MinimaxProblem& p, const Expr& phi, const Vec& x,
                        double rel_tol) {
  auto hull = branch_hull(phi, x, rel_tol);
  if (!hull || hull->empty()) return Vec::Constant(p.dim, std::numeric_limits<double>::infinity());
  std::vector<Vec> gens = normal_cone_at(p.ground, x).generators;
  const double active = 1e-9 * (1.0 + x.norm());
  for (const Expr& g : p.constraints) {
    const auto v = try_eval(g, x);
    if (!v || *v < -active) continue;
    if (auto gh = branch_hull(g, x, rel_tol)) {
      for (const Vec& q : gh->points)
        if (q.norm() > 0.0) gens.push_back(q);
    }
  }
  return min_norm_point(hull->points, gens).point;
}

Vec smallest_stationarity(const MinimaxProblem& p, const Expr& phi, const Vec& x) {
  Vec best;
  for (double level : {kActivityTol, 1e-7, 1e-5}) {
    Vec u = stationarity_vector(p, phi, x, level);
    if (best.size() == 0 || u.norm() < best.norm()) best = std::move(u);
  }
  return best;
}

Vec sample_ball(std::mt19937_64& rng, const Vec& center, double radius) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Vec d(center.size());
  do {
    for (int i = 0; i < d.size(); ++i) d[i] = normal(rng);
  } while (d.norm() == 0.0);
  const double r = radius * std::pow(unit(rng), 1.0 / double(center.size()));
  return center + r * d / d.norm();
}

struct Step {
  Vec x;
  double value = 0.0;
  double length = 0.0;
};

class Descender {
 public:
  Descender(const MinimaxProblem& p, const DescentOptions& o)
      : p_(p), o_(o), phi_(p.phi()), weight_(kWeightStart) {
    psi_ = penalized(p_, phi_, weight_);
  }

  Trajectory run(const Vec& start) {
    Trajectory t;
    Vec x = p_.ground.project(start);
    t.start_projected = (x - start).norm() > 1e-12 * (1.0 + start.norm());
    const double phi0 = phi_.eval(x);
    if (!std::isfinite(phi0)) throw DomainError("objective is not finite at the start");
    double psi = psi_.eval(x);
    tol_flat_ = 1e-8 * (1.0 + std::abs(phi0));
    record(t, x, phi0);
    t.record = std::numeric_limits<double>::infinity();

    int infeasible_streak = 0;
    for (int k = 1; k <= o_.budget; ++k) {
      const bool feasible = feasible_at(p_, x);
      if (feasible) {
        t.record = std::min(t.record, t.values.back());
        infeasible_streak = 0;
      } else if (++infeasible_streak >= kInfeasibleStreak) {
        infeasible_streak = 0;
        weight_ *= 2.0;
        if (weight_ > kWeightCap) throw Error("penalty parameter overflow");
        psi_ = penalized(p_, phi_, weight_);
        psi = psi_.eval(x);
      }
      if (psi < kUnboundedBelow) {
        finish(t, Trajectory::Status::UnboundedBelow, x);
        return t;
      }

      std::optional<Step> step = descend(x, psi, feasible);
      if (!step) step = coast(x, psi, feasible);
      if (!step) {
        finish(t, Trajectory::Status::Converged, x);
        return t;
      }
      x = step->x;
      psi = step->value;
      record(t, x, phi_.eval(x));
      if (feasible_at(p_, x)) {
        t.record = std::min(t.record, t.values.back());
        if (t.values.back() < kUnboundedBelow) {
          finish(t, Trajectory::Status::UnboundedBelow, x);
          return t;
        }
        if (try_escape(t)) return t;
      }
    }
    finish(t, Trajectory::Status::BudgetExhausted, x);
    return t;
  }

 private:
  void record(Trajectory& t, const Vec& x, double v) {
    t.iterates.push_back(x);
    t.values.push_back(v);
  }

  void finish(Trajectory& t, Trajectory::Status s, const Vec& x) {
    t.status = s;
    t.final_point = x;
    t.final_value = phi_.eval(x);
    t.penalty_weight = p_.constraints.empty() ? 0.0 : weight_;
    if (!std::isfinite(t.record)) t.record = t.final_value;
  }

  double cap(const Vec& x) const { return std::max(1.0, x.norm()); }

  std::optional<Step> search(const Vec& x, double psi, bool feasible, const Vec& d,
                             double slope, double delta) {
    const double floor = 1e-14 * (1.0 + x.norm());
    for (; delta >= floor; delta *= 0.5) {
      Vec xt = p_.ground.project(x + delta * d);
      if (!finite(xt)) continue;
      const double moved = (xt - x).norm();
      if (moved == 0.0) continue;
      const auto v = try_eval(psi_, xt);
      if (!v || *v >= psi || *v > psi - o_.armijo * slope * moved) continue;
      if (feasible && !feasible_at(p_, xt)) continue;
      return Step{std::move(xt), *v, delta};
    }
    return std::nullopt;
  }

  std::optional<Step> try_direction(const Vec& x, double psi, bool feasible, const Vec& g) {
    const double norm = g.norm();
    if (!(norm > 0.0) || !std::isfinite(norm)) return std::nullopt;
    double delta = std::min(2.0 * last_length_, cap(x));
    if (o_.lower_estimate && psi > *o_.lower_estimate)
      delta = std::min((psi - *o_.lower_estimate) / norm, cap(x));
    auto step = search(x, psi, feasible, -g / norm, norm, delta);
    if (step) {
      last_direction_ = -g / norm;
      last_length_ = step->length;
    }
    return step;
  }

  // Least-norm element of the branch hull at widening activity levels, then
  // the individual branch gradients.
  std::optional<Step> descend(const Vec& x, double psi, bool feasible) {
    for (double level : kActivityLevels) {
      const auto hull = branch_hull(psi_, x, level);
      if (!hull || hull->empty()) continue;
      const Vec g = min_norm_point(hull->points).point;
      if (auto s = try_direction(x, psi, feasible, g)) return s;
      if (hull->points.size() > 1) {
        for (const Vec& v : hull->points)
          if (auto s = try_direction(x, psi, feasible, v)) return s;
      }
    }
    return std::nullopt;
  }

  // Keeps moving outward along the last direction while the merit does not
  // increase; gradients can vanish numerically far out.
  std::optional<Step> coast(const Vec& x, double psi, bool feasible) {
    if (last_direction_.size() == 0) return std::nullopt;
    const double delta = std::min(2.0 * last_length_, cap(x));
    Vec xt = p_.ground.project(x + delta * last_direction_);
    if (!finite(xt) || xt.norm() <= x.norm()) return std::nullopt;
    const auto v = try_eval(psi_, xt);
    if (!v || *v > psi) return std::nullopt;
    if (feasible && !feasible_at(p_, xt)) return std::nullopt;
    last_length_ = delta;
    return Step{std::move(xt), *v, delta};
  }

  bool try_escape(Trajectory& t) {
    const int count = int(t.iterates.size());
    if (count < kTailLength) return false;
    const int first = count - kTailLength;
    for (int k = first; k < count; ++k) {
      if (t.iterates[k].norm() < o_.escape_floor) return false;
      if (!feasible_at(p_, t.iterates[k])) return false;
      if (k > first && t.iterates[k].norm() < t.iterates[k - 1].norm()) return false;
      if (k > first && t.values[k] > t.values[k - 1] + 1e-12) return false;
    }
    if (t.values[first] - t.values.back() >= tol_flat_) return false;

    const double limit = t.values.back();
    std::vector<EkelandWitness> witnesses;
    try {
      for (int k = count - 3; k < count; ++k) {
        const double eps = t.values[k] - limit + 1.0 / double(k + 1);
        DescentOptions wo = o_;
        wo.seed = mix(o_.seed ^ std::uint64_t(k));
        witnesses.push_back(ekeland_witness(p_, t.iterates[k], eps, wo));
      }
    } catch (const EkelandError&) {
      return false;
    }
    const bool small = std::any_of(witnesses.begin(), witnesses.end(), [](const auto& w) {
      return w.u_norm <= kEscapeStationarity;
    });
    if (!small) return false;

    finish(t, Trajectory::Status::Escaped, t.iterates.back());
    t.escape_direction = t.iterates.back() / t.iterates.back().norm();
    t.limit_estimate = limit;
    t.ekeland_witnesses = std::move(witnesses);
    return true;
  }

  const MinimaxProblem& p_;
  const DescentOptions& o_;
  Expr phi_;
  Expr psi_;
  double weight_;
  double tol_flat_ = 0.0;
  Vec last_direction_;
  double last_length_ = 0.5;
};

}  // namespace

std::string to_string(Trajectory::Status s) {
  switch (s) {
    case Trajectory::Status::Converged: return "converged";
    case Trajectory::Status::Escaped: return "escaped";
    case Trajectory::Status::BudgetExhausted: return "budget-exhausted";
    case Trajectory::Status::UnboundedBelow: return "unbounded-below";
  }
  return "unknown";
}

Trajectory minimize(const MinimaxProblem& p, const Vec& x0, const DescentOptions& options) {
  p.validate();
  if (x0.size() != p.dim) throw DimensionError("start point has the wrong dimension");
  if (!finite(x0)) throw DomainError("start point is not finite");
  if (options.budget < 0) throw PreconditionError("budget must be nonnegative");
  return Descender(p, options).run(x0);
}

std::vector<Trajectory> minimize_many(const MinimaxProblem& p, std::span<const Vec> starts,
                                      const DescentOptions& options, int workers) {
  std::vector<Trajectory> out(starts.size());
  detail::parallel_for(int(starts.size()), workers,
                       [&](int i) { out[i] = minimize(p, starts[i], options); });
  return out;
}

EkelandWitness ekeland_witness(const MinimaxProblem& p, const Vec& x0, double eps,
                               const DescentOptions& options) {
  p.validate();
  if (x0.size() != p.dim) throw DimensionError("start point has the wrong dimension");
  if (!(eps > 0.0) || !std::isfinite(eps)) throw PreconditionError("eps must be positive");
  if (!p.feasible(x0)) throw PreconditionError("Ekeland start point must be feasible");

  const Expr phi = p.phi();
  const double lambda = std::sqrt(eps);
  const double f0 = phi.eval(x0);
  const double slack = 1e-12 * (1.0 + std::abs(f0));

  EkelandWitness w;
  w.x0 = x0;
  w.eps = eps;
  w.lambda = lambda;
  Vec x1 = x0;
  double f1 = f0;

  auto perturbed_descent = [&] {
    for (int it = 0; it < kEkelandInner; ++it) {
      const Vec u = smallest_stationarity(p, phi, x1);
      const double norm = u.norm();
      if (!(norm > lambda) || !std::isfinite(norm)) return;
      const Vec d = -u / norm;
      bool moved = false;
      for (double delta = lambda; delta >= 1e-16 * (1.0 + x1.norm()); delta *= 0.5) {
        Vec xt = p.ground.project(x1 + delta * d);
        const double dist = (xt - x1).norm();
        if (dist == 0.0 || !feasible_at(p, xt)) continue;
        const auto v = try_eval(phi, xt);
        if (!v || *v + lambda * dist > f1 - 1e-4 * (norm - lambda) * dist) continue;
        x1 = std::move(xt);
        f1 = *v;
        moved = true;
        break;
      }
      if (!moved) return;
    }
  };

  std::optional<Vec> violation;
  for (int round = 0; round < kEkelandRounds; ++round) {
    perturbed_descent();
    std::mt19937_64 rng(mix(options.seed ^ mix(std::uint64_t(round) + 1)));
    const double tol = 1e-12 * (1.0 + std::abs(f1));
    violation.reset();
    double worst = 0.0;
    int accepted = 0;
    for (int attempt = 0; accepted < kEkelandSamples && attempt < 100 * kEkelandSamples;
         ++attempt) {
      const Vec x = p.ground.project(sample_ball(rng, x1, 10.0 * lambda));
      if (!feasible_at(p, x)) continue;
      const auto v = try_eval(phi, x);
      if (!v) continue;
      ++accepted;
      const double gap = f1 - (*v + lambda * (x - x1).norm());
      if (gap > tol && gap > worst) {
        worst = gap;
        violation = x;
      }
    }
    w.samples_checked = accepted;
    if (accepted < kEkelandSamples) {
      w.x1 = x1;
      throw EkelandError("could not draw enough feasible samples around the witness", w,
                         std::nullopt);
    }
    if (!violation) break;
    // A violating sample lies strictly inside the Ekeland level set of x1.
    x1 = *violation;
    f1 = phi.eval(x1);
  }

  w.x1 = x1;
  w.u = smallest_stationarity(p, phi, x1);
  w.u_norm = w.u.norm();
  w.value_decrease = f1 <= f0 + slack;
  w.within_lambda = (x1 - x0).norm() <= lambda * (1.0 + 1e-12) + 1e-15;
  w.perturbed_min = !violation.has_value();
  if (!w.perturbed_min)
    throw EkelandError("sampled point violates the perturbed minimality check", w, violation);
  if (!w.value_decrease) throw EkelandError("witness increased the objective", w, std::nullopt);
  if (!w.within_lambda)
    throw EkelandError("witness left the lambda ball; is the start eps-optimal?", w,
                       std::nullopt);
  if (!(w.u_norm <= lambda + options.lp_tol))
    throw EkelandError("no subgradient within lambda at the witness", w, std::nullopt);
  return w;
}

EscapeEvidence escape_evidence(const Trajectory& t, const SamplingPlan& plan) {
  if (t.status != Trajectory::Status::Escaped) throw PreconditionError("trajectory not escaped");
  EscapeEvidence e;
  const std::size_t count = t.iterates.size();
  const std::size_t first = count >= kTailLength ? count - kTailLength : 0;
  for (std::size_t k = first; k < count; ++k) {
    if (t.iterates[k].norm() < plan.escape_floor) continue;
    e.tail.push_back(t.iterates[k]);
    e.tail_values.push_back(t.values[k]);
  }
  e.direction = t.escape_direction;
  e.limit_estimate = t.limit_estimate;
  e.witnesses = t.ekeland_witnesses;
  e.smallest_u_norm = std::numeric_limits<double>::infinity();
  for (const auto& w : e.witnesses) e.smallest_u_norm = std::min(e.smallest_u_norm, w.u_norm);
  return e;
}

void write_trajectory_csv(std::ostream& out, const Trajectory& t) {
  const int n = t.iterates.empty() ? 0 : int(t.iterates.front().size());
  out << "k";
  for (int i = 1; i <= n; ++i) out << ",x_" << i;
  out << ",phi\n";
  out << std::setprecision(17);
  for (std::size_t k = 0; k < t.iterates.size(); ++k) {
    out << k;
    for (int i = 0; i < n; ++i) out << ',' << t.iterates[k][i];
    out << ',' << t.values[k] << '\n';
  }
}

}  // namespace atinf
