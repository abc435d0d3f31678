#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "atinf/expr.hpp"
#include "atinf/geometry.hpp"
#include "atinf/subdiff_point.hpp"

namespace atinf {

/// Discretization of "x -> infinity": rays R_k d for k = 0..K with
/// R_k = R_0 rho^k, plus jittered copies of every ray.
struct SamplingPlan {
  std::vector<Vec> directions;
  double radius_base = 10.0;
  double radius_ratio = 2.0;
  int radius_steps = 20;
  std::uint64_t seed = 0;
  /// Relative clustering tolerance; the absolute value is
  /// cluster_tol * (1 + max |u|) over the candidate limit points.
  double cluster_tol = 1e-6;
  double escape_floor = 1e3;
  /// Per-step direction jitter of the perturbed rays.
  double jitter = 0.05;
  double lp_tol = 1e-8;
  /// Worker threads for per-direction sampling. Results never depend on it.
  int workers = 1;

  /// D = max(2n, 16) quasi-uniform directions, R_0 = 10, rho = 2, K = 20.
  static SamplingPlan defaults(int dim, std::uint64_t seed = 0);
  /// Same as defaults() with a custom direction count.
  static SamplingPlan with_directions(int dim, int count, std::uint64_t seed = 0);

  int dim() const { return directions.empty() ? 0 : int(directions.front().size()); }
  std::vector<double> radii() const;
  /// Throws PreconditionError unless rho > 1, K >= 8, D >= 2n and every
  /// direction has unit norm.
  void validate() const;
};

/// Deterministic, roughly uniform unit directions (antipodal pairs; exact axes
/// in one and two dimensions).
std::vector<Vec> quasi_uniform_directions(int dim, int count, std::uint64_t seed);

struct DirectionDiagnostic {
  int direction = 0;
  bool perturbed = false;
  int valid_samples = 0;
  /// "converged", "unsettled", "diverged" or "invalid".
  std::string status;
};

struct AsymptoticSet {
  /// Estimate of the limiting subdifferential at infinity (or of the normal
  /// cone's unit section plus 0).
  VPolytope bounded_part;
  /// Estimate of the singular subdifferential at infinity.
  VCone recession_cone;
  bool lipschitz_at_infinity = false;
  double lipschitz_constant = 0.0;
  double lipschitz_radius = 0.0;
  int samples_used = 0;
  std::vector<DirectionDiagnostic> diagnostics;
  /// Candidate limit points before clustering (one entry per vertex sampled
  /// on a ray tail).
  std::vector<Vec> tail_samples;
};

/// Outer-limit estimate of the subdifferentials of e at infinity.
AsymptoticSet subdiff_at_infinity(const Expr& e, const SamplingPlan& plan);

/// Outer-limit estimate of the normal cone of omega at infinity. The cone's
/// unit generators form recession_cone; bounded_part holds them plus 0.
/// Throws PreconditionError("Omega appears bounded") when no projected sample
/// reaches the escape floor.
AsymptoticSet normal_cone_at_infinity(const GroundSet& omega, const SamplingPlan& plan);

struct InclusionReport {
  enum class Status { Holds, Violated, Inconclusive, HypothesisUnmet };
  Status status = Status::Inconclusive;
  /// One-sided Hausdorff excess of the left side over the right side.
  double violation = 0.0;
  /// For the max rule: the singular estimate of the max is {0}.
  bool singular_is_zero = true;
  std::string note;
  AsymptoticSet combined;
  std::vector<AsymptoticSet> parts;
  VPolytope rhs;
};

std::string to_string(InclusionReport::Status s);

/// Checks d(e1 + e2)(inf) within d e1(inf) + d e2(inf). Inconclusive when the
/// recession estimates meet oppositely away from 0.
InclusionReport check_sum_rule(const Expr& e1, const Expr& e2, const SamplingPlan& plan,
                               double slack = 1e-6);

/// Checks d(max e_i)(inf) within co of the union of d e_i(inf), and that the
/// singular estimate of the max is {0}. HypothesisUnmet when some e_i is not
/// Lipschitz at infinity.
InclusionReport max_rule_at_infinity(std::span<const Expr> es, const SamplingPlan& plan,
                                     double slack = 1e-6);

}  // namespace atinf
