#pragma once

#include <Eigen/Core>

#include <span>
#include <string>
#include <vector>

#include "atinf/expr.hpp"

namespace atinf {

/// Convex hull of finitely many points. An empty point list is the empty set.
struct VPolytope {
  int dim = 0;
  std::vector<Vec> points;
  double tol = 1e-12;
  /// Set when distinct smooth pieces produced coinciding gradients, so the
  /// hull may be a proper superset of the exact subdifferential.
  bool degenerate = false;

  /// Deduplicates points closer than `tol`.
  static VPolytope from_points(int dim, std::vector<Vec> points, double tol = 1e-12);

  bool empty() const { return points.empty(); }
};

/// Positive hull of finitely many generators; no generators is the zero cone.
struct VCone {
  int dim = 0;
  std::vector<Vec> generators;

  /// Deduplicates generators. With `normalize`, nonzero generators are scaled
  /// to unit length first (deduplication up to positive scaling) and zero
  /// generators are dropped.
  static VCone from_generators(int dim, std::vector<Vec> gens, double tol = 1e-12,
                               bool normalize = false);

  bool is_zero() const;
};

struct LpResult {
  bool feasible = false;
  Vec solution;
  double phase1_objective = 0.0;
  int iterations = 0;
};

/// Decides whether {y >= 0 : A y = b} is nonempty with a dense phase-1 simplex
/// using Bland's rule. On success the solution is polished by a least-squares
/// solve on its support. Throws Error if the iteration guard trips.
LpResult solve_feasibility(const Eigen::MatrixXd& A, const Vec& b, double tol = 1e-9);

struct MembershipCertificate {
  bool feasible = false;
  std::vector<std::vector<double>> mu;     // per hull i, per point s
  std::vector<std::vector<double>> nu;     // per cone j, per generator t
  std::vector<double> kappa;               // per ground generator
  std::vector<double> alpha;               // sum_s mu[i][s]
  std::vector<double> beta;                // sum_t nu[j][t]
  double residual = 0.0;                   // norm of the reconstructed sum
  double margin = 0.0;                     // phase-1 objective when infeasible
  bool near_degenerate = false;            // some cone weight above kConeWeightCap
  std::string note;
};

inline constexpr double kConeWeightCap = 1e6;

/// Tests 0 in sum_i co(hulls) + sum_j pos(cones) + pos(ground), with simplex
/// weights over all hull points together (the hull of their union).
///
/// With an empty `hulls` list the call is a pure cone test: the cone weights
/// are normalized to sum to one instead, so feasibility means a nontrivial
/// nonnegative combination of `cones` plus a ground normal reaches zero.
/// A nonempty list whose hulls are all empty is infeasible outright.
MembershipCertificate zero_in_sum(std::span<const VPolytope> hulls,
                                  std::span<const VCone> cones, const VCone& ground,
                                  double lp_tol = 1e-8);

/// True when pos(a) and -pos(b) share a nonzero vector.
bool opposite_cones_meet(const VCone& a, const VCone& b, double tol = 1e-9);

/// Least-norm point of co(hull_points) + pos(cone_generators), by
/// Lawson-Hanson NNLS on the system with an appended row of ones for the hull
/// weights; rescaling the solution onto the simplex gives the exact minimizer.
struct MinNormPoint {
  Vec point;
  std::vector<double> hull_weights;
  std::vector<double> cone_weights;
};
MinNormPoint min_norm_point(std::span<const Vec> hull_points,
                            std::span<const Vec> cone_generators = {});

double distance_to_hull(const Vec& p, const VPolytope& hull);

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b);

/// max over a in co(a) of dist(a, co(b)).
double hausdorff_excess(const VPolytope& a, const VPolytope& b);
/// Symmetric Hausdorff distance between the hulls.
double hausdorff(const VPolytope& a, const VPolytope& b);

/// Support function of co(points) in direction d.
double support(const VPolytope& a, const Vec& d);

/// Deterministic unit directions: the normalized grid {-1.5,-0.5,0.5,1.5}^n,
/// truncated to 4096 entries.
std::vector<Vec> direction_grid(int dim);

}  // namespace atinf
