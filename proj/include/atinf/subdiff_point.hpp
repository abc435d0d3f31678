#pragma once

#include <Eigen/Core>

#include "atinf/expr.hpp"
#include "atinf/geometry.hpp"

namespace atinf {

inline constexpr std::size_t kMaxActiveBranches = 64;

/// The ground set: all of R^n, a box with possibly infinite bounds, or a
/// polyhedron {x : A x <= b}.
class GroundSet {
 public:
  enum class Kind { FullSpace, Box, Polyhedron };

  static GroundSet full_space(int dim);
  static GroundSet box(Vec lower, Vec upper);
  static GroundSet polyhedron(Eigen::MatrixXd A, Vec b);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const Eigen::MatrixXd& A() const { return A_; }
  const Vec& b() const { return b_; }

  bool contains(const Vec& x, double tol = 1e-9) const;
  /// Euclidean projection. Exact for full space and boxes; for polyhedra,
  /// Dykstra's method followed by an exact solve on the detected active face.
  Vec project(const Vec& x) const;

 private:
  Kind kind_ = Kind::FullSpace;
  int dim_ = 0;
  Vec lower_, upper_;
  Eigen::MatrixXd A_;
  Vec b_;
};

/// co of the gradients of every smooth selection active at x (within
/// `rel_tol`). A singleton at smooth points. Throws PreconditionError when
/// more than kMaxActiveBranches selections are active.
VPolytope subdiff_at(const Expr& e, const Vec& x, double rel_tol = kActivityTol);

/// Generators of the normal cone of the ground set at x (unit outward normals
/// of the active faces; the zero cone in the interior). A row is active when
/// |a.x - b| <= 1e-8 (1 + |b|); with `scale_by_norm` the slack also grows with
/// |a| |x|, which far-out samples need.
VCone normal_cone_at(const GroundSet& omega, const Vec& x, bool scale_by_norm = false);

}  // namespace atinf
