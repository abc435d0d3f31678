#pragma once

#include <vector>

#include "atinf/expr.hpp"
#include "atinf/subdiff_point.hpp"

namespace atinf {

/// min over F of max_i f_i(x), with F = {x in ground : g_j(x) <= 0}.
struct MinimaxProblem {
  std::vector<Expr> objectives;
  std::vector<Expr> constraints;
  GroundSet ground;
  int dim = 0;

  /// Throws unless m >= 1 and every expression and the ground set share dim.
  void validate() const;

  /// max_i f_i as a single expression.
  Expr phi() const;
  double phi_at(const Vec& x) const { return phi().eval(x); }
  /// Largest constraint value (-inf without constraints).
  double max_violation(const Vec& x) const;
  bool feasible(const Vec& x, double tol = 1e-9) const;
};

/// Min over F of (f_1, ..., f_m) with respect to the nonnegative orthant.
struct VectorProblem {
  std::vector<Expr> objectives;
  std::vector<Expr> constraints;
  GroundSet ground;
  int dim = 0;

  /// Throws unless m >= 2 and dimensions agree.
  void validate() const;
  Vec values(const Vec& x) const;
};

}  // namespace atinf
