#include "atinf/problem.hpp"

#include <cmath>
#include <limits>

#include "atinf/errors.hpp"

namespace atinf {

namespace {

void check_family(const std::vector<Expr>& es, int dim, const char* what) {
  for (const Expr& e : es) {
    if (e.empty()) throw PreconditionError(std::string("empty expression among ") + what);
    if (e.dim() != dim) throw DimensionError(std::string(what) + " must share the problem dimension");
  }
}

}  // namespace

void MinimaxProblem::validate() const {
  if (dim < 1) throw DimensionError("problem dimension must be positive");
  if (objectives.empty()) throw PreconditionError("a minimax problem needs at least one objective");
  check_family(objectives, dim, "objectives");
  check_family(constraints, dim, "constraints");
  if (ground.dim() != dim) throw DimensionError("ground set dimension differs from the problem");
}

Expr MinimaxProblem::phi() const { return Expr::max(objectives); }

double MinimaxProblem::max_violation(const Vec& x) const {
  double v = -std::numeric_limits<double>::infinity();
  for (const Expr& g : constraints) v = std::max(v, g.eval(x));
  return v;
}

bool MinimaxProblem::feasible(const Vec& x, double tol) const {
  if (!ground.contains(x, tol)) return false;
  return constraints.empty() || max_violation(x) <= tol * (1.0 + x.norm());
}

void VectorProblem::validate() const {
  if (dim < 1) throw DimensionError("problem dimension must be positive");
  if (objectives.size() < 2) throw PreconditionError("a vector problem needs at least two objectives");
  check_family(objectives, dim, "objectives");
  check_family(constraints, dim, "constraints");
  if (ground.dim() != dim) throw DimensionError("ground set dimension differs from the problem");
}

Vec VectorProblem::values(const Vec& x) const {
  Vec y(int(objectives.size()));
  for (std::size_t i = 0; i < objectives.size(); ++i) y[int(i)] = objectives[i].eval(x);
  return y;
}

}  // namespace atinf
