#include "atinf/subdiff_point.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "atinf/errors.hpp"

namespace atinf {

namespace {

bool row_active(double ax, double b, double extra = 0.0) {
  return std::fabs(ax - b) <= 1e-8 * (1.0 + std::fabs(b) + extra);
}

}  // namespace

GroundSet GroundSet::full_space(int dim) {
  if (dim < 1) throw DimensionError("ground set dimension must be positive");
  GroundSet g;
  g.kind_ = Kind::FullSpace;
  g.dim_ = dim;
  return g;
}

GroundSet GroundSet::box(Vec lower, Vec upper) {
  if (lower.size() != upper.size() || lower.size() == 0)
    throw DimensionError("box bounds must have equal positive length");
  for (int i = 0; i < lower.size(); ++i) {
    if (std::isnan(lower[i]) || std::isnan(upper[i]) || lower[i] > upper[i])
      throw PreconditionError("box bounds must satisfy lower <= upper");
  }
  GroundSet g;
  g.kind_ = Kind::Box;
  g.dim_ = int(lower.size());
  g.lower_ = std::move(lower);
  g.upper_ = std::move(upper);
  return g;
}

GroundSet GroundSet::polyhedron(Eigen::MatrixXd A, Vec b) {
  if (A.rows() != b.size() || A.cols() == 0)
    throw DimensionError("polyhedron needs A (p x n) and b (p)");
  for (int i = 0; i < A.rows(); ++i) {
    if (A.row(i).norm() == 0.0) throw PreconditionError("polyhedron rows must be nonzero");
  }
  GroundSet g;
  g.kind_ = Kind::Polyhedron;
  g.dim_ = int(A.cols());
  g.A_ = std::move(A);
  g.b_ = std::move(b);
  return g;
}

bool GroundSet::contains(const Vec& x, double tol) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match the ground set");
  switch (kind_) {
    case Kind::FullSpace: return true;
    case Kind::Box:
      for (int i = 0; i < dim_; ++i)
        if (x[i] < lower_[i] - tol * (1.0 + std::fabs(x[i])) ||
            x[i] > upper_[i] + tol * (1.0 + std::fabs(x[i])))
          return false;
      return true;
    case Kind::Polyhedron: {
      const Vec ax = A_ * x;
      for (int i = 0; i < ax.size(); ++i)
        if (ax[i] > b_[i] + tol * (1.0 + std::fabs(b_[i]) + x.norm() * A_.row(i).norm())) return false;
      return true;
    }
  }
  return false;
}

Vec GroundSet::project(const Vec& x) const {
  if (x.size() != dim_) throw DimensionError("point dimension does not match the ground set");
  switch (kind_) {
    case Kind::FullSpace: return x;
    case Kind::Box: return x.cwiseMax(lower_).cwiseMin(upper_);
    case Kind::Polyhedron: break;
  }
  if (contains(x, 0.0)) return x;

  // Dykstra's alternating projections onto the half-spaces.
  const int p = int(A_.rows());
  Vec y = x;
  std::vector<Vec> incr(p, Vec::Zero(dim_));
  const double scale = 1.0 + x.norm();
  for (int sweep = 0; sweep < 5000; ++sweep) {
    const Vec prev = y;
    for (int i = 0; i < p; ++i) {
      const Vec z = y + incr[i];
      const double viol = A_.row(i).dot(z) - b_[i];
      const Vec proj = viol > 0 ? Vec(z - viol / A_.row(i).squaredNorm() * A_.row(i).transpose()) : z;
      incr[i] = z - proj;
      y = proj;
    }
    if ((y - prev).norm() <= 1e-14 * scale) break;
  }

  // Snap onto the face spanned by the nearly active rows and keep the result
  // when it is feasible and not farther from x.
  std::vector<int> act;
  for (int i = 0; i < p; ++i)
    if (std::fabs(A_.row(i).dot(y) - b_[i]) <= 1e-6 * (scale + std::fabs(b_[i]))) act.push_back(i);
  if (!act.empty()) {
    Eigen::MatrixXd Aa(int(act.size()), dim_);
    Vec ba(int(act.size()));
    for (std::size_t k = 0; k < act.size(); ++k) {
      Aa.row(int(k)) = A_.row(act[k]);
      ba[int(k)] = b_[act[k]];
    }
    // x - Aa^T lambda with Aa (x - Aa^T lambda) = ba, least-squares in lambda.
    const Eigen::MatrixXd G = Aa * Aa.transpose();
    const Vec lambda = G.completeOrthogonalDecomposition().solve(Aa * x - ba);
    const Vec snapped = x - Aa.transpose() * lambda;
    if (snapped.allFinite() && contains(snapped, 1e-12) &&
        (snapped - x).norm() <= (y - x).norm() * (1.0 + 1e-9) + 1e-12)
      return snapped;
  }
  return y;
}

VPolytope subdiff_at(const Expr& e, const Vec& x, double rel_tol) {
  const std::vector<ActiveProfile> branches = e.smooth_selections(x, rel_tol, kMaxActiveBranches);
  std::vector<Vec> grads;
  grads.reserve(branches.size());
  for (const auto& b : branches) grads.push_back(e.grad_smooth(x, b));
  const std::size_t raw = grads.size();
  double scale = 0.0;
  for (const Vec& g : grads) scale = std::max(scale, g.lpNorm<Eigen::Infinity>());
  VPolytope p = VPolytope::from_points(e.dim(), std::move(grads), 1e-12 * (1.0 + scale));
  p.degenerate = p.points.size() < raw;
  return p;
}

VCone normal_cone_at(const GroundSet& omega, const Vec& x, bool scale_by_norm) {
  if (!omega.contains(x, 1e-9)) throw PreconditionError("normal_cone_at: point is not in the ground set");
  const int n = omega.dim();
  const double xn = scale_by_norm ? x.norm() : 0.0;
  std::vector<Vec> gens;
  switch (omega.kind()) {
    case GroundSet::Kind::FullSpace: break;
    case GroundSet::Kind::Box:
      for (int i = 0; i < n; ++i) {
        if (std::isfinite(omega.lower()[i]) && row_active(x[i], omega.lower()[i], xn))
          gens.push_back(-Vec::Unit(n, i));
        if (std::isfinite(omega.upper()[i]) && row_active(x[i], omega.upper()[i], xn))
          gens.push_back(Vec::Unit(n, i));
      }
      break;
    case GroundSet::Kind::Polyhedron:
      for (int i = 0; i < omega.A().rows(); ++i) {
        const Vec a = omega.A().row(i).transpose();
        if (row_active(a.dot(x), omega.b()[i], a.norm() * xn)) gens.push_back(a);
      }
      break;
  }
  return VCone::from_generators(n, std::move(gens), 1e-12, /*normalize=*/true);
}

}  // namespace atinf
