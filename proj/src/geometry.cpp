#include "atinf/geometry.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

#include "atinf/errors.hpp"

namespace atinf {

namespace {

void check_dim(const Vec& v, int dim) {
  if (v.size() != dim)
    throw DimensionError("vector of dimension " + std::to_string(v.size()) + " in a set of dimension " +
                         std::to_string(dim));
}

}  // namespace

VPolytope VPolytope::from_points(int dim, std::vector<Vec> points, double tol) {
  VPolytope p;
  p.dim = dim;
  p.tol = tol;
  for (Vec& v : points) {
    check_dim(v, dim);
    const bool dup = std::any_of(p.points.begin(), p.points.end(),
                                 [&](const Vec& w) { return (w - v).norm() <= tol; });
    if (!dup) p.points.push_back(std::move(v));
  }
  return p;
}

VCone VCone::from_generators(int dim, std::vector<Vec> gens, double tol, bool normalize) {
  VCone c;
  c.dim = dim;
  for (Vec& g : gens) {
    check_dim(g, dim);
    if (normalize) {
      const double n = g.norm();
      if (n <= tol) continue;
      g /= n;
    }
    const bool dup = std::any_of(c.generators.begin(), c.generators.end(),
                                 [&](const Vec& w) { return (w - g).norm() <= tol; });
    if (!dup) c.generators.push_back(std::move(g));
  }
  return c;
}

bool VCone::is_zero() const {
  return std::all_of(generators.begin(), generators.end(),
                     [](const Vec& g) { return g.norm() == 0.0; });
}

// ---------------------------------------------------------------------------
// Phase-1 simplex.

LpResult solve_feasibility(const Eigen::MatrixXd& A, const Vec& b, double tol) {
  const int m = int(A.rows());
  const int n = int(A.cols());
  if (b.size() != m) throw DimensionError("LP right-hand side has wrong length");
  LpResult res;
  res.solution = Vec::Zero(n);
  if (m == 0) {
    res.feasible = true;
    return res;
  }

  // Tableau [A | I | b] with rows flipped so that b >= 0; objective row holds
  // reduced costs of "minimize sum of artificials".
  const int cols = n + m;
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m + 1, cols + 1);
  for (int i = 0; i < m; ++i) {
    const double s = b[i] < 0 ? -1.0 : 1.0;
    T.row(i).head(n) = s * A.row(i);
    T(i, n + i) = 1.0;
    T(i, cols) = s * b[i];
  }
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;
  for (int j = 0; j <= cols; ++j) {
    double sum = 0;
    for (int i = 0; i < m; ++i) sum += T(i, j);
    T(m, j) = (j >= n && j < cols) ? 0.0 : -sum;
  }

  constexpr double kPivotTol = 1e-11;
  const int guard = 50 * (m + cols) + 1000;
  for (;;) {
    if (++res.iterations > guard)
      throw Error("LP cycling guard triggered after " + std::to_string(guard) + " pivots (m=" +
                  std::to_string(m) + ", n=" + std::to_string(n) + ")");
    // Bland: lowest-index column with negative reduced cost.
    int enter = -1;
    for (int j = 0; j < cols; ++j) {
      if (T(m, j) < -kPivotTol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    int leave = -1;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      if (T(i, enter) > kPivotTol) {
        const double ratio = T(i, cols) / T(i, enter);
        if (ratio < best - 1e-14 ||
            (std::fabs(ratio - best) <= 1e-14 && basis[i] < basis[leave])) {
          best = ratio;
          leave = i;
        }
      }
    }
    if (leave < 0) break;  // unbounded direction cannot occur in phase 1
    T.row(leave) /= T(leave, enter);
    for (int i = 0; i <= m; ++i) {
      if (i != leave && T(i, enter) != 0.0) T.row(i) -= T(i, enter) * T.row(leave);
    }
    basis[leave] = enter;
  }

  res.phase1_objective = std::max(0.0, -T(m, cols));
  std::vector<int> support;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n) {
      res.solution[basis[i]] = std::max(0.0, T(i, cols));
      support.push_back(basis[i]);
    }
  }
  res.feasible = res.phase1_objective <= tol;
  if (!res.feasible || support.empty()) return res;

  // Polish on the support; keep whichever reconstruction is tighter.
  Eigen::MatrixXd As(m, int(support.size()));
  for (std::size_t k = 0; k < support.size(); ++k) As.col(int(k)) = A.col(support[k]);
  const Vec ys = As.colPivHouseholderQr().solve(b);
  if (ys.allFinite() && ys.minCoeff() >= -1e-12) {
    Vec y = Vec::Zero(n);
    for (std::size_t k = 0; k < support.size(); ++k) y[support[k]] = std::max(0.0, ys[int(k)]);
    if ((A * y - b).norm() < (A * res.solution - b).norm()) res.solution = y;
  }
  return res;
}

// ---------------------------------------------------------------------------

MembershipCertificate zero_in_sum(std::span<const VPolytope> hulls,
                                  std::span<const VCone> cones, const VCone& ground,
                                  double lp_tol) {
  int dim = ground.dim;
  for (const auto& h : hulls) dim = h.dim;
  for (const auto& c : cones) dim = c.dim;
  auto check = [&](int d) {
    if (d != dim) throw DimensionError("zero_in_sum: sets have different dimensions");
  };
  for (const auto& h : hulls) check(h.dim);
  for (const auto& c : cones) check(c.dim);
  if (!ground.generators.empty() || ground.dim > 0) check(ground.dim);

  MembershipCertificate cert;
  cert.mu.resize(hulls.size());
  cert.nu.resize(cones.size());
  cert.alpha.assign(hulls.size(), 0.0);
  cert.beta.assign(cones.size(), 0.0);
  cert.kappa.assign(ground.generators.size(), 0.0);
  for (std::size_t i = 0; i < hulls.size(); ++i) cert.mu[i].assign(hulls[i].points.size(), 0.0);
  for (std::size_t j = 0; j < cones.size(); ++j) cert.nu[j].assign(cones[j].generators.size(), 0.0);

  const bool pure_cone = hulls.empty();
  int nh = 0, nc = 0;
  for (const auto& h : hulls) nh += int(h.points.size());
  for (const auto& c : cones) nc += int(c.generators.size());
  const int ng = int(ground.generators.size());

  if (!pure_cone && nh == 0) {
    cert.margin = 1.0;
    cert.note = "every hull is empty";
    return cert;
  }
  if (pure_cone && nc == 0) {
    cert.margin = 1.0;
    cert.note = "no cone generators to normalize";
    return cert;
  }

  const int ncols = nh + nc + ng;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim + 1, ncols);
  Vec b = Vec::Zero(dim + 1);
  b[dim] = 1.0;
  int col = 0;
  for (const auto& h : hulls) {
    for (const Vec& v : h.points) {
      A.col(col).head(dim) = v;
      A(dim, col) = 1.0;
      ++col;
    }
  }
  for (const auto& c : cones) {
    for (const Vec& w : c.generators) {
      A.col(col).head(dim) = w;
      if (pure_cone) A(dim, col) = 1.0;
      ++col;
    }
  }
  for (const Vec& g : ground.generators) A.col(col++).head(dim) = g;

  const LpResult lp = solve_feasibility(A, b, lp_tol);
  if (!lp.feasible) {
    cert.margin = lp.phase1_objective;
    return cert;
  }

  col = 0;
  Vec sum = Vec::Zero(dim);
  for (std::size_t i = 0; i < hulls.size(); ++i) {
    for (std::size_t s = 0; s < hulls[i].points.size(); ++s, ++col) {
      cert.mu[i][s] = lp.solution[col];
      cert.alpha[i] += lp.solution[col];
      sum += lp.solution[col] * hulls[i].points[s];
    }
  }
  for (std::size_t j = 0; j < cones.size(); ++j) {
    for (std::size_t t = 0; t < cones[j].generators.size(); ++t, ++col) {
      cert.nu[j][t] = lp.solution[col];
      cert.beta[j] += lp.solution[col];
      sum += lp.solution[col] * cones[j].generators[t];
      if (lp.solution[col] > kConeWeightCap) cert.near_degenerate = true;
    }
  }
  for (int r = 0; r < ng; ++r, ++col) {
    cert.kappa[r] = lp.solution[col];
    sum += lp.solution[col] * ground.generators[r];
    if (lp.solution[col] > kConeWeightCap) cert.near_degenerate = true;
  }
  cert.residual = sum.norm();
  if (cert.residual > lp_tol) {
    cert.feasible = false;
    cert.margin = cert.residual;
    cert.note = "simplex reported feasibility but the reconstruction exceeds lp_tol";
    return cert;
  }
  cert.feasible = true;
  return cert;
}

bool opposite_cones_meet(const VCone& a, const VCone& b, double tol) {
  const int na = int(a.generators.size());
  const int nb = int(b.generators.size());
  if (na == 0 || nb == 0) return false;
  const int dim = a.dim;
  // u = sum nu_a a_t = -sum nu_b b_t with one coordinate of u pinned to +-1.
  for (int i = 0; i < dim; ++i) {
    for (double s : {1.0, -1.0}) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim + 1, na + nb);
      Vec rhs = Vec::Zero(dim + 1);
      for (int t = 0; t < na; ++t) {
        A.col(t).head(dim) = a.generators[t];
        A(dim, t) = a.generators[t][i];
      }
      for (int t = 0; t < nb; ++t) A.col(na + t).head(dim) = b.generators[t];
      rhs[dim] = s;
      if (solve_feasibility(A, rhs, tol).feasible) return true;
    }
  }
  return false;
}

// ---------------------------------------------------------------------------
// Least-norm point via NNLS.

namespace {

// Lawson-Hanson: min ||E z - f|| subject to z >= 0.
Vec nnls(const Eigen::MatrixXd& E, const Vec& f) {
  const int n = int(E.cols());
  Vec z = Vec::Zero(n);
  std::vector<char> passive(n, 0);
  const double tol = 10.0 * std::numeric_limits<double>::epsilon() * E.norm() *
                     std::max<double>(E.rows(), n) * std::max(1.0, f.norm());
  Vec w = E.transpose() * (f - E * z);

  auto solve_passive = [&]() {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    Eigen::MatrixXd Ep(E.rows(), int(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) Ep.col(int(k)) = E.col(idx[k]);
    const Vec sp = Ep.colPivHouseholderQr().solve(f);
    Vec s = Vec::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) s[idx[k]] = sp[int(k)];
    return s;
  };

  const int max_outer = 3 * n + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    int j_max = -1;
    double w_max = tol;
    for (int j = 0; j < n; ++j) {
      if (!passive[j] && w[j] > w_max) {
        w_max = w[j];
        j_max = j;
      }
    }
    if (j_max < 0) break;
    passive[j_max] = 1;
    for (int inner = 0; inner < 3 * n + 10; ++inner) {
      Vec s = solve_passive();
      bool all_pos = true;
      for (int j = 0; j < n; ++j)
        if (passive[j] && s[j] <= 0) all_pos = false;
      if (all_pos) {
        z = s;
        break;
      }
      double step = 1.0;
      for (int j = 0; j < n; ++j) {
        if (passive[j] && s[j] <= 0) step = std::min(step, z[j] / (z[j] - s[j]));
      }
      z += step * (s - z);
      for (int j = 0; j < n; ++j) {
        if (passive[j] && z[j] <= tol) {
          passive[j] = 0;
          z[j] = 0.0;
        }
      }
    }
    w = E.transpose() * (f - E * z);
  }
  return z.cwiseMax(0.0);
}

}  // namespace

MinNormPoint min_norm_point(std::span<const Vec> hull_points, std::span<const Vec> cone_generators) {
  if (hull_points.empty()) throw PreconditionError("min_norm_point needs at least one hull point");
  const int dim = int(hull_points.front().size());
  const int nh = int(hull_points.size());
  const int nc = int(cone_generators.size());
  double scale = 1.0;
  for (const Vec& v : hull_points) scale = std::max(scale, v.norm());
  for (const Vec& v : cone_generators) scale = std::max(scale, v.norm());
  // With z = t (mu, nu), |E z - f|^2 = t^2 |P mu + W nu|^2 + c^2 (t - 1)^2, so
  // for any row weight c > 0 the minimizer renormalizes to the exact answer.
  const double big = scale;

  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(dim + 1, nh + nc);
  Vec f = Vec::Zero(dim + 1);
  for (int s = 0; s < nh; ++s) {
    check_dim(hull_points[s], dim);
    E.col(s).head(dim) = hull_points[s];
    E(dim, s) = big;
  }
  for (int t = 0; t < nc; ++t) {
    check_dim(cone_generators[t], dim);
    E.col(nh + t).head(dim) = cone_generators[t];
  }
  f[dim] = big;
  Vec z = nnls(E, f);

  double total = z.head(nh).sum();
  MinNormPoint out;
  if (!(total > 0)) {
    // Degenerate solve; fall back to the shortest vertex.
    int best = 0;
    for (int s = 1; s < nh; ++s)
      if (hull_points[s].norm() < hull_points[best].norm()) best = s;
    z.setZero();
    z[best] = 1.0;
    total = 1.0;
  }
  z /= total;
  out.point = Vec::Zero(dim);
  for (int s = 0; s < nh; ++s) {
    out.hull_weights.push_back(z[s]);
    out.point += z[s] * hull_points[s];
  }
  for (int t = 0; t < nc; ++t) {
    out.cone_weights.push_back(z[nh + t]);
    out.point += z[nh + t] * cone_generators[t];
  }
  return out;
}

double distance_to_hull(const Vec& p, const VPolytope& hull) {
  if (hull.empty()) throw PreconditionError("distance to an empty hull");
  std::vector<Vec> shifted;
  shifted.reserve(hull.points.size());
  for (const Vec& v : hull.points) shifted.push_back(v - p);
  return min_norm_point(shifted).point.norm();
}

VPolytope minkowski_sum(const VPolytope& a, const VPolytope& b) {
  if (a.dim != b.dim) throw DimensionError("minkowski_sum: dimension mismatch");
  std::vector<Vec> pts;
  pts.reserve(a.points.size() * b.points.size());
  for (const Vec& v : a.points)
    for (const Vec& w : b.points) pts.push_back(v + w);
  return VPolytope::from_points(a.dim, std::move(pts), std::max(a.tol, b.tol));
}

double support(const VPolytope& a, const Vec& d) {
  double s = -std::numeric_limits<double>::infinity();
  for (const Vec& v : a.points) s = std::max(s, v.dot(d));
  return s;
}

std::vector<Vec> direction_grid(int dim) {
  std::vector<Vec> out;
  constexpr double kLevels[] = {-1.5, -0.5, 0.5, 1.5};
  std::vector<int> digit(dim, 0);
  for (;;) {
    Vec d(dim);
    for (int i = 0; i < dim; ++i) d[i] = kLevels[digit[i]];
    out.push_back(d.normalized());
    if (out.size() >= 4096) break;
    int k = 0;
    while (k < dim && ++digit[k] == 4) digit[k++] = 0;
    if (k == dim) break;
  }
  return out;
}

double hausdorff_excess(const VPolytope& a, const VPolytope& b) {
  if (a.empty() || b.empty()) throw PreconditionError("hausdorff distance of an empty set");
  if (a.dim != b.dim) throw DimensionError("hausdorff: dimension mismatch");
  // The excess of a convex hull is attained at a vertex; the support-function
  // grid only ever gives a lower bound and guards the vertex computation.
  double h = 0.0;
  for (const Vec& v : a.points) h = std::max(h, distance_to_hull(v, b));
  for (const Vec& d : direction_grid(a.dim)) h = std::max(h, support(a, d) - support(b, d));
  return h;
}

double hausdorff(const VPolytope& a, const VPolytope& b) {
  return std::max(hausdorff_excess(a, b), hausdorff_excess(b, a));
}

}  // namespace atinf
