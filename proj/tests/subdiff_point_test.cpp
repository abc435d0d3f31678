#include <doctest.h>

#include <random>
#include <string>

#include "atinf/errors.hpp"
#include "atinf/subdiff_point.hpp"
#include "oracles.hpp"

using namespace atinf;
using oracle::vec;

namespace {

Eigen::MatrixXd rows(std::initializer_list<std::initializer_list<double>> r) {
  Eigen::MatrixXd A(int(r.size()), int(r.begin()->size()));
  int i = 0;
  for (const auto& row : r) A.row(i++) = vec(row).transpose();
  return A;
}

}  // namespace

TEST_CASE("subdifferential of |x|") {
  const Expr a = Expr::parse("abs(x1)", 1);
  CHECK(oracle::same_points(subdiff_at(a, vec({0})).points, {vec({-1}), vec({1})}, 1e-12));
  CHECK(oracle::same_points(subdiff_at(a, vec({5})).points, {vec({1})}, 1e-12));
  CHECK(oracle::same_points(subdiff_at(a, vec({-2})).points, {vec({-1})}, 1e-12));
}

TEST_CASE("subdifferential of max(x1^2, x2^2) at a tie") {
  const Expr m = Expr::parse("max(x1^2, x2^2)", 2);
  const Expr b1 = Expr::parse("x1^2", 2), b2 = Expr::parse("x2^2", 2);
  const Vec x = vec({1, 1});
  const std::vector<Vec> expected = {
      oracle::fd_gradient([&](const Vec& v) { return b1.eval(v); }, x),
      oracle::fd_gradient([&](const Vec& v) { return b2.eval(v); }, x)};
  CHECK(oracle::same_points(subdiff_at(m, x).points, expected, 1e-6));
}

TEST_CASE("smooth points give the gradient") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  const Expr e = Expr::parse("atan(x1*x2) + exp(x1/4) - log(1 + x2^2)", 2);
  for (int i = 0; i < 50; ++i) {
    const Vec x = vec({normal(rng), normal(rng)});
    const VPolytope s = subdiff_at(e, x);
    REQUIRE(s.points.size() == 1);
    CHECK((s.points[0] - e.grad_smooth(x, e.active_profile(x))).norm() == 0.0);
  }
}

TEST_CASE("too many active branches is an error") {
  std::string text = "0";
  for (int i = 1; i <= 7; ++i) text += " + abs(x" + std::to_string(i) + ")";
  CHECK_THROWS_AS(subdiff_at(Expr::parse(text, 7), Vec::Zero(7)), PreconditionError);
  CHECK_THROWS_AS(subdiff_at(Expr::parse("log(x1)", 1), vec({-1})), DomainError);
}

TEST_CASE("convex max of affine matches directional derivatives") {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> coef(-4, 4), tied(1, 4);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 10; ++trial) {
    const Vec x = vec({double(coef(rng)), double(coef(rng))});
    // The first k pieces tie at x with value 1, the rest sit strictly below.
    const int k = tied(rng);
    std::vector<Expr> pieces;
    for (int i = 0; i < 5; ++i) {
      const Vec a = vec({double(coef(rng)), double(coef(rng))});
      const double level = i < k ? 1.0 : -2.0;
      const double b = level - a.dot(x);
      pieces.push_back(Expr::parse("(" + std::to_string(a[0]) + ")*x1 + (" +
                                       std::to_string(a[1]) + ")*x2 + (" + std::to_string(b) + ")",
                                   2));
    }
    const Expr f = Expr::max(pieces);
    const VPolytope s = subdiff_at(f, x);
    for (int j = 0; j < 64; ++j) {
      Vec d = vec({normal(rng), normal(rng)});
      d.normalize();
      const double t = 1e-6;
      const double dd = (f.eval(x + t * d) - f.eval(x)) / t;
      CHECK(support(s, d) == doctest::Approx(dd).epsilon(1e-6).scale(1.0));
    }
  }
}

TEST_CASE("normal cones at finite points") {
  CHECK(normal_cone_at(GroundSet::full_space(3), vec({1, 2, 3})).is_zero());

  const GroundSet half = GroundSet::polyhedron(rows({{0, 1}}), vec({0}));
  CHECK(oracle::same_points(normal_cone_at(half, vec({3, 0})).generators, {vec({0, 1})}, 1e-12));
  CHECK(normal_cone_at(half, vec({3, -1})).is_zero());

  const double inf = std::numeric_limits<double>::infinity();
  const GroundSet quadrant = GroundSet::box(vec({0, 0}), vec({inf, inf}));
  CHECK(oracle::same_points(normal_cone_at(quadrant, vec({0, 0})).generators,
                            {vec({-1, 0}), vec({0, -1})}, 1e-12));
  CHECK(oracle::same_points(normal_cone_at(quadrant, vec({0, 4})).generators, {vec({-1, 0})},
                            1e-12));
  CHECK_THROWS_AS(normal_cone_at(quadrant, vec({-1, 0})), PreconditionError);
}

TEST_CASE("normal cone generators satisfy the Frechet inequality") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal;
  const double inf = std::numeric_limits<double>::infinity();
  const GroundSet sets[] = {
      GroundSet::box(vec({0, -1}), vec({inf, 1})),
      GroundSet::polyhedron(rows({{1, 1}, {-1, 2}, {0, -1}}), vec({2, 1, 0})),
  };
  const Vec points[] = {vec({0, 1}), vec({1, 1})};
  for (int s = 0; s < 2; ++s) {
    const Vec& x = points[s];
    REQUIRE(sets[s].contains(x));
    const VCone n = normal_cone_at(sets[s], x);
    CHECK_FALSE(n.is_zero());
    int sampled = 0;
    while (sampled < 100) {
      const Vec y = sets[s].project(x + 1e-3 * vec({normal(rng), normal(rng)}));
      const double dist = (y - x).norm();
      if (dist < 1e-9) continue;
      ++sampled;
      for (const Vec& v : n.generators) CHECK(v.dot(y - x) / dist <= 1e-8);
    }
  }
}

TEST_CASE("ground set validation") {
  CHECK_THROWS_AS(GroundSet::box(vec({1}), vec({0})), PreconditionError);
  CHECK_THROWS_AS(GroundSet::box(vec({0, 0}), vec({1})), DimensionError);
  CHECK_THROWS_AS(GroundSet::polyhedron(rows({{0, 0}}), vec({1})), PreconditionError);
  CHECK_THROWS_AS(GroundSet::polyhedron(rows({{1, 0}}), vec({1, 2})), DimensionError);
  CHECK_THROWS_AS(GroundSet::full_space(0), DimensionError);
}

TEST_CASE("projection onto ground sets") {
  const double inf = std::numeric_limits<double>::infinity();
  const GroundSet box = GroundSet::box(vec({0, -inf}), vec({1, 2}));
  CHECK((box.project(vec({3, 5})) - vec({1, 2})).norm() == 0.0);
  CHECK((box.project(vec({-3, -50})) - vec({0, -50})).norm() == 0.0);

  // Half-plane x1 + x2 <= 1: closed-form projection.
  const GroundSet half = GroundSet::polyhedron(rows({{1, 1}}), vec({1}));
  const Vec p = half.project(vec({3, 2}));
  CHECK((p - vec({1, 0})).norm() < 1e-9);

  // Intersection of two half-planes projected onto their corner.
  const GroundSet wedge = GroundSet::polyhedron(rows({{1, 0}, {0, 1}}), vec({0, 0}));
  CHECK((wedge.project(vec({2, 3})) - vec({0, 0})).norm() < 1e-9);

  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 5.0);
  const GroundSet poly = GroundSet::polyhedron(rows({{1, 1}, {-1, 2}, {0, -1}}), vec({2, 1, 0}));
  for (int i = 0; i < 50; ++i) {
    const Vec x = vec({normal(rng), normal(rng)});
    const Vec y = poly.project(x);
    CHECK(poly.contains(y));
    // Variational inequality: (x - y).(z - y) <= 0 for z in the set.
    for (const Vec& z : {vec({0, 0}), vec({1, 1}), vec({-1, 0}), vec({1.5, 0.5})}) {
      if (!poly.contains(z)) continue;
      CHECK((x - y).dot(z - y) <= 1e-7 * (1.0 + x.norm()));
    }
  }
}
