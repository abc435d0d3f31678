#include <doctest.h>

#include <cmath>
#include <random>
#include <string>

#include "atinf/errors.hpp"
#include "atinf/expr.hpp"
#include "oracles.hpp"

using atinf::Expr;
using atinf::Vec;
using oracle::vec;

namespace {

// Random expression text over n variables; every operation stays inside its
// domain for all real inputs.
std::string random_text(std::mt19937_64& rng, int n, int depth) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 1 : 11);
  std::uniform_int_distribution<int> var(1, n), small(-3, 3);
  auto sub = [&] { return random_text(rng, n, depth - 1); };
  switch (pick(rng)) {
    case 0: return "x" + std::to_string(var(rng));
    case 1: return std::to_string(small(rng));
    case 2: return "(" + sub() + " + " + sub() + ")";
    case 3: return "(" + sub() + " - " + sub() + ")";
    case 4: return "(" + sub() + " * " + sub() + ")";
    case 5: return "(" + sub() + ") / (1 + (" + sub() + ")^2)";
    case 6: return "-(" + sub() + ")";
    case 7: return "atan(" + sub() + ")";
    case 8: return "sqrt(1 + (" + sub() + ")^2)";
    case 9: return "log(2 + (" + sub() + ")^2)";
    case 10: return "max(" + sub() + ", " + sub() + ")";
    default: return "exp(atan(" + sub() + "))";
  }
}

// Smallest gap between the winner and the runner-up over all max nodes.
double min_tie_gap(const Expr& e, const Vec& x) {
  const auto values = e.eval_nodes(x);
  double gap = INFINITY;
  const auto nodes = e.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].op != atinf::Op::Max) continue;
    std::vector<double> a;
    for (int j : nodes[i].args) a.push_back(values[j]);
    std::sort(a.rbegin(), a.rend());
    if (a.size() > 1) gap = std::min(gap, (a[0] - a[1]) / (1.0 + std::abs(a[0])));
  }
  return gap;
}

}  // namespace

TEST_CASE("parse and evaluate golden example objective") {
  const Expr f = Expr::parse("1/(abs(x1)+1)", 1);
  CHECK(f.dim() == 1);
  CHECK(f.eval(vec({0})) == doctest::Approx(1.0));
  CHECK(f.eval(vec({9})) == doctest::Approx(0.1));
  CHECK(f.eval(vec({-9})) == doctest::Approx(0.1));
}

TEST_CASE("identity and simple evaluation") {
  CHECK(Expr::parse("x1", 1).eval(vec({3.5})) == 3.5);
  CHECK(Expr::parse("max(x1, -x1)", 1).eval(vec({-3})) == 3.0);
  CHECK(Expr::parse("min(x1, x2, 4)", 2).eval(vec({7, 5})) == 4.0);
  CHECK(Expr::parse("2^-1 + x1^3", 1).eval(vec({2})) == doctest::Approx(8.5));
  CHECK(Expr::parse("-x1^2", 1).eval(vec({3})) == -9.0);
  CHECK(Expr::parse("1.5e1 - 2*x2", 2).eval(vec({0, 1})) == 13.0);
}

TEST_CASE("max(x1, -x1) agrees with |x1| on a 1000-point grid") {
  const Expr m = Expr::parse("max(x1, -x1)", 1);
  for (int i = 0; i < 1000; ++i) {
    const double x = -50.0 + 100.0 * i / 999.0;
    CHECK(m.eval(vec({x})) == std::fabs(x));
  }
}

TEST_CASE("abs and min are rewritten onto max") {
  CHECK(Expr::parse("abs(x1)", 1).structurally_equal(Expr::parse("max(x1, -x1)", 1)));
  CHECK(Expr::parse("min(x1, x2)", 2).structurally_equal(Expr::parse("-max(-x1, -x2)", 2)));
}

TEST_CASE("print round-trips structurally") {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const Expr e = Expr::parse(random_text(rng, 2, 4), 2);
    const Expr back = Expr::parse(e.print(), 2);
    CHECK(back.structurally_equal(e));
  }
  const Expr c = Expr::parse("x1 * -3", 1);
  CHECK(Expr::parse(c.print(), 1).eval(vec({2})) == -6.0);
}

TEST_CASE("gradients of fixed branches") {
  const Expr f = Expr::parse("1/(abs(x1)+1)", 1);
  const Vec x = vec({2});
  CHECK(f.grad_smooth(x, f.active_profile(x))[0] == doctest::Approx(-1.0 / 9.0));

  const Expr lin = Expr::parse("3*x1 - 2*x2 + 7", 2);
  const Vec y = vec({-4, 11});
  const Vec g = lin.grad_smooth(y, lin.active_profile(y));
  CHECK(g[0] == doctest::Approx(3));
  CHECK(g[1] == doctest::Approx(-2));

  const Expr m = Expr::parse("max(x1^2, x2^2)", 2);
  const Vec z = vec({1, 2});
  const Vec gm = m.grad_smooth(z, m.active_profile(z));
  const Vec fd = oracle::fd_gradient([&](const Vec& v) { return m.eval(v); }, z);
  CHECK((gm - vec({0, 4})).norm() < 1e-12);
  CHECK((gm - fd).norm() < 1e-6);
}

TEST_CASE("reverse gradients match central differences away from ties") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 2.0);
  int checked = 0;
  for (int i = 0; i < 300; ++i) {
    const int n = 1 + i % 3;
    const Expr e = Expr::parse(random_text(rng, n, 4), n);
    Vec x(n);
    for (int j = 0; j < n; ++j) x[j] = normal(rng);
    if (min_tie_gap(e, x) <= 1e-3) continue;
    const Vec g = e.grad_smooth(x, e.active_profile(x));
    const Vec fd = oracle::fd_gradient([&](const Vec& v) { return e.eval(v); }, x);
    CHECK((g - fd).norm() <= 1e-6 * (1.0 + g.norm()));
    ++checked;
  }
  CHECK(checked > 200);
}

TEST_CASE("active profiles and smooth selections") {
  const Expr a = Expr::parse("abs(x1)", 1);
  CHECK(a.active_profile(vec({5})).is_smooth_selection());
  CHECK_FALSE(a.active_profile(vec({0})).is_smooth_selection());
  CHECK(a.smooth_selections(vec({0}), atinf::kActivityTol, 64).size() == 2);
  CHECK(a.smooth_selections(vec({5}), atinf::kActivityTol, 64).size() == 1);
  CHECK_THROWS_AS(a.grad_smooth(vec({0}), a.active_profile(vec({0}))), atinf::PreconditionError);

  // A tie inside a branch that loses at the root is not split.
  const Expr inner = Expr::parse("max(abs(x1) - 10, 1)", 1);
  CHECK(inner.smooth_selections(vec({0}), atinf::kActivityTol, 64).size() == 1);

  // Seven independent ties give 128 pieces, beyond the cap.
  std::string many = "0";
  for (int i = 1; i <= 7; ++i) many += " + abs(x" + std::to_string(i) + ")";
  const Expr e = Expr::parse(many, 7);
  CHECK_THROWS(e.smooth_selections(Vec::Zero(7), atinf::kActivityTol, 64));
}

TEST_CASE("parse errors carry positions") {
  auto fails = [](const char* text, int dim) {
    try {
      Expr::parse(text, dim);
    } catch (const atinf::ParseError& e) {
      CHECK(e.line() >= 1);
      CHECK(e.column() >= 1);
      return true;
    }
    return false;
  };
  CHECK(fails("foo(x1)", 1));
  CHECK(fails("x2", 1));
  CHECK(fails("x0", 1));
  CHECK(fails("x1^1.5", 1));
  CHECK(fails("exp(x1, x1)", 1));
  CHECK(fails("max()", 1));
  CHECK(fails("(x1", 1));
  CHECK(fails("x1 +", 1));
  CHECK(fails("", 1));
  CHECK(fails("x1 x1", 1));
  try {
    Expr::parse("x1 +\n  y", 1);
    FAIL("expected a parse error");
  } catch (const atinf::ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(e.column() == 3);
  }
}

TEST_CASE("garbage input never escapes as anything but a parse error") {
  std::mt19937_64 rng(3);
  const std::string alphabet = "x1230+-*/^(),. maxbsqrtlogep";
  std::uniform_int_distribution<std::size_t> ch(0, alphabet.size() - 1), len(0, 24);
  for (int i = 0; i < 2000; ++i) {
    std::string s;
    const std::size_t k = len(rng);
    for (std::size_t j = 0; j < k; ++j) s += alphabet[ch(rng)];
    try {
      (void)Expr::parse(s, 3);
    } catch (const atinf::ParseError&) {
    }
  }
}

TEST_CASE("evaluation outside the natural domain") {
  CHECK_THROWS_AS(Expr::parse("log(x1)", 1).eval(vec({0})), atinf::DomainError);
  CHECK_THROWS_AS(Expr::parse("1/x1", 1).eval(vec({0})), atinf::DomainError);
  CHECK_THROWS_AS(Expr::parse("sqrt(x1)", 1).eval(vec({-1})), atinf::DomainError);
  CHECK_THROWS_AS(Expr::parse("x1^-2", 1).eval(vec({0})), atinf::DomainError);
  CHECK_THROWS_AS(Expr::parse("x1 + x2", 2).eval(vec({1})), atinf::DimensionError);
}

TEST_CASE("builder operations match parsed text") {
  const Expr x = Expr::variable(0, 2), y = Expr::variable(1, 2);
  const Expr args[] = {x * y, Expr::exp(x) - Expr::constant(1, 2)};
  const Expr built = Expr::max(args) / Expr::sqrt(Expr::pow(y, 2) + Expr::constant(1, 2));
  const Expr parsed = Expr::parse("max(x1*x2, exp(x1) - 1) / sqrt(x2^2 + 1)", 2);
  for (const Vec& p : {vec({0.5, -1}), vec({2, 3}), vec({-1, 0.25})})
    CHECK(built.eval(p) == doctest::Approx(parsed.eval(p)));
}

TEST_CASE("evaluation is deterministic") {
  const Expr e = Expr::parse("atan(x1*x2) + max(x1, x2^2) - log(1 + exp(x1))", 2);
  const Vec p = vec({0.3, -0.7});
  const double a = e.eval(p);
  const Vec ga = e.grad_smooth(p, e.active_profile(p));
  for (int i = 0; i < 10; ++i) {
    CHECK(e.eval(p) == a);
    CHECK(e.grad_smooth(p, e.active_profile(p)) == ga);
  }
}
