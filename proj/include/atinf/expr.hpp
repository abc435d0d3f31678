#pragma once

#include <Eigen/Core>

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace atinf {

using Vec = Eigen::VectorXd;

/// Relative activity tolerance: an argument of a max node is active when it is
/// within kActivityTol * (1 + |max|) of the achieved value.
inline constexpr double kActivityTol = 1e-9;

enum class Op { Const, Var, Add, Sub, Mul, Div, Neg, Pow, Exp, Log, Sqrt, Atan, Max };

/// One entry of an expression tape. Arguments always refer to earlier entries.
struct Node {
  Op op = Op::Const;
  double value = 0.0;    // Const
  int var = 0;           // Var, zero-based
  int exponent = 0;      // Pow
  std::vector<int> args;
};

/// For every max node of an expression, the argument positions regarded as
/// active. Entries for non-max nodes are empty.
struct ActiveProfile {
  std::vector<std::vector<int>> selections;

  bool is_smooth_selection() const;
};

/// Scalar expression over x1..xn with max as its only nonsmooth atom.
///
/// abs(u) is stored as max(u, -u) and min(u, ...) as -max(-u, ...). The tape is
/// immutable and shared between copies, so an Expr is cheap to pass by value
/// and safe to evaluate from several threads at once.
class Expr {
 public:
  Expr() = default;

  /// Parses `text` against the grammar documented in README.md.
  static Expr parse(std::string_view text, int dim);

  static Expr constant(double c, int dim);
  /// Variable x_{index+1}; `index` is zero-based.
  static Expr variable(int index, int dim);
  static Expr max(std::span<const Expr> args);
  static Expr min(std::span<const Expr> args);
  static Expr abs(const Expr& u);
  static Expr exp(const Expr& u);
  static Expr log(const Expr& u);
  static Expr sqrt(const Expr& u);
  static Expr atan(const Expr& u);
  static Expr pow(const Expr& u, int exponent);

  friend Expr operator+(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a, const Expr& b);
  friend Expr operator*(const Expr& a, const Expr& b);
  friend Expr operator/(const Expr& a, const Expr& b);
  friend Expr operator-(const Expr& a);

  int dim() const { return dim_; }
  bool empty() const { return !tape_ || tape_->empty(); }
  std::span<const Node> nodes() const;
  int root() const { return static_cast<int>(nodes().size()) - 1; }

  double eval(const Vec& x) const;
  /// Values of every tape entry at x. Throws DomainError naming the node.
  std::vector<double> eval_nodes(const Vec& x) const;

  /// Active arguments of every max node at x within `rel_tol`.
  ActiveProfile active_profile(const Vec& x, double rel_tol = kActivityTol) const;

  /// Gradient of the smooth branch fixed by `profile` (one selection per max
  /// node). Uses reverse accumulation over the tape.
  Vec grad_smooth(const Vec& x, const ActiveProfile& profile) const;

  /// Every smooth selection reachable through active ties at x. Only max nodes
  /// that influence the root under the chosen branches are split, so the
  /// count reflects genuinely distinct pieces. Throws if more than `cap`
  /// selections exist.
  std::vector<ActiveProfile> smooth_selections(const Vec& x, double rel_tol,
                                               std::size_t cap) const;

  /// Canonical text; parse(print()) is structurally equal to *this.
  std::string print() const;

  bool structurally_equal(const Expr& other) const;

 private:
  Expr(std::shared_ptr<const std::vector<Node>> tape, int dim)
      : tape_(std::move(tape)), dim_(dim) {}

  static Expr unary(Op op, const Expr& u, int exponent = 0);
  static Expr nary(Op op, std::span<const Expr> args);

  std::shared_ptr<const std::vector<Node>> tape_;
  int dim_ = 0;
};

}  // namespace atinf
