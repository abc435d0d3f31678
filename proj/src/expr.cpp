#include "atinf/expr.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <functional>
#include <sstream>

#include "atinf/errors.hpp"

namespace atinf {

bool ActiveProfile::is_smooth_selection() const {
  return std::all_of(selections.begin(), selections.end(),
                     [](const auto& s) { return s.size() <= 1; });
}

namespace {

using Tape = std::vector<Node>;

// Appends `src` to `dst`, shifting argument indices. Returns the new index of
// src's root.
int append_tape(Tape& dst, const Tape& src) {
  const int offset = static_cast<int>(dst.size());
  for (Node n : src) {
    for (int& a : n.args) a += offset;
    dst.push_back(std::move(n));
  }
  return static_cast<int>(dst.size()) - 1;
}

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, end);
  if (v < 0 || (v == 0 && std::signbit(v))) return "(" + s + ")";
  return s;
}

void print_node(const Tape& t, int i, std::ostringstream& os) {
  const Node& n = t[i];
  auto bin = [&](const char* op) {
    os << '(';
    print_node(t, n.args[0], os);
    os << ' ' << op << ' ';
    print_node(t, n.args[1], os);
    os << ')';
  };
  auto call = [&](const char* name) {
    os << name << '(';
    for (std::size_t k = 0; k < n.args.size(); ++k) {
      if (k) os << ", ";
      print_node(t, n.args[k], os);
    }
    os << ')';
  };
  switch (n.op) {
    case Op::Const: os << format_number(n.value); break;
    case Op::Var: os << 'x' << (n.var + 1); break;
    case Op::Add: bin("+"); break;
    case Op::Sub: bin("-"); break;
    case Op::Mul: bin("*"); break;
    case Op::Div: bin("/"); break;
    case Op::Neg:
      os << "(-";
      print_node(t, n.args[0], os);
      os << ')';
      break;
    case Op::Pow:
      os << '(';
      print_node(t, n.args[0], os);
      os << '^' << n.exponent << ')';
      break;
    case Op::Exp: call("exp"); break;
    case Op::Log: call("log"); break;
    case Op::Sqrt: call("sqrt"); break;
    case Op::Atan: call("atan"); break;
    case Op::Max: call("max"); break;
  }
}

std::string describe(const Tape& t, int i) {
  std::ostringstream os;
  print_node(t, i, os);
  return "node " + std::to_string(i) + " `" + os.str() + "`";
}

bool subtree_equal(const Tape& a, int i, const Tape& b, int j) {
  const Node& x = a[i];
  const Node& y = b[j];
  if (x.op != y.op || x.args.size() != y.args.size()) return false;
  switch (x.op) {
    case Op::Const:
      if (x.value != y.value) return false;
      break;
    case Op::Var:
      if (x.var != y.var) return false;
      break;
    case Op::Pow:
      if (x.exponent != y.exponent) return false;
      break;
    default: break;
  }
  for (std::size_t k = 0; k < x.args.size(); ++k)
    if (!subtree_equal(a, x.args[k], b, y.args[k])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Recursive-descent parser.

class Parser {
 public:
  Parser(std::string_view text, int dim) : text_(text), dim_(dim) {}

  Expr run() {
    Expr e = expr();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected character '" + std::string(1, text_[pos_]) + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { fail_at(msg, pos_); }

  [[noreturn]] void fail_at(const std::string& msg, std::size_t at) const {
    int line = 1, col = 1;
    for (std::size_t k = 0; k < at && k < text_.size(); ++k) {
      if (text_[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ParseError(msg, line, col);
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) {
      if (pos_ >= text_.size()) fail(std::string("expected '") + c + "' but reached end of input");
      fail(std::string("expected '") + c + "'");
    }
  }

  Expr expr() {
    Expr lhs = term();
    for (;;) {
      if (accept('+')) {
        lhs = lhs + term();
      } else if (accept('-')) {
        lhs = lhs - term();
      } else {
        return lhs;
      }
    }
  }

  Expr term() {
    Expr lhs = unary();
    for (;;) {
      if (accept('*')) {
        lhs = lhs * unary();
      } else if (accept('/')) {
        lhs = lhs / unary();
      } else {
        return lhs;
      }
    }
  }

  Expr unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  Expr power() {
    Expr b = base();
    if (!accept('^')) return b;
    skip_ws();
    const std::size_t start = pos_;
    bool negative = false;
    if (pos_ < text_.size() && (text_[pos_] == '-' || text_[pos_] == '+')) {
      negative = text_[pos_] == '-';
      ++pos_;
    }
    const std::size_t digits = pos_;
    while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ == digits) fail_at("non-integer exponent on '^' (integer literal required)", start);
    if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E'))
      fail_at("non-integer exponent on '^' (integer literal required)", start);
    int k = 0;
    auto [p, ec] = std::from_chars(text_.data() + digits, text_.data() + pos_, k);
    if (ec != std::errc()) fail_at("exponent out of range", start);
    return Expr::pow(b, negative ? -k : k);
  }

  Expr number() {
    const std::size_t start = pos_;
    auto digits = [&] {
      std::size_t s = pos_;
      while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      return pos_ - s;
    };
    std::size_t n = digits();
    if (pos_ < text_.size() && text_[pos_] == '.') {
      ++pos_;
      n += digits();
    }
    if (n == 0) fail_at("malformed number", start);
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      ++pos_;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (digits() == 0) fail_at("malformed number exponent", start);
    }
    double v = 0;
    auto [p, ec] = std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (ec != std::errc() || p != text_.data() + pos_) fail_at("malformed number", start);
    return Expr::constant(v, dim_);
  }

  Expr base() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of input");
    const char c = text_[pos_];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
    if (c == '(') {
      ++pos_;
      Expr e = expr();
      expect(')');
      return e;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) ++pos_;
      const std::string_view word = text_.substr(start, pos_ - start);
      if (word.size() > 1 && word[0] == 'x' &&
          std::all_of(word.begin() + 1, word.end(),
                      [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
        int idx = 0;
        auto [p, ec] = std::from_chars(word.data() + 1, word.data() + word.size(), idx);
        if (ec != std::errc() || idx < 1 || idx > dim_)
          fail_at("variable index out of range: " + std::string(word) + " (dimension " +
                      std::to_string(dim_) + ")",
                  start);
        return Expr::variable(idx - 1, dim_);
      }
      return call(word, start);
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  Expr call(std::string_view name, std::size_t start) {
    static const char* kFuncs[] = {"abs", "max", "min", "exp", "log", "sqrt", "atan"};
    if (std::none_of(std::begin(kFuncs), std::end(kFuncs),
                     [&](const char* f) { return name == f; }))
      fail_at("unknown identifier '" + std::string(name) + "'", start);
    expect('(');
    std::vector<Expr> args{expr()};
    while (accept(',')) args.push_back(expr());
    expect(')');
    const bool variadic = name == "max" || name == "min";
    if (!variadic && args.size() != 1)
      fail_at(std::string(name) + " takes exactly one argument", start);
    if (name == "max") return Expr::max(args);
    if (name == "min") return Expr::min(args);
    if (name == "abs") return Expr::abs(args[0]);
    if (name == "exp") return Expr::exp(args[0]);
    if (name == "log") return Expr::log(args[0]);
    if (name == "sqrt") return Expr::sqrt(args[0]);
    return Expr::atan(args[0]);
  }

  std::string_view text_;
  int dim_;
  std::size_t pos_ = 0;
};

void require_same_dim(const Expr& a, const Expr& b) {
  if (a.dim() != b.dim())
    throw DimensionError("expression dimensions differ: " + std::to_string(a.dim()) + " vs " +
                         std::to_string(b.dim()));
}

}  // namespace

// ---------------------------------------------------------------------------
// Construction.

Expr Expr::parse(std::string_view text, int dim) {
  if (dim < 1) throw DimensionError("dimension must be at least 1");
  return Parser(text, dim).run();
}

Expr Expr::constant(double c, int dim) {
  auto t = std::make_shared<Tape>();
  t->push_back(Node{.op = Op::Const, .value = c, .args = {}});
  return Expr(std::move(t), dim);
}

Expr Expr::variable(int index, int dim) {
  if (index < 0 || index >= dim)
    throw DimensionError("variable index " + std::to_string(index + 1) + " out of range");
  auto t = std::make_shared<Tape>();
  t->push_back(Node{.op = Op::Var, .var = index, .args = {}});
  return Expr(std::move(t), dim);
}

Expr Expr::unary(Op op, const Expr& u, int exponent) {
  auto t = std::make_shared<Tape>(*u.tape_);
  const int r = static_cast<int>(t->size()) - 1;
  t->push_back(Node{.op = op, .exponent = exponent, .args = {r}});
  return Expr(std::move(t), u.dim_);
}

Expr Expr::nary(Op op, std::span<const Expr> args) {
  auto t = std::make_shared<Tape>();
  Node n{.op = op, .args = {}};
  for (const Expr& a : args) {
    require_same_dim(args.front(), a);
    n.args.push_back(append_tape(*t, *a.tape_));
  }
  t->push_back(std::move(n));
  return Expr(std::move(t), args.front().dim_);
}

Expr Expr::max(std::span<const Expr> args) {
  if (args.empty()) throw PreconditionError("max needs at least one argument");
  if (args.size() == 1) return args.front();
  return nary(Op::Max, args);
}

Expr Expr::min(std::span<const Expr> args) {
  if (args.empty()) throw PreconditionError("min needs at least one argument");
  std::vector<Expr> neg;
  neg.reserve(args.size());
  for (const Expr& a : args) neg.push_back(-a);
  return -max(neg);
}

Expr Expr::abs(const Expr& u) {
  // max(u, -u) sharing the tape of u.
  auto t = std::make_shared<Tape>(*u.tape_);
  const int r = static_cast<int>(t->size()) - 1;
  if ((*t)[r].op == Op::Const) {
    (*t)[r].value = std::fabs((*t)[r].value);
    return Expr(std::move(t), u.dim_);
  }
  t->push_back(Node{.op = Op::Neg, .args = {r}});
  t->push_back(Node{.op = Op::Max, .args = {r, r + 1}});
  return Expr(std::move(t), u.dim_);
}

Expr Expr::exp(const Expr& u) { return unary(Op::Exp, u); }
Expr Expr::log(const Expr& u) { return unary(Op::Log, u); }
Expr Expr::sqrt(const Expr& u) { return unary(Op::Sqrt, u); }
Expr Expr::atan(const Expr& u) { return unary(Op::Atan, u); }
Expr Expr::pow(const Expr& u, int exponent) { return unary(Op::Pow, u, exponent); }

Expr operator+(const Expr& a, const Expr& b) {
  const Expr args[] = {a, b};
  return Expr::nary(Op::Add, args);
}
Expr operator-(const Expr& a, const Expr& b) {
  const Expr args[] = {a, b};
  return Expr::nary(Op::Sub, args);
}
Expr operator*(const Expr& a, const Expr& b) {
  const Expr args[] = {a, b};
  return Expr::nary(Op::Mul, args);
}
Expr operator/(const Expr& a, const Expr& b) {
  const Expr args[] = {a, b};
  return Expr::nary(Op::Div, args);
}
Expr operator-(const Expr& a) {
  const Node& r = a.nodes().back();
  if (r.op == Op::Const) return Expr::constant(-r.value, a.dim());
  return Expr::unary(Op::Neg, a);
}

std::span<const Node> Expr::nodes() const {
  if (!tape_) return {};
  return {tape_->data(), tape_->size()};
}

// ---------------------------------------------------------------------------
// Evaluation.

std::vector<double> Expr::eval_nodes(const Vec& x) const {
  if (empty()) throw PreconditionError("evaluating an empty expression");
  if (x.size() != dim_)
    throw DimensionError("point has dimension " + std::to_string(x.size()) + ", expected " +
                         std::to_string(dim_));
  const Tape& t = *tape_;
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Node& n = t[i];
    auto a = [&](int k) { return v[n.args[k]]; };
    switch (n.op) {
      case Op::Const: v[i] = n.value; break;
      case Op::Var: v[i] = x[n.var]; break;
      case Op::Add: v[i] = a(0) + a(1); break;
      case Op::Sub: v[i] = a(0) - a(1); break;
      case Op::Mul: v[i] = a(0) * a(1); break;
      case Op::Div:
        if (a(1) == 0.0) throw DomainError("division by zero at " + describe(t, int(i)));
        v[i] = a(0) / a(1);
        break;
      case Op::Neg: v[i] = -a(0); break;
      case Op::Pow:
        if (n.exponent < 0 && a(0) == 0.0)
          throw DomainError("negative power of zero at " + describe(t, int(i)));
        v[i] = std::pow(a(0), n.exponent);
        break;
      case Op::Exp: v[i] = std::exp(a(0)); break;
      case Op::Log:
        if (!(a(0) > 0.0)) throw DomainError("log of nonpositive value at " + describe(t, int(i)));
        v[i] = std::log(a(0));
        break;
      case Op::Sqrt:
        if (!(a(0) >= 0.0)) throw DomainError("sqrt of negative value at " + describe(t, int(i)));
        v[i] = std::sqrt(a(0));
        break;
      case Op::Atan: v[i] = std::atan(a(0)); break;
      case Op::Max: {
        double m = a(0);
        for (std::size_t k = 1; k < n.args.size(); ++k) m = std::max(m, a(int(k)));
        v[i] = m;
        break;
      }
    }
    if (std::isnan(v[i])) throw DomainError("undefined value (NaN) at " + describe(t, int(i)));
  }
  return v;
}

double Expr::eval(const Vec& x) const { return eval_nodes(x).back(); }

ActiveProfile Expr::active_profile(const Vec& x, double rel_tol) const {
  const std::vector<double> v = eval_nodes(x);
  const Tape& t = *tape_;
  ActiveProfile p;
  p.selections.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const Node& n = t[i];
    if (n.op != Op::Max) continue;
    const double m = v[i];
    const double slack = rel_tol * (1.0 + std::fabs(m));
    for (std::size_t k = 0; k < n.args.size(); ++k) {
      const double vk = v[n.args[k]];
      if (vk == m || vk >= m - slack) p.selections[i].push_back(int(k));
    }
  }
  return p;
}

Vec Expr::grad_smooth(const Vec& x, const ActiveProfile& profile) const {
  const std::vector<double> v = eval_nodes(x);
  const Tape& t = *tape_;
  if (profile.selections.size() != t.size())
    throw PreconditionError("active profile does not match the expression structure");
  std::vector<double> adj(t.size(), 0.0);
  adj.back() = 1.0;
  Vec g = Vec::Zero(dim_);
  for (int i = int(t.size()) - 1; i >= 0; --i) {
    const Node& n = t[i];
    const double w = adj[i];
    if (n.op == Op::Max) {
      const auto& sel = profile.selections[i];
      if (sel.size() != 1 || sel[0] < 0 || sel[0] >= int(n.args.size()))
        throw PreconditionError("active profile must fix exactly one branch at max " +
                                describe(t, i));
    } else if (!profile.selections[i].empty()) {
      throw PreconditionError("active profile selects a branch at a non-max node");
    }
    if (w == 0.0) continue;
    auto a = [&](int k) { return v[n.args[k]]; };
    auto push = [&](int k, double d) { adj[n.args[k]] += w * d; };
    switch (n.op) {
      case Op::Const: break;
      case Op::Var: g[n.var] += w; break;
      case Op::Add:
        push(0, 1.0);
        push(1, 1.0);
        break;
      case Op::Sub:
        push(0, 1.0);
        push(1, -1.0);
        break;
      case Op::Mul:
        push(0, a(1));
        push(1, a(0));
        break;
      case Op::Div:
        push(0, 1.0 / a(1));
        push(1, -a(0) / (a(1) * a(1)));
        break;
      case Op::Neg: push(0, -1.0); break;
      case Op::Pow:
        if (n.exponent != 0) push(0, n.exponent * std::pow(a(0), n.exponent - 1));
        break;
      case Op::Exp: push(0, v[i]); break;
      case Op::Log: push(0, 1.0 / a(0)); break;
      case Op::Sqrt:
        if (v[i] == 0.0) throw DomainError("sqrt is not differentiable at " + describe(t, i));
        push(0, 0.5 / v[i]);
        break;
      case Op::Atan: push(0, 1.0 / (1.0 + a(0) * a(0))); break;
      case Op::Max: push(profile.selections[i][0], 1.0); break;
    }
  }
  return g;
}

std::vector<ActiveProfile> Expr::smooth_selections(const Vec& x, double rel_tol,
                                                   std::size_t cap) const {
  const ActiveProfile active = active_profile(x, rel_tol);
  const Tape& t = *tape_;

  ActiveProfile base;
  base.selections.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i)
    if (t[i].op == Op::Max) base.selections[i] = {active.selections[i].front()};

  std::vector<ActiveProfile> out;
  std::function<void(int, std::vector<char>, ActiveProfile)> walk =
      [&](int i, std::vector<char> live, ActiveProfile sel) {
        for (; i >= 0; --i) {
          if (!live[i]) continue;
          const Node& n = t[i];
          if (n.op != Op::Max) {
            for (int a : n.args) live[a] = 1;
            continue;
          }
          const auto& act = active.selections[i];
          if (act.size() > 1) {
            for (int c : act) {
              std::vector<char> l2 = live;
              ActiveProfile s2 = sel;
              s2.selections[i] = {c};
              l2[n.args[c]] = 1;
              walk(i - 1, std::move(l2), std::move(s2));
            }
            return;
          }
          live[n.args[act[0]]] = 1;
        }
        out.push_back(std::move(sel));
        if (out.size() > cap)
          throw PreconditionError("more than " + std::to_string(cap) +
                                  " simultaneously active branches");
      };
  std::vector<char> live(t.size(), 0);
  live.back() = 1;
  walk(int(t.size()) - 1, std::move(live), std::move(base));
  return out;
}

std::string Expr::print() const {
  if (empty()) return {};
  std::ostringstream os;
  print_node(*tape_, root(), os);
  return os.str();
}

bool Expr::structurally_equal(const Expr& other) const {
  if (dim_ != other.dim_ || empty() != other.empty()) return false;
  if (empty()) return true;
  return subtree_equal(*tape_, root(), *other.tape_, other.root());
}

}  // namespace atinf
