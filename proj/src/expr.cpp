#include "tunnelkit/expr.hpp"

#include <cctype>
#include <sstream>
#include <vector>

#include "tunnelkit/errors.hpp"

namespace tk {

double Jet::derivative(int n) const {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return n <= order ? c[n] * f : 0.0;
}

namespace {

int common(const Jet& a, const Jet& b) { return std::max(a.order, b.order); }

}  // namespace

Jet operator+(const Jet& a, const Jet& b) {
  Jet r(0.0, common(a, b));
  for (int i = 0; i <= r.order; ++i) r.c[i] = a.c[i] + b.c[i];
  return r;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet r(0.0, common(a, b));
  for (int i = 0; i <= r.order; ++i) r.c[i] = a.c[i] - b.c[i];
  return r;
}

Jet operator-(const Jet& a) {
  Jet r = a;
  for (auto& v : r.c) v = -v;
  return r;
}

Jet operator*(const Jet& a, const Jet& b) {
  Jet r(0.0, common(a, b));
  for (int i = 0; i <= r.order; ++i)
    for (int j = 0; j <= i; ++j) r.c[i] += a.c[j] * b.c[i - j];
  return r;
}

Jet operator/(const Jet& a, const Jet& b) {
  Jet r(0.0, common(a, b));
  for (int i = 0; i <= r.order; ++i) {
    double s = a.c[i];
    for (int j = 1; j <= i; ++j) s -= b.c[j] * r.c[i - j];
    r.c[i] = s / b.c[0];
  }
  return r;
}

Jet exp(const Jet& a) {
  Jet r(0.0, a.order);
  r.c[0] = std::exp(a.c[0]);
  for (int i = 1; i <= a.order; ++i) {
    double s = 0.0;
    for (int j = 1; j <= i; ++j) s += j * a.c[j] * r.c[i - j];
    r.c[i] = s / i;
  }
  return r;
}

Jet log(const Jet& a) {
  Jet r(0.0, a.order);
  r.c[0] = std::log(a.c[0]);
  for (int i = 1; i <= a.order; ++i) {
    double s = i * a.c[i];
    for (int j = 1; j < i; ++j) s -= j * r.c[j] * a.c[i - j];
    r.c[i] = s / (i * a.c[0]);
  }
  return r;
}

namespace {

void sincos(const Jet& a, Jet& s, Jet& c) {
  s = Jet(std::sin(a.c[0]), a.order);
  c = Jet(std::cos(a.c[0]), a.order);
  for (int i = 1; i <= a.order; ++i) {
    double ss = 0.0, cc = 0.0;
    for (int j = 1; j <= i; ++j) {
      ss += j * a.c[j] * c.c[i - j];
      cc -= j * a.c[j] * s.c[i - j];
    }
    s.c[i] = ss / i;
    c.c[i] = cc / i;
  }
}

}  // namespace

Jet sin(const Jet& a) {
  Jet s, c;
  sincos(a, s, c);
  return s;
}

Jet cos(const Jet& a) {
  Jet s, c;
  sincos(a, s, c);
  return c;
}

Jet sqrt(const Jet& a) {
  Jet r(0.0, a.order);
  r.c[0] = std::sqrt(a.c[0]);
  for (int i = 1; i <= a.order; ++i) {
    double s = a.c[i];
    for (int j = 1; j < i; ++j) s -= r.c[j] * r.c[i - j];
    r.c[i] = s / (2.0 * r.c[0]);
  }
  return r;
}

struct Expression::Node {
  enum Kind { Num, Var, Add, Sub, Mul, Div, Pow, Neg, Fn } kind;
  double value = 0.0;
  int var = 0;  // 0: x1, 1: x2, 2: t
  std::string fn;
  std::shared_ptr<const Node> a, b;
};

namespace {

using NodeP = std::shared_ptr<const Expression::Node>;
using Node = Expression::Node;

class Parser {
 public:
  explicit Parser(const std::string& s) : s_(s) {}

  NodeP parse() {
    NodeP n = expr();
    skip();
    if (pos_ != s_.size()) fail("unexpected character '" + std::string(1, s_[pos_]) + "'");
    return n;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "expression error at position " << pos_ << ": " << msg << " in \"" << s_ << "\"";
    throw Error(ErrorKind::Config, os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  static NodeP make(Node::Kind k, NodeP a, NodeP b = nullptr) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  NodeP expr() {
    NodeP n = term();
    for (;;) {
      if (accept('+')) n = make(Node::Add, n, term());
      else if (accept('-')) n = make(Node::Sub, n, term());
      else return n;
    }
  }

  NodeP term() {
    NodeP n = unary();
    for (;;) {
      if (accept('*')) n = make(Node::Mul, n, unary());
      else if (accept('/')) n = make(Node::Div, n, unary());
      else return n;
    }
  }

  NodeP unary() {
    if (accept('-')) return make(Node::Neg, unary());
    if (accept('+')) return unary();
    return power();
  }

  NodeP power() {
    NodeP base = primary();
    if (accept('^')) return make(Node::Pow, base, unary());
    return base;
  }

  NodeP primary() {
    skip();
    if (pos_ >= s_.size()) fail("unexpected end of input");
    const char c = s_[pos_];
    if (accept('(')) {
      NodeP n = expr();
      if (!accept(')')) fail("missing ')'");
      return n;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(s_.substr(pos_), &used);
      } catch (const std::exception&) {
        fail("bad number");
      }
      pos_ += used;
      auto n = std::make_shared<Node>();
      n->kind = Node::Num;
      n->value = v;
      return n;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t start = pos_;
      while (pos_ < s_.size() && std::isalnum(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      const std::string id = s_.substr(start, pos_ - start);
      auto n = std::make_shared<Node>();
      if (id == "x1" || id == "x2" || id == "t") {
        n->kind = Node::Var;
        n->var = id == "x1" ? 0 : (id == "x2" ? 1 : 2);
        return n;
      }
      if (id == "pi") {
        n->kind = Node::Num;
        n->value = 3.14159265358979323846;
        return n;
      }
      if (id == "exp" || id == "sin" || id == "cos" || id == "sqrt") {
        if (!accept('(')) fail("expected '(' after " + id);
        n->kind = Node::Fn;
        n->fn = id;
        n->a = expr();
        if (!accept(')')) fail("missing ')'");
        return n;
      }
      pos_ = start;
      fail("unknown identifier '" + id + "'");
    }
    fail("unexpected character '" + std::string(1, c) + "'");
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

template <class T>
T ipow(const T& x, int n) {
  if (n < 0) return T(1.0) / ipow(x, -n);
  T r(1.0);
  T b = x;
  while (n) {
    if (n & 1) r = r * b;
    b = b * b;
    n >>= 1;
  }
  return r;
}

double apply_fn(const std::string& f, double x) {
  if (f == "exp") return std::exp(x);
  if (f == "sin") return std::sin(x);
  if (f == "cos") return std::cos(x);
  return std::sqrt(x);
}

Jet apply_fn(const std::string& f, const Jet& x) {
  if (f == "exp") return exp(x);
  if (f == "sin") return sin(x);
  if (f == "cos") return cos(x);
  return sqrt(x);
}

double pow_any(double a, double b) { return std::pow(a, b); }
Jet pow_any(const Jet& a, const Jet& b) { return exp(b * log(a)); }

template <class T>
T eval_node(const Node& n, const T* vars) {
  switch (n.kind) {
    case Node::Num: return T(n.value);
    case Node::Var: return vars[n.var];
    case Node::Add: return eval_node(*n.a, vars) + eval_node(*n.b, vars);
    case Node::Sub: return eval_node(*n.a, vars) - eval_node(*n.b, vars);
    case Node::Mul: return eval_node(*n.a, vars) * eval_node(*n.b, vars);
    case Node::Div: return eval_node(*n.a, vars) / eval_node(*n.b, vars);
    case Node::Neg: return -eval_node(*n.a, vars);
    case Node::Fn: return apply_fn(n.fn, eval_node(*n.a, vars));
    case Node::Pow: {
      const T base = eval_node(*n.a, vars);
      if (n.b->kind == Node::Num && n.b->value == std::round(n.b->value) && std::abs(n.b->value) < 64)
        return ipow(base, static_cast<int>(n.b->value));
      return pow_any(base, eval_node(*n.b, vars));
    }
  }
  return T(0.0);
}

bool uses_var(const Node& n, int var) {
  if (n.kind == Node::Var) return n.var == var;
  return (n.a && uses_var(*n.a, var)) || (n.b && uses_var(*n.b, var));
}

}  // namespace

Expression::Expression(const std::string& text) : text_(text) {
  Parser p(text_);
  root_ = p.parse();
}

double Expression::operator()(double x1, double x2, double t) const {
  if (!root_) throw Error(ErrorKind::Config, "empty expression");
  const double v[3] = {x1, x2, t};
  return eval_node<double>(*root_, v);
}

Jet Expression::eval(const Jet& x1, const Jet& x2, const Jet& t) const {
  if (!root_) throw Error(ErrorKind::Config, "empty expression");
  const Jet v[3] = {x1, x2, t};
  return eval_node<Jet>(*root_, v);
}

bool Expression::uses(const std::string& var) const {
  if (!root_) return false;
  const int id = var == "x1" ? 0 : (var == "x2" ? 1 : 2);
  return uses_var(*root_, id);
}

}  // namespace tk
