#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <string>

namespace tk {

// Truncated Taylor series in one variable, used to differentiate expressions
// exactly along a line.
struct Jet {
  static constexpr int kMax = 8;
  int order = 0;
  std::array<double, kMax + 1> c{};

  Jet() = default;
  Jet(double v, int ord = 0) : order(ord) { c[0] = v; }
  static Jet variable(double v, int ord) {
    Jet j(v, ord);
    if (ord >= 1) j.c[1] = 1.0;
    return j;
  }
  double value() const { return c[0]; }
  // n-th derivative at the expansion point
  double derivative(int n) const;
};

Jet operator+(const Jet& a, const Jet& b);
Jet operator-(const Jet& a, const Jet& b);
Jet operator-(const Jet& a);
Jet operator*(const Jet& a, const Jet& b);
Jet operator/(const Jet& a, const Jet& b);
Jet exp(const Jet& a);
Jet log(const Jet& a);
Jet sin(const Jet& a);
Jet cos(const Jet& a);
Jet sqrt(const Jet& a);

// Parsed scalar expression over the variables x1, x2 and t.
class Expression {
 public:
  struct Node;

  Expression() = default;
  explicit Expression(const std::string& text);

  const std::string& text() const { return text_; }
  bool empty() const { return !root_; }

  double operator()(double x1, double x2, double t = 0.0) const;
  Jet eval(const Jet& x1, const Jet& x2, const Jet& t) const;
  bool uses(const std::string& var) const;

 private:
  std::string text_;
  std::shared_ptr<const Node> root_;
};

}  // namespace tk
