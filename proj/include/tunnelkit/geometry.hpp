#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tunnelkit/expr.hpp"
#include "tunnelkit/numerics.hpp"

namespace tk {

using Vec2 = std::array<double, 2>;

struct CurveSpec {
  enum class Kind { Circle, Ellipse, Parametric };
  Kind kind = Kind::Circle;
  double radius = 1.0;
  double a = 1.0, b = 1.0;
  std::string x_expr, y_expr;  // functions of t on [0, 2 pi) for Parametric

  static CurveSpec circle(double r) { return {Kind::Circle, r, 1.0, 1.0, {}, {}}; }
  static CurveSpec ellipse(double a, double b) { return {Kind::Ellipse, 1.0, a, b, {}, {}}; }
  static CurveSpec parametric(std::string x, std::string y) {
    return {Kind::Parametric, 1.0, 1.0, 1.0, std::move(x), std::move(y)};
  }
};

struct FieldSpec {
  std::string expression;
  int k = 1;
};

// Closed curve given by a 2 pi periodic parametrization with exact derivatives.
class Curve {
 public:
  explicit Curve(const CurveSpec& spec);
  // value and first two derivatives of the raw parametrization at theta
  std::array<Vec2, 3> jet(double theta) const;
  double speed(double theta) const;

 private:
  CurveSpec spec_;
  Expression x_, y_;
};

struct ArcLengthData {
  double L = 0.0;                  // half length
  std::vector<double> s;           // uniform on [-L, L)
  std::vector<double> theta;       // raw parameter at each sample
  std::vector<Vec2> M, tangent, normal;
  std::vector<double> kappa;
  double theta_top = 0.0;
  int direction = 1;               // +1 if the raw parametrization is counterclockwise
};

ArcLengthData arclength_parametrize(const CurveSpec& curve, int n_samples, double tol = 1e-12);

// Signed curvature with respect to the inward normal (det(M', nu) = 1).
std::vector<double> curvature(const CurveSpec& curve, const ArcLengthData& arc);

struct NormalJet {
  std::vector<double> gamma, delta, delta_tilde;
  double max_lower_order = 0.0;  // largest lower normal derivative seen (vanishing check)
};

// gamma = d^k_t B(M + t nu) / k!, delta = d^{k+1}_t B(M + t nu) / (k+1)!, by
// central differences with Richardson extrapolation in the step.
NormalJet normal_jet(const FieldSpec& field, const ArcLengthData& arc, double step = 0.05,
                     double vanish_tol = 1e-6);
// Same quantities through Taylor arithmetic on the expression (oracle path).
NormalJet normal_jet_exact(const FieldSpec& field, const ArcLengthData& arc);

// beta0 = (1 / |Gamma|) * integral of B over the interior.
double circulation(const FieldSpec& field, const CurveSpec& curve, double rel_tol = 1e-11);

struct Wells {
  double s_r = 0.0, s_l = 0.0, gamma0 = 0.0, gamma_dd = 0.0;
};

Wells locate_wells(const PeriodicSeries& gamma, const std::vector<double>& s_samples);

struct Variability {
  double deviation = 0.0;  // sup |1 - gamma0 / gamma|
  bool pass = false;
};

Variability variability_check(const std::vector<double>& gamma, double gamma0, double epsilon);

struct GeometryProfile {
  int k = 1;
  double L = 0.0;
  std::vector<double> s;
  std::vector<Vec2> M;
  std::vector<double> kappa, gamma, delta, delta_tilde;
  double beta0 = 0.0;
  double s_r = 0.0, s_l = 0.0, gamma0 = 0.0, gamma_dd = 0.0;
  double variability = 0.0;
  std::vector<std::string> warnings;
  PeriodicSeries gamma_fn, delta_fn, kappa_fn, delta_tilde_fn;

  double gamma_at(double x, int d = 0) const { return gamma_fn.derivative(x, d); }
  double delta_at(double x, int d = 0) const { return delta_fn.derivative(x, d); }
  double kappa_at(double x, int d = 0) const { return kappa_fn.derivative(x, d); }
  double delta_tilde_at(double x, int d = 0) const { return delta_tilde_fn.derivative(x, d); }
  // Rebuilds the interpolants from the sample vectors.
  void rebuild();
};

struct GeometryOptions {
  int n_samples = 512;
  double jet_step = 0.05;
  double symmetry_tol = 1e-8;
  double variability_eps = 0.25;
};

// Full geometry stage with assumption validation.
GeometryProfile build_geometry(const CurveSpec& curve, const FieldSpec& field, const GeometryOptions& opt);

using ScalarFn = std::function<double(double)>;

// Profile from closed-form samples, used by tests and synthetic fixtures.
// Wells are located only when find_wells is set.
GeometryProfile profile_from_functions(int k, double L, int n, const ScalarFn& gamma, const ScalarFn& delta,
                                       const ScalarFn& kappa, double beta0, bool find_wells = true);

// CSV with columns s, kappa, gamma, delta, delta_tilde.
std::string profile_csv(const GeometryProfile& p);

}  // namespace tk
