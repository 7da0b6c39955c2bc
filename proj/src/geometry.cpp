#include "tunnelkit/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

constexpr double kTwoPi = 2.0 * kPi;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// Adaptive Gauss-Kronrod with an error check.
template <class F>
double gk_integrate(F&& f, double a, double b, double rel_tol, const char* what) {
  double err = 0.0;
  const double v = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, rel_tol, &err);
  if (!std::isfinite(v) || err > 100.0 * rel_tol * std::max(1.0, std::abs(v)))
    throw Error(ErrorKind::Solver, std::string(what) + ": quadrature did not converge (error estimate " + fmt(err) + ")");
  return v;
}

// Central stencil of second-order accuracy for the m-th derivative, unit step.
std::vector<int> central_offsets(int m) {
  const int w = m % 2 == 0 ? m / 2 : (m + 1) / 2;
  std::vector<int> off;
  for (int i = -w; i <= w; ++i) off.push_back(i);
  return off;
}

double factorial(int n) {
  double f = 1.0;
  for (int i = 2; i <= n; ++i) f *= i;
  return f;
}

}  // namespace

Curve::Curve(const CurveSpec& spec) : spec_(spec) {
  switch (spec.kind) {
    case CurveSpec::Kind::Circle:
      if (!(spec.radius > 0.0)) throw Error(ErrorKind::Config, "circle radius must be positive");
      break;
    case CurveSpec::Kind::Ellipse:
      if (!(spec.a > 0.0 && spec.b > 0.0)) throw Error(ErrorKind::Config, "ellipse semi-axes must be positive");
      break;
    case CurveSpec::Kind::Parametric:
      x_ = Expression(spec.x_expr);
      y_ = Expression(spec.y_expr);
      if (x_.uses("x1") || x_.uses("x2") || y_.uses("x1") || y_.uses("x2"))
        throw Error(ErrorKind::Config, "parametric curve expressions may only use t");
      break;
  }
}

std::array<Vec2, 3> Curve::jet(double th) const {
  const double c = std::cos(th), s = std::sin(th);
  switch (spec_.kind) {
    case CurveSpec::Kind::Circle: {
      const double r = spec_.radius;
      return {Vec2{r * c, r * s}, Vec2{-r * s, r * c}, Vec2{-r * c, -r * s}};
    }
    case CurveSpec::Kind::Ellipse: {
      const double a = spec_.a, b = spec_.b;
      return {Vec2{a * c, b * s}, Vec2{-a * s, b * c}, Vec2{-a * c, -b * s}};
    }
    case CurveSpec::Kind::Parametric: {
      const Jet t = Jet::variable(th, 2);
      const Jet zero(0.0, 2);
      const Jet x = x_.eval(zero, zero, t), y = y_.eval(zero, zero, t);
      return {Vec2{x.derivative(0), y.derivative(0)}, Vec2{x.derivative(1), y.derivative(1)},
              Vec2{x.derivative(2), y.derivative(2)}};
    }
  }
  return {};
}

double Curve::speed(double th) const {
  const auto j = jet(th);
  return std::hypot(j[1][0], j[1][1]);
}

ArcLengthData arclength_parametrize(const CurveSpec& spec, int n_samples, double tol) {
  if (n_samples < 16 || n_samples % 2 != 0) throw Error(ErrorKind::Config, "n_samples must be even and >= 16");
  const Curve curve(spec);

  // smoothness: speed bounded away from zero on a dense scan
  const int scan = 4096;
  double vmin = 1e300, vmax = 0.0;
  for (int i = 0; i < scan; ++i) {
    const double v = curve.speed(kTwoPi * i / scan);
    if (!std::isfinite(v)) throw Error(ErrorKind::Domain, "curve parametrization is not finite");
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (vmin < 1e-8 * vmax) throw Error(ErrorKind::Assumption, "curve parametrization is not smooth (vanishing speed)");
  const auto closing = curve.jet(kTwoPi)[0], start = curve.jet(0.0)[0];
  if (std::hypot(closing[0] - start[0], closing[1] - start[1]) > 1e-9 * vmax)
    throw Error(ErrorKind::Assumption, "curve is not closed over [0, 2 pi)");

  // orientation from the signed area
  const double area = 0.5 * gk_integrate(
                                [&](double th) {
                                  const auto j = curve.jet(th);
                                  return j[0][0] * j[1][1] - j[0][1] * j[1][0];
                                },
                                0.0, kTwoPi, 1e-13, "area");
  ArcLengthData out;
  out.direction = area > 0.0 ? 1 : -1;

  // top crossing of the symmetry axis
  double best_y = -1e300, best_th = 0.0;
  bool found = false;
  auto xfun = [&](double th) { return curve.jet(th)[0][0]; };
  for (int i = 0; i < scan; ++i) {
    const double a = kTwoPi * i / scan, b = kTwoPi * (i + 1) / scan;
    const double fa = xfun(a), fb = xfun(b);
    double root;
    if (fa == 0.0) root = a;
    else if (fa * fb < 0.0) {
      boost::uintmax_t it = 100;
      auto r = boost::math::tools::toms748_solve(xfun, a, b, fa, fb,
                                                 boost::math::tools::eps_tolerance<double>(52), it);
      root = 0.5 * (r.first + r.second);
    } else continue;
    const double y = curve.jet(root)[0][1];
    if (y > best_y) {
      best_y = y;
      best_th = root;
      found = true;
    }
  }
  if (!found) throw Error(ErrorKind::Assumption, "curve does not cross the axis x1 = 0");
  out.theta_top = best_th;

  const int dir = out.direction;
  auto theta_of = [&](double u) { return best_th + dir * u; };
  auto spd = [&](double u) { return curve.speed(theta_of(u)); };

  const double total = gk_integrate(spd, 0.0, kTwoPi, tol, "perimeter");
  out.L = 0.5 * total;
  const double L = out.L;
  const int n = n_samples;
  const double ds = 2.0 * L / n;

  const QuadRule ref = gauss_legendre(24, -1.0, 1.0);
  auto arc = [&](double a, double b) {
    const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < ref.x.size(); ++i) s += ref.w[i] * spd(c + hw * ref.x[i]);
    return s * hw;
  };
  auto advance = [&](double u0, double delta) {
    double u = u0 + delta / spd(u0);
    for (int it = 0; it < 60; ++it) {
      const double r = arc(u0, u) - delta;
      const double step = r / spd(u);
      u -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(u))) break;
    }
    return u;
  };

  out.s.resize(n);
  out.theta.resize(n);
  std::vector<double> u(n);
  const int mid = n / 2;  // s = 0
  u[mid] = 0.0;
  for (int j = mid + 1; j < n; ++j) u[j] = advance(u[j - 1], ds);
  for (int j = mid - 1; j >= 0; --j) u[j] = advance(u[j + 1], -ds);

  out.M.resize(n);
  out.tangent.resize(n);
  out.normal.resize(n);
  double unit_err = 0.0;
  for (int j = 0; j < n; ++j) {
    out.s[j] = -L + j * ds;
    out.theta[j] = theta_of(u[j]);
    const auto jt = curve.jet(out.theta[j]);
    const double sp = std::hypot(jt[1][0], jt[1][1]);
    out.M[j] = jt[0];
    out.tangent[j] = {dir * jt[1][0] / sp, dir * jt[1][1] / sp};
    out.normal[j] = {-out.tangent[j][1], out.tangent[j][0]};
    unit_err = std::max(unit_err, std::abs(std::hypot(out.tangent[j][0], out.tangent[j][1]) - 1.0));
  }
  // consistency of the inversion: the arc between consecutive samples is ds
  for (int j = 0; j + 1 < n; ++j)
    unit_err = std::max(unit_err, std::abs(arc(u[j], u[j + 1]) - ds) / ds);
  if (unit_err > std::max(tol, 1e-10) * 100.0)
    throw Error(ErrorKind::Solver, "arc-length inversion inaccurate: " + fmt(unit_err));

  // simplicity: no crossing of non-adjacent polygon edges
  for (int i = 0; i < n; ++i) {
    const Vec2 p = out.M[i], q = out.M[(i + 1) % n];
    for (int j = i + 2; j < n; ++j) {
      if (i == 0 && j == n - 1) continue;
      const Vec2 r = out.M[j], t = out.M[(j + 1) % n];
      auto orient = [](const Vec2& a, const Vec2& b, const Vec2& c) {
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
      };
      const double o1 = orient(p, q, r), o2 = orient(p, q, t), o3 = orient(r, t, p), o4 = orient(r, t, q);
      if (o1 * o2 < 0.0 && o3 * o4 < 0.0)
        throw Error(ErrorKind::Assumption, "curve self-intersects near s = " + fmt(out.s[i]));
    }
  }

  out.kappa = curvature(spec, out);
  return out;
}

std::vector<double> curvature(const CurveSpec& spec, const ArcLengthData& arc) {
  const Curve curve(spec);
  std::vector<double> k(arc.theta.size());
  for (std::size_t j = 0; j < k.size(); ++j) {
    const auto jt = curve.jet(arc.theta[j]);
    const double sp = std::hypot(jt[1][0], jt[1][1]);
    k[j] = arc.direction * (jt[1][0] * jt[2][1] - jt[1][1] * jt[2][0]) / (sp * sp * sp);
  }
  return k;
}

NormalJet normal_jet(const FieldSpec& field, const ArcLengthData& arc, double step, double vanish_tol) {
  const Expression B(field.expression);
  const int k = field.k;
  if (k < 1 || k > 5) throw Error(ErrorKind::Config, "vanishing order k must be in 1..5");
  if (!(step > 0.0)) throw Error(ErrorKind::Config, "jet step must be positive");

  double kmax = 0.0;
  for (double v : arc.kappa) kmax = std::max(kmax, std::abs(v));
  const int widest = (k + 2) / 2 + 1;
  if (1.0 - widest * step * kmax <= 0.0)
    throw Error(ErrorKind::Domain, "tubular map not injective over the jet stencil (1 - t kappa <= 0)");

  const int levels = 3;
  const std::size_t n = arc.s.size();
  NormalJet out;
  out.gamma.resize(n);
  out.delta.resize(n);
  out.delta_tilde.resize(n);

  std::vector<std::vector<int>> offsets(k + 2);
  std::vector<std::vector<double>> weights(k + 2);
  for (int m = 0; m <= k + 1; ++m) {
    offsets[m] = central_offsets(m);
    std::vector<double> x(offsets[m].begin(), offsets[m].end());
    weights[m] = fd_weights(x, m);
  }

  for (std::size_t j = 0; j < n; ++j) {
    const Vec2 M = arc.M[j], nu = arc.normal[j];
    auto f = [&](double t) { return B(M[0] + t * nu[0], M[1] + t * nu[1]); };
    std::vector<double> d(k + 2);
    for (int m = 0; m <= k + 1; ++m) {
      if (m == 0) {
        d[0] = f(0.0);
        continue;
      }
      std::vector<double> est;
      for (int l = 0; l < levels; ++l) {
        const double e = step / (1 << l);
        double acc = 0.0;
        for (std::size_t i = 0; i < offsets[m].size(); ++i) acc += weights[m][i] * f(offsets[m][i] * e);
        est.push_back(acc / std::pow(e, m));
      }
      d[m] = richardson(est, 2.0, 2.0);
    }
    out.gamma[j] = d[k] / factorial(k);
    out.delta[j] = d[k + 1] / factorial(k + 1);
    out.delta_tilde[j] = out.delta[j] - out.gamma[j] * arc.kappa[j];
    for (int m = 0; m < k; ++m) out.max_lower_order = std::max(out.max_lower_order, std::abs(d[m]));
  }
  double gscale = 0.0;
  for (double g : out.gamma) gscale = std::max(gscale, std::abs(g));
  if (out.max_lower_order > vanish_tol * std::max(1.0, gscale) || gscale == 0.0)
    throw Error(ErrorKind::Assumption,
                "field does not vanish to declared order " + std::to_string(k) + " (lower normal derivative " +
                    fmt(out.max_lower_order) + ")");
  return out;
}

NormalJet normal_jet_exact(const FieldSpec& field, const ArcLengthData& arc) {
  const Expression B(field.expression);
  const int k = field.k;
  if (k + 1 > Jet::kMax) throw Error(ErrorKind::Config, "vanishing order too large for Taylor arithmetic");
  NormalJet out;
  const std::size_t n = arc.s.size();
  out.gamma.resize(n);
  out.delta.resize(n);
  out.delta_tilde.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    Jet x(arc.M[j][0], k + 1), y(arc.M[j][1], k + 1);
    x.c[1] = arc.normal[j][0];
    y.c[1] = arc.normal[j][1];
    const Jet f = B.eval(x, y, Jet(0.0, k + 1));
    out.gamma[j] = f.c[k];
    out.delta[j] = f.c[k + 1];
    out.delta_tilde[j] = out.delta[j] - out.gamma[j] * arc.kappa[j];
    for (int m = 0; m < k; ++m) out.max_lower_order = std::max(out.max_lower_order, std::abs(f.c[m]));
  }
  return out;
}

double circulation(const FieldSpec& field, const CurveSpec& spec, double rel_tol) {
  const Expression B(field.expression);
  const Curve curve(spec);
  // integral of B over the interior as the boundary integral of P dx2 with
  // P(x1, x2) = int_0^x1 B(u, x2) du
  auto P = [&](double x1, double x2) {
    if (x1 == 0.0) return 0.0;
    return gk_integrate([&](double u) { return B(u, x2); }, 0.0, x1, rel_tol, "circulation (inner)");
  };
  const double flux = gk_integrate(
      [&](double th) {
        const auto j = curve.jet(th);
        return P(j[0][0], j[0][1]) * j[1][1];
      },
      0.0, kTwoPi, rel_tol, "circulation");
  const double area = 0.5 * gk_integrate(
                                [&](double th) {
                                  const auto j = curve.jet(th);
                                  return j[0][0] * j[1][1] - j[0][1] * j[1][0];
                                },
                                0.0, kTwoPi, 1e-13, "area");
  const double perimeter = gk_integrate([&](double th) { return curve.speed(th); }, 0.0, kTwoPi, 1e-13, "perimeter");
  return (area > 0.0 ? flux : -flux) / perimeter;
}

Wells locate_wells(const PeriodicSeries& gamma, const std::vector<double>& s) {
  const std::size_t n = s.size();
  if (n < 8) throw Error(ErrorKind::Internal, "locate_wells: too few samples");
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) g[i] = gamma(s[i]);
  const auto [mn, mx] = std::minmax_element(g.begin(), g.end());
  const double scale = std::max(1.0, std::abs(*mx));
  if (*mx - *mn <= 1e-10 * scale) throw Error(ErrorKind::Assumption, "no isolated wells: gamma is constant");

  std::vector<std::size_t> minima;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = g[(i + n - 1) % n], b = g[(i + 1) % n];
    if (g[i] < a && g[i] <= b) minima.push_back(i);
  }
  if (minima.size() < 2)
    throw Error(ErrorKind::Assumption, "gamma has a single minimum; two symmetric wells are required");
  if (minima.size() > 2)
    throw Error(ErrorKind::Assumption,
                "gamma has " + std::to_string(minima.size()) + " local minima; exactly two wells are required");

  const double ds = s[1] - s[0];
  std::vector<double> loc, val, curv;
  for (std::size_t i : minima) {
    double x = s[i];
    for (int it = 0; it < 50; ++it) {
      const double d1 = gamma.derivative(x, 1), d2 = gamma.derivative(x, 2);
      if (d2 <= 0.0) break;
      double step = d1 / d2;
      step = std::clamp(step, -2.0 * ds, 2.0 * ds);
      x -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(x))) break;
    }
    const double d2 = gamma.derivative(x, 2);
    if (!(d2 > 1e-8 * scale))
      throw Error(ErrorKind::Assumption, "degenerate well: gamma'' = " + fmt(d2) + " at s = " + fmt(x));
    loc.push_back(x);
    val.push_back(gamma(x));
    curv.push_back(d2);
  }
  // map into [-L, L)
  const double L = 0.5 * gamma.period();
  for (double& x : loc) x = std::remainder(x, 2.0 * L);

  Wells w;
  const int r = loc[0] < loc[1] ? 0 : 1;
  w.s_r = loc[r];
  w.s_l = loc[1 - r];
  if (!(w.s_r < 0.0 && w.s_l > 0.0))
    throw Error(ErrorKind::Assumption, "wells must lie on opposite sides of the symmetry axis");
  if (std::abs(w.s_r + w.s_l) > 1e-6 * L)
    throw Error(ErrorKind::Assumption, "wells are not symmetric: s_r = " + fmt(w.s_r) + ", s_l = " + fmt(w.s_l));
  if (std::abs(val[0] - val[1]) > 1e-6 * scale)
    throw Error(ErrorKind::Assumption, "the two minima of gamma differ; the minimum is not shared");
  w.gamma0 = val[r];
  w.gamma_dd = curv[r];
  if (!(w.gamma0 > 0.0)) throw Error(ErrorKind::Assumption, "gamma0 must be positive");
  return w;
}

Variability variability_check(const std::vector<double>& gamma, double gamma0, double epsilon) {
  Variability v;
  for (double g : gamma) v.deviation = std::max(v.deviation, std::abs(1.0 - gamma0 / g));
  v.pass = v.deviation <= epsilon && !(epsilon == 0.0 && v.deviation > 0.0);
  return v;
}

void GeometryProfile::rebuild() {
  gamma_fn = PeriodicSeries(gamma, -L, 2.0 * L);
  delta_fn = PeriodicSeries(delta, -L, 2.0 * L);
  kappa_fn = PeriodicSeries(kappa, -L, 2.0 * L);
  delta_tilde_fn = PeriodicSeries(delta_tilde, -L, 2.0 * L);
}

GeometryProfile build_geometry(const CurveSpec& curve, const FieldSpec& field, const GeometryOptions& opt) {
  const ArcLengthData arc = arclength_parametrize(curve, opt.n_samples);
  const Expression B(field.expression);
  const int n = opt.n_samples;

  // mirror symmetry of the curve: M(-s) = (-x1, x2)(M(s))
  double sym = 0.0, size = 0.0;
  for (int j = 0; j < n; ++j) {
    const int jm = (n - j) % n;
    sym = std::max(sym, std::hypot(arc.M[jm][0] + arc.M[j][0], arc.M[jm][1] - arc.M[j][1]));
    size = std::max(size, std::hypot(arc.M[j][0], arc.M[j][1]));
  }
  if (sym > opt.symmetry_tol * std::max(1.0, size))
    throw Error(ErrorKind::Assumption, "curve is not symmetric under x1 -> -x1 (defect " + fmt(sym) + ")");
  // mirror symmetry of the field, on the curve and on shrunken copies
  double fsym = 0.0, fscale = 0.0;
  for (double lam : {0.3, 0.7, 1.0, 1.2}) {
    for (int j = 0; j < n; j += 4) {
      const double x = lam * arc.M[j][0], y = lam * arc.M[j][1];
      const double b = B(x, y);
      fsym = std::max(fsym, std::abs(b - B(-x, y)));
      fscale = std::max(fscale, std::abs(b));
    }
  }
  if (fsym > opt.symmetry_tol * std::max(1.0, fscale))
    throw Error(ErrorKind::Assumption, "field is not symmetric under x1 -> -x1 (defect " + fmt(fsym) + ")");

  const NormalJet jet = normal_jet(field, arc, opt.jet_step);
  GeometryProfile p;
  p.k = field.k;
  p.L = arc.L;
  p.s = arc.s;
  p.M = arc.M;
  p.kappa = arc.kappa;
  p.gamma = jet.gamma;
  p.delta = jet.delta;
  p.delta_tilde = jet.delta_tilde;
  for (double g : p.gamma)
    if (!(g > 0.0)) throw Error(ErrorKind::Assumption, "gamma must be positive on the curve");
  p.rebuild();
  p.beta0 = circulation(field, curve);

  const Wells w = locate_wells(p.gamma_fn, p.s);
  p.s_r = w.s_r;
  p.s_l = w.s_l;
  p.gamma0 = w.gamma0;
  p.gamma_dd = w.gamma_dd;

  const Variability v = variability_check(p.gamma, p.gamma0, opt.variability_eps);
  p.variability = v.deviation;
  if (!v.pass)
    p.warnings.push_back("gamma variability " + fmt(v.deviation) + " exceeds epsilon " + fmt(opt.variability_eps));
  return p;
}

GeometryProfile profile_from_functions(int k, double L, int n, const ScalarFn& gamma, const ScalarFn& delta,
                                       const ScalarFn& kappa, double beta0, bool find_wells) {
  GeometryProfile p;
  p.k = k;
  p.L = L;
  p.beta0 = beta0;
  for (int j = 0; j < n; ++j) {
    const double s = -L + 2.0 * L * j / n;
    p.s.push_back(s);
    p.M.push_back({0.0, 0.0});
    p.gamma.push_back(gamma(s));
    p.delta.push_back(delta(s));
    p.kappa.push_back(kappa(s));
    p.delta_tilde.push_back(p.delta.back() - p.gamma.back() * p.kappa.back());
  }
  p.rebuild();
  if (find_wells) {
    const Wells w = locate_wells(p.gamma_fn, p.s);
    p.s_r = w.s_r;
    p.s_l = w.s_l;
    p.gamma0 = w.gamma0;
    p.gamma_dd = w.gamma_dd;
  } else {
    p.gamma0 = *std::min_element(p.gamma.begin(), p.gamma.end());
  }
  p.variability = variability_check(p.gamma, p.gamma0, 1.0).deviation;
  return p;
}

std::string profile_csv(const GeometryProfile& p) {
  std::ostringstream os;
  os << "# s: arc length [length]; kappa: curvature kappa [1/length]; gamma: normal derivative gamma(s) of B; "
        "delta, delta_tilde: next-order normal coefficients delta(s), tilde delta(s)\n";
  os << "s,kappa,gamma,delta,delta_tilde\n";
  char buf[160];
  for (std::size_t j = 0; j < p.s.size(); ++j) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", p.s[j], p.kappa[j], p.gamma[j], p.delta[j],
                  p.delta_tilde[j]);
    os << buf;
  }
  return os.str();
}

}  // namespace tk
