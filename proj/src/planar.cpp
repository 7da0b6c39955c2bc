#include "tunnelkit/planar.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <cmath>
#include <cstdio>

#include "tunnelkit/errors.hpp"

namespace tk {

Vec2 poincare_potential(const Expression& B, double x1, double x2, int quad_t) {
  const QuadRule rule = gauss_legendre(quad_t, 0.0, 1.0);
  double s = 0.0;
  for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * rule.x[i] * B(rule.x[i] * x1, rule.x[i] * x2);
  return {-s * x2, s * x1};
}

PlanarSpectrum planar_direct(const FieldSpec& field, const CurveSpec& curve_spec, double hbar,
                             const PlanarOptions& opt) {
  if (!(hbar > 0.0)) throw Error(ErrorKind::Config, "hbar must be positive");
  if (!(opt.dx > 0.0) || opt.count < 1) throw Error(ErrorKind::Config, "invalid planar grid");
  const Expression B0(field.expression);
  const double cr = std::cos(opt.rotation), sr = std::sin(opt.rotation);
  auto Bf = [&](double x1, double x2) {
    // field rotated by the given angle: B'(x) = B(R^{-1} x)
    return B0(cr * x1 + sr * x2, -sr * x1 + cr * x2);
  };
  const Expression chi = opt.gauge_chi.empty() ? Expression() : Expression(opt.gauge_chi);

  double X = opt.half_width;
  double bmax = 0.0;
  if (X <= 0.0 || opt.check_resolution) {
    const Curve curve(curve_spec);
    double ext = 0.0;
    for (int i = 0; i < 512; ++i) {
      const auto j = curve.jet(2.0 * kPi * i / 512);
      const double x = cr * j[0][0] - sr * j[0][1], y = sr * j[0][0] + cr * j[0][1];
      ext = std::max({ext, std::abs(x), std::abs(y)});
    }
    if (X <= 0.0) X = ext + opt.margin;
    if (X <= ext) throw Error(ErrorKind::Config, "planar box does not contain the curve");
  }
  const int N = static_cast<int>(std::lround(2.0 * X / opt.dx));
  const double dx = 2.0 * X / N;
  const int m = N - 1;  // interior points per axis
  if (m < 4) throw Error(ErrorKind::Config, "planar grid too small");
  auto coord = [&](int i) { return -X + (i + 1) * dx; };

  if (opt.check_resolution) {
    for (int i = 0; i <= N; i += std::max(1, N / 200))
      for (int j = 0; j <= N; j += std::max(1, N / 200)) bmax = std::max(bmax, std::abs(Bf(-X + i * dx, -X + j * dx)));
    // the normal length scale near a zero of order k is hbar^{1/(k+2)}
    const double scale = std::pow(hbar, 1.0 / (field.k + 2.0));
    if (dx > 0.25 * scale || bmax * dx * dx / hbar > 0.5) {
      char buf[200];
      std::snprintf(buf, sizeof buf, "planar grid too coarse for hbar = %.3g (dx = %.3g, flux per cell %.3g)", hbar, dx,
                    bmax * dx * dx / hbar);
      throw Error(ErrorKind::Config, buf);
    }
  }

  const QuadRule link = gauss_legendre(opt.quad_link, 0.0, 1.0);
  const QuadRule tq = gauss_legendre(opt.quad_t, 0.0, 1.0);
  auto A = [&](double x1, double x2) -> Vec2 {
    double s = 0.0;
    for (std::size_t i = 0; i < tq.x.size(); ++i) s += tq.w[i] * tq.x[i] * Bf(tq.x[i] * x1, tq.x[i] * x2);
    return {-s * x2, s * x1};
  };
  // phase of the link from (x1, x2) to (x1 + dx e1, x2 + dx e2)
  auto link_phase = [&](double x1, double x2, double e1, double e2) {
    double s = 0.0;
    for (std::size_t g = 0; g < link.x.size(); ++g) {
      const Vec2 a = A(x1 + link.x[g] * dx * e1, x2 + link.x[g] * dx * e2);
      s += link.w[g] * (a[0] * e1 + a[1] * e2);
    }
    s *= dx;
    if (!chi.empty()) s += chi(x1 + dx * e1, x2 + dx * e2) - chi(x1, x2);
    return s / hbar;
  };

  const int n = m * m;
  auto id = [&](int i, int j) { return j * m + i; };
  const double c = hbar * hbar / (dx * dx);
  std::vector<Eigen::Triplet<cplx>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 5);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) {
      const double x = coord(i), y = coord(j);
      trip.emplace_back(id(i, j), id(i, j), 4.0 * c);
      if (i + 1 < m) {
        const cplx v = -c * std::exp(cplx(0.0, -link_phase(x, y, 1.0, 0.0)));
        trip.emplace_back(id(i, j), id(i + 1, j), v);
        trip.emplace_back(id(i + 1, j), id(i, j), std::conj(v));
      }
      if (j + 1 < m) {
        const cplx v = -c * std::exp(cplx(0.0, -link_phase(x, y, 0.0, 1.0)));
        trip.emplace_back(id(i, j), id(i, j + 1), v);
        trip.emplace_back(id(i, j + 1), id(i, j), std::conj(v));
      }
    }
  Eigen::SparseMatrix<cplx> H(n, n);
  H.setFromTriplets(trip.begin(), trip.end());

  // shift below the expected bottom; lowered until the factorization is positive definite
  double shift = 0.0;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<cplx>, Eigen::Lower> llt;
  {
    Eigen::SparseMatrix<cplx> I(n, n);
    I.setIdentity();
    // a cheap lower bound estimate from a few inverse iterations at shift 0
    llt.compute(H);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::Solver, "planar factorization failed");
    Eigen::VectorXcd v = Eigen::VectorXcd::Constant(n, cplx(1.0, 0.0));
    double est = 0.0;
    for (int it = 0; it < 8; ++it) {
      Eigen::VectorXcd w = llt.solve(v);
      est = (v.dot(v)).real() / (v.dot(w)).real();
      v = w / w.norm();
    }
    shift = 0.9 * est;
    for (int tries = 0; tries < 20; ++tries) {
      llt.compute(H - shift * I);
      if (llt.info() == Eigen::Success) break;
      shift *= 0.8;
    }
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::Solver, "planar shifted factorization failed");
  }
  LanczosOptions lo;
  lo.max_steps = 200;
  lo.tol = 1e-9;
  auto r = shift_invert_lanczos(
      n, opt.count, shift,
      [&](const CVec& x, CVec& y) {
        Eigen::Map<const Eigen::VectorXcd> xv(x.data(), n);
        y.resize(n);
        Eigen::Map<Eigen::VectorXcd>(y.data(), n) = H * xv;
      },
      [&](CVec& x) {
        Eigen::Map<Eigen::VectorXcd> xv(x.data(), n);
        Eigen::VectorXcd s = llt.solve(xv);
        xv = s;
      },
      lo);
  if (!r.converged) throw Error(ErrorKind::Solver, "planar eigensolver did not converge");
  PlanarSpectrum out;
  out.hbar = hbar;
  out.unknowns = n;
  out.half_width = X;
  const double scale = std::pow(hbar, (2.0 * field.k + 2.0) / (field.k + 2.0));
  for (int i = 0; i < opt.count; ++i) {
    out.eigenvalues.push_back(r.values[i]);
    out.residuals.push_back(r.residuals[i]);
    out.scaled.push_back(r.values[i] / scale);
  }
  return out;
}

}  // namespace tk
