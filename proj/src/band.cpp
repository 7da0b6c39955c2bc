#include "tunnelkit/band.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <boost/math/tools/roots.hpp>

#include "lapack.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/version.hpp"

namespace tk {

namespace {

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

template <class S>
SymTridiag<S> assemble_impl(const Grid1D& grid, const std::function<S(double)>& potential) {
  grid.validate();
  const int m = grid.interior();
  const double d = grid.spacing();
  SymTridiag<S> out;
  out.diag.resize(m);
  out.off.assign(m - 1, S(-1.0 / (d * d)));
  for (int i = 0; i < m; ++i) out.diag[i] = S(2.0 / (d * d)) + potential(grid.point(i));
  return out;
}

// LU-factored complex tridiagonal (H - shift), general (non-Hermitian) pivoting.
struct TriLU {
  std::vector<cplx> dl, d, du, du2;
  std::vector<lapack_int> ipiv;

  TriLU(const ComplexTridiag& h, cplx shift) {
    const int n = static_cast<int>(h.diag.size());
    dl = h.off;
    du = h.off;
    d.resize(n);
    for (int i = 0; i < n; ++i) d[i] = h.diag[i] - shift;
    du2.resize(std::max(n - 2, 1));
    ipiv.resize(n);
    const lapack_int info = LAPACKE_zgttrf(n, dl.data(), d.data(), du.data(), du2.data(), ipiv.data());
    if (info < 0) throw Error(ErrorKind::Internal, "zgttrf argument error");
    // info > 0: exactly singular; the shift hit an eigenvalue, perturb and retry
    if (info > 0) {
      *this = TriLU(h, shift * (1.0 + 1e-13) + 1e-14);
    }
  }

  void solve(std::vector<cplx>& b) const {
    const int n = static_cast<int>(d.size());
    const lapack_int info = LAPACKE_zgttrs(LAPACK_COL_MAJOR, 'N', n, 1, dl.data(), d.data(), du.data(),
                                           du2.data(), ipiv.data(), b.data(), n);
    if (info != 0) throw Error(ErrorKind::Solver, "zgttrs failed");
  }
};

cplx bilinear(const std::vector<cplx>& a, const std::vector<cplx>& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const std::vector<cplx>& a) {
  double s = 0.0;
  for (const auto& v : a) s += std::norm(v);
  return std::sqrt(s);
}

std::vector<cplx> apply(const ComplexTridiag& h, const std::vector<cplx>& x) {
  const std::size_t n = x.size();
  std::vector<cplx> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    cplx s = h.diag[i] * x[i];
    if (i > 0) s += h.off[i - 1] * x[i - 1];
    if (i + 1 < n) s += h.off[i] * x[i + 1];
    y[i] = s;
  }
  return y;
}

cplx rayleigh(const ComplexTridiag& h, const std::vector<cplx>& x) {
  return bilinear(x, apply(h, x)) / bilinear(x, x);
}

// Inverse iteration at a fixed shift followed by Rayleigh polishing.
cplx inverse_iteration(const ComplexTridiag& h, cplx shift, std::vector<cplx>& x, int max_iter = 60) {
  TriLU lu(h, shift);
  cplx lam = rayleigh(h, x);
  for (int it = 0; it < max_iter; ++it) {
    lu.solve(x);
    const double nx = norm2(x);
    for (auto& v : x) v /= nx;
    const cplx next = rayleigh(h, x);
    const bool done = std::abs(next - lam) <= 1e-15 * std::max(1.0, std::abs(next));
    lam = next;
    if (done && it > 1) break;
  }
  for (int it = 0; it < 2; ++it) {
    TriLU rq(h, lam);
    rq.solve(x);
    const double nx = norm2(x);
    for (auto& v : x) v /= nx;
    lam = rayleigh(h, x);
  }
  return lam;
}

}  // namespace

void Grid1D::validate() const {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error(ErrorKind::Domain, "grid half width must be positive");
  if (n < 16) throw Error(ErrorKind::Domain, "grid needs at least 16 points");
}

ComplexTridiag assemble_montgomery(int k, cplx xi, const Grid1D& grid, cplx gamma_scale) {
  if (k < 1) throw Error(ErrorKind::Domain, "model order k must be >= 1");
  if (!finite(xi) || !finite(gamma_scale)) throw Error(ErrorKind::Domain, "non-finite Montgomery parameter");
  if (gamma_scale == 0.0) throw Error(ErrorKind::Domain, "gamma_scale must be nonzero");
  const double kp1 = k + 1.0;
  return assemble_impl<cplx>(grid, [&](double t) {
    const cplx v = xi - gamma_scale * std::pow(t, kp1) / kp1;
    return v * v;
  });
}

RealTridiag assemble_real(const Grid1D& grid, const std::function<double(double)>& potential) {
  return assemble_impl<double>(grid, potential);
}

RealEigs lowest_real_eigs(const RealTridiag& m, int count, double spacing) {
  const int n = static_cast<int>(m.diag.size());
  if (count < 1 || count > n) throw Error(ErrorKind::Domain, "requested eigenvalue count exceeds matrix dimension");
  std::vector<double> d = m.diag, e = m.off;
  e.push_back(0.0);
  std::vector<double> w(n), z(static_cast<std::size_t>(n) * count);
  std::vector<lapack_int> isuppz(2 * count);
  lapack_int found = 0;
  const lapack_int info = LAPACKE_dstevr(LAPACK_COL_MAJOR, 'V', 'I', n, d.data(), e.data(), 0.0, 0.0, 1, count,
                                         0.0, &found, w.data(), z.data(), n, isuppz.data());
  if (info != 0 || found != count) {
    std::ostringstream os;
    os << "dstevr failed (info " << info << ", found " << found << " of " << count << ")";
    throw Error(ErrorKind::Solver, os.str());
  }
  RealEigs out;
  const double scale = 1.0 / std::sqrt(spacing);
  for (int j = 0; j < count; ++j) {
    out.values.push_back(w[j]);
    std::vector<double> v(z.begin() + static_cast<std::ptrdiff_t>(j) * n,
                          z.begin() + static_cast<std::ptrdiff_t>(j + 1) * n);
    double ref = v[n / 2];
    if (std::abs(ref) < 1e-8) ref = *std::max_element(v.begin(), v.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    const double sgn = ref < 0.0 ? -scale : scale;
    for (auto& x : v) x *= sgn;
    out.vectors.push_back(std::move(v));
  }
  return out;
}

ComplexEigenpair complex_eigenpair(int k, cplx xi, cplx gamma_scale, const Grid1D& grid, bool check_separation) {
  const double dt = grid.spacing();
  const double xr = xi.real(), xim = xi.imag();
  const double gr = gamma_scale.real(), gim = gamma_scale.imag();
  if (!(gr > 0.0)) throw Error(ErrorKind::Domain, "homotopy start needs Re(gamma_scale) > 0");

  // real starting point
  const ComplexTridiag h0 = assemble_montgomery(k, xr, grid, gr);
  RealTridiag hr;
  hr.diag.resize(h0.diag.size());
  hr.off.resize(h0.off.size());
  for (std::size_t i = 0; i < h0.diag.size(); ++i) hr.diag[i] = h0.diag[i].real();
  for (std::size_t i = 0; i < h0.off.size(); ++i) hr.off[i] = h0.off[i].real();
  const RealEigs re = lowest_real_eigs(hr, 2, dt);
  std::vector<cplx> x(re.vectors[0].begin(), re.vectors[0].end());
  cplx lam = re.values[0];
  cplx lam_prev = lam;

  const double reach = std::max(std::abs(xim), std::abs(gim));
  const int steps = std::max(1, static_cast<int>(std::ceil(reach / 0.04)));
  ComplexTridiag h = h0;
  for (int s = 1; s <= steps; ++s) {
    const double a = static_cast<double>(s) / steps;
    h = assemble_montgomery(k, cplx(xr, a * xim), grid, cplx(gr, a * gim));
    const cplx guess = s == 1 ? lam : 2.0 * lam - lam_prev;
    std::vector<cplx> y = x;
    const cplx next = inverse_iteration(h, guess, y);
    // overlap monitoring against the previous step
    const double ov = std::abs(std::inner_product(x.begin(), x.end(), y.begin(), cplx(0.0), std::plus<>(),
                                                  [](cplx p, cplx q) { return std::conj(p) * q; })) /
                      (norm2(x) * norm2(y));
    if (ov < 0.9) {
      std::ostringstream os;
      os << "branch ambiguity along homotopy at xi = " << cplx(xr, a * xim) << " (overlap " << ov << ")";
      throw Error(ErrorKind::Solver, os.str());
    }
    lam_prev = lam;
    lam = next;
    x = std::move(y);
  }

  if (check_separation) {
    // nearest other eigenvalue by deflated inverse iteration at the same shift
    std::vector<cplx> z(x.size());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] = std::sin(0.37 * static_cast<double>(i) + 0.1);
    const cplx xx = bilinear(x, x);
    TriLU lu(h, lam);
    cplx mu = 0.0;
    for (int it = 0; it < 30; ++it) {
      const cplx p = bilinear(x, z) / xx;
      for (std::size_t i = 0; i < z.size(); ++i) z[i] -= p * x[i];
      lu.solve(z);
      const double nz = norm2(z);
      for (auto& v : z) v /= nz;
      mu = rayleigh(h, z);
    }
    if (std::abs(mu - lam) < 1e-6 * std::max(1.0, std::abs(lam))) {
      std::ostringstream os;
      os << "eigenvalue not separated at xi = " << xi << ": " << lam << " vs " << mu;
      throw Error(ErrorKind::Solver, os.str());
    }
  }

  ComplexEigenpair out;
  out.grid = grid;
  out.eigenvalue = lam;
  const cplx b = bilinear(x, x) * dt;
  const cplx s = 1.0 / std::sqrt(b);
  for (auto& v : x) v *= s;
  // sign convention: positive real part at the midpoint
  if (x[x.size() / 2].real() < 0.0)
    for (auto& v : x) v = -v;
  out.samples = std::move(x);
  out.bilinear_norm = bilinear(out.samples, out.samples) * dt;
  return out;
}

MontgomeryFamily::MontgomeryFamily(int k, Grid1D base, int levels) : k_(k), base_(base), levels_(levels) {
  if (k < 1) throw Error(ErrorKind::Domain, "model order k must be >= 1");
  base.validate();
  if (levels < 1 || levels > 6) throw Error(ErrorKind::Domain, "Richardson levels must be in [1, 6]");
}

double MontgomeryFamily::nu(double xi, int index, double gamma_scale) const {
  std::vector<double> v;
  const double kp1 = k_ + 1.0;
  for (int l = 0; l < levels_; ++l) {
    const Grid1D g = base_.refined(l);
    const RealTridiag h = assemble_real(g, [&](double t) {
      const double w = xi - gamma_scale * std::pow(t, kp1) / kp1;
      return w * w;
    });
    v.push_back(lowest_real_eigs(h, index + 1, g.spacing()).values[index]);
  }
  return richardson(v, 2.0, 2.0);
}

double MontgomeryFamily::dnu(double xi) const {
  std::vector<double> v;
  const double kp1 = k_ + 1.0;
  for (int l = 0; l < levels_; ++l) {
    const Grid1D g = base_.refined(l);
    auto pot = [&](double t) { return xi - std::pow(t, kp1) / kp1; };
    const RealTridiag h = assemble_real(g, [&](double t) { return pot(t) * pot(t); });
    const RealEigs e = lowest_real_eigs(h, 1, g.spacing());
    double s = 0.0;
    for (int i = 0; i < g.interior(); ++i) s += 2.0 * pot(g.point(i)) * e.vectors[0][i] * e.vectors[0][i];
    v.push_back(s * g.spacing());
  }
  return richardson(v, 2.0, 2.0);
}

cplx MontgomeryFamily::nu_complex(cplx xi, cplx gamma_scale) const {
  std::vector<cplx> v;
  for (int l = 0; l < levels_; ++l)
    v.push_back(complex_eigenpair(k_, xi, gamma_scale, base_.refined(l), l == 0).eigenvalue);
  return richardson(v, 2.0, 2.0);
}

MontgomeryFamily::Moments MontgomeryFamily::moments(cplx xi) const {
  std::vector<cplx> ev, fh, m1, mk2, m2k3, mdu;
  const double kp1 = k_ + 1.0;
  for (int l = 0; l < levels_; ++l) {
    const Grid1D g = base_.refined(l);
    const ComplexEigenpair p = complex_eigenpair(k_, xi, 1.0, g, l == 0);
    const double dt = g.spacing();
    cplx a = 0, b = 0, c = 0, d = 0, e = 0;
    const int n = g.interior();
    for (int i = 0; i < n; ++i) {
      const double t = g.point(i);
      const cplx u2 = p.samples[i] * p.samples[i];
      a += 2.0 * (xi - std::pow(t, kp1) / kp1) * u2;
      b += t * u2;
      c += std::pow(t, k_ + 2) * u2;
      d += std::pow(t, 2 * k_ + 3) * u2;
      const cplx up = ((i + 1 < n ? p.samples[i + 1] : 0.0) - (i > 0 ? p.samples[i - 1] : 0.0)) / (2.0 * dt);
      e += up * p.samples[i];
    }
    ev.push_back(p.eigenvalue);
    fh.push_back(a * dt);
    m1.push_back(b * dt);
    mk2.push_back(c * dt);
    m2k3.push_back(d * dt);
    mdu.push_back(e * dt);
  }
  Moments m;
  m.eigenvalue = richardson(ev, 2.0, 2.0);
  m.fh = richardson(fh, 2.0, 2.0);
  m.m1 = richardson(m1, 2.0, 2.0);
  m.mk2 = richardson(mk2, 2.0, 2.0);
  m.m2k3 = richardson(m2k3, 2.0, 2.0);
  m.mdu = richardson(mdu, 2.0, 2.0);
  return m;
}

BandTable build_band_table(int k, const BandOptions& opt) {
  if (!(opt.xi_hi > opt.xi_lo) || opt.n_samples < 5) throw Error(ErrorKind::Domain, "invalid xi range");
  if (opt.taylor_order < 4 || opt.taylor_order > opt.contour_points / 2)
    throw Error(ErrorKind::Domain, "taylor order must be in [4, contour_points / 2]");
  const MontgomeryFamily fam(k, opt.grid, opt.levels);
  BandTable t;
  t.k = k;
  t.grid = opt.grid;
  t.levels = opt.levels;
  t.code_version = kVersion;

  for (int i = 0; i < opt.n_samples; ++i) {
    const double xi = opt.xi_lo + (opt.xi_hi - opt.xi_lo) * i / (opt.n_samples - 1);
    t.xi_samples.push_back(xi);
    t.nu1_values.push_back(fam.nu(xi, 0));
    t.nu2_values.push_back(fam.nu(xi, 1));
  }
  const auto imin = static_cast<int>(std::min_element(t.nu1_values.begin(), t.nu1_values.end()) - t.nu1_values.begin());
  if (imin == 0 || imin == opt.n_samples - 1) throw Error(ErrorKind::Domain, "bracket failure: band minimum on the xi-range boundary");

  // xi0: zero of the Feynman-Hellmann derivative inside the sampled bracket
  double a = t.xi_samples[imin - 1], b = t.xi_samples[imin + 1];
  const double fa = fam.dnu(a), fb = fam.dnu(b);
  if (!(fa < 0.0 && fb > 0.0)) throw Error(ErrorKind::Solver, "bracket failure: derivative does not change sign");
  std::uintmax_t iters = 200;
  auto tol = [](double l, double r) { return std::abs(r - l) <= 1e-13; };
  const auto root = boost::math::tools::toms748_solve([&](double x) { return fam.dnu(x); }, a, b, fa, fb, tol, iters);
  t.xi0 = 0.5 * (root.first + root.second);
  if (k % 2 == 0 && std::abs(t.xi0) < 1e-9) t.xi0 = 0.0;  // even band: the symmetric point is exact
  t.nu0 = fam.nu(t.xi0);

  // curvature at the minimum: central differences of the derivative, extrapolated in the step
  std::vector<double> d2;
  for (double e : {0.04, 0.02, 0.01}) d2.push_back((fam.dnu(t.xi0 + e) - fam.dnu(t.xi0 - e)) / (2.0 * e));
  t.nu0_dd = richardson(d2, 2.0, 2.0);
  if (!(t.nu0_dd > 0.0)) throw Error(ErrorKind::Solver, "degenerate minimum");

  // holomorphic extension: Cauchy integral over a circle around xi0
  const int np = opt.contour_points;
  const double rho = opt.contour_radius;
  std::vector<cplx> vals(np);
  for (int j = 0; j < np; ++j) {
    const double th = 2.0 * kPi * j / np;
    vals[j] = fam.nu_complex(t.xi0 + std::polar(rho, th));
  }
  const std::vector<cplx> c = dft(vals);
  t.contour_radius = rho;
  t.taylor_coeffs.resize(opt.taylor_order + 1);
  double imag_max = 0.0;
  for (int n = 0; n <= opt.taylor_order; ++n) {
    const cplx cn = c[n] / (static_cast<double>(np) * std::pow(rho, n));
    t.taylor_coeffs[n] = cn.real();
    imag_max = std::max(imag_max, std::abs(cn.imag()) * std::pow(rho, n));
  }
  t.taylor_coeffs[0] = t.nu0;
  t.taylor_coeffs[1] = 0.0;
  t.taylor_imag_residual = imag_max;
  // trust radius: where the truncated tail stays negligible
  double tail = 0.0;
  for (int n = opt.taylor_order - 4; n <= opt.taylor_order; ++n) tail = std::max(tail, std::abs(t.taylor_coeffs[n]) * std::pow(rho, n));
  t.taylor_radius = tail < 1e-12 ? 0.9 * rho : 0.5 * rho;
  return t;
}

cplx band_holomorphic(const BandTable& t, cplx z, int derivative) {
  const cplx w = z - t.xi0;
  if (std::abs(w) > t.taylor_radius) {
    std::ostringstream os;
    os << "extension domain exceeded: |z - xi0| = " << std::abs(w) << " > " << t.taylor_radius;
    throw Error(ErrorKind::Domain, os.str());
  }
  const int d = static_cast<int>(t.taylor_coeffs.size()) - 1;
  cplx s = 0.0;
  for (int n = d; n >= derivative; --n) {
    double f = 1.0;
    for (int j = 0; j < derivative; ++j) f *= (n - j);
    s = s * w + f * t.taylor_coeffs[n];
  }
  return s;
}

Mat2 band_hessian(const BandTable& t, double gamma0, double gamma_dd, double /*sr*/) {
  if (!(gamma0 > 0.0)) throw Error(ErrorKind::Domain, "gamma0 must be positive");
  if (gamma_dd < 0.0) throw Error(ErrorKind::Domain, "gamma'' must be nonnegative");
  const double k = t.k;
  Mat2 h{};
  h[0][0] = 2.0 / (k + 2.0) * gamma_dd * std::pow(gamma0, -k / (k + 2.0)) * t.nu0;
  h[1][1] = t.nu0_dd;
  return h;
}

}  // namespace tk
