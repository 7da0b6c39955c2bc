#include "tunnelkit/eikonal.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

EikonalSolver::EikonalSolver(Side side, const GeometryProfile& profile, const BandTable& band)
    : side_(side), profile_(profile), band_(band) {
  s_well_ = side == Side::Right ? profile.s_r : profile.s_l;
  if (band.taylor_coeffs.size() < 5) throw Error(ErrorKind::Internal, "band Taylor series too short");
  const double c2 = band.taylor_coeffs[2], c3 = band.taylor_coeffs[3];
  // inverse of z sqrt(r(z)): a1 = 1/sqrt(c2), a2 = -c3 / (2 c2^2)
  a1_ = 1.0 / std::sqrt(c2);
  a2_ = -c3 / (2.0 * c2 * c2);
}

double EikonalSolver::F(double sigma) const {
  const double p = 2.0 / (band_.k + 2);
  return band_.nu0 * (std::pow(profile_.gamma0 / profile_.gamma_at(sigma), p) - 1.0);
}

double EikonalSolver::f(double sigma) const {
  const double p = 2.0 / (band_.k + 2);
  const double g = profile_.gamma_at(sigma);
  const double one_minus = -std::expm1(p * std::log(profile_.gamma0 / g));
  if (one_minus < -1e-12) throw Error(ErrorKind::Internal, "gamma below gamma0 at sigma = " + fmt(sigma));
  const double mag = std::sqrt(band_.nu0) * std::sqrt(std::max(0.0, one_minus));
  return sigma >= s_well_ ? mag : -mag;
}

double EikonalSolver::f_prime(double sigma) const {
  const double p = 2.0 / (band_.k + 2);
  const double x = sigma - s_well_;
  if (std::abs(x) < 1e-6) {
    const double gdd = profile_.gamma_at(s_well_, 2);
    return std::sqrt(band_.nu0 * 0.5 * p * gdd / profile_.gamma0);
  }
  const double g = profile_.gamma_at(sigma), gp = profile_.gamma_at(sigma, 1);
  // f^2 = nu0 (1 - (g0/g)^p), so 2 f f' = nu0 p (g0/g)^p g'/g
  const double rhs = band_.nu0 * p * std::pow(profile_.gamma0 / g, p) * gp / g;
  return rhs / (2.0 * f(sigma));
}

cplx EikonalSolver::nu(cplx z, int derivative) const {
  if (std::abs(z) >= band_.taylor_radius)
    throw Error(ErrorKind::Domain, "extension domain exceeded: |i phi| = " + fmt(std::abs(z)));
  const auto& c = band_.taylor_coeffs;
  cplx s = 0.0;
  const int n = static_cast<int>(c.size());
  for (int m = n - 1; m >= std::max(2, derivative); --m) {
    double fac = 1.0;
    for (int j = 0; j < derivative; ++j) fac *= (m - j);
    s = s * z + fac * c[m];
  }
  // Horner above skipped the powers of z below m = max(2, derivative)
  const int lowest = std::max(2, derivative);
  return s * std::pow(z, lowest - derivative);
}

cplx EikonalSolver::r(cplx z) const {
  const auto& c = band_.taylor_coeffs;
  cplx s = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 2; --m) s = s * z + c[m];
  return s;
}

cplx EikonalSolver::r_prime(cplx z) const {
  const auto& c = band_.taylor_coeffs;
  cplx s = 0.0;
  for (int m = static_cast<int>(c.size()) - 1; m >= 3; --m) s = s * z + static_cast<double>(m - 2) * c[m];
  return s;
}

cplx EikonalSolver::seed(double fval) const { return cplx(a1_ * fval, a2_ * fval * fval); }

EikonalSolver::Point EikonalSolver::solve(double sigma, cplx seed_phi) const {
  const double fv = f(sigma);
  if (fv == 0.0) return {0.0, cplx(f_prime(sigma) * a1_, 0.0), 0.0};
  const cplx target(0.0, fv);
  cplx z = cplx(0.0, 1.0) * (std::isnan(seed_phi.real()) ? seed(fv) : seed_phi);
  bool converged = false;
  for (int it = 0; it < 60; ++it) {
    if (std::abs(z) >= band_.taylor_radius)
      throw Error(ErrorKind::Domain, "eikonal Newton left the extension domain at sigma = " + fmt(sigma));
    const cplx rz = r(z);
    if (rz.real() <= 0.0) throw Error(ErrorKind::Solver, "eikonal branch jump at sigma = " + fmt(sigma));
    const cplx sq = std::sqrt(rz);
    const cplx G = z * sq - target;
    const cplx dG = sq + z * r_prime(z) / (2.0 * sq);
    const cplx step = G / dG;
    z -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(z))) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    // accept if the residual is already at rounding level
    const cplx G = z * std::sqrt(r(z)) - target;
    if (std::abs(G) > 1e-13) throw Error(ErrorKind::Solver, "eikonal Newton diverged at sigma = " + fmt(sigma));
  }
  const cplx sq = std::sqrt(r(z));
  const cplx dnut = sq + z * r_prime(z) / (2.0 * sq);
  Point p;
  p.phi = cplx(0.0, -1.0) * z;
  p.phi_prime = f_prime(sigma) / dnut;
  p.residual = std::abs(nu(z) - F(sigma));
  return p;
}

std::vector<double> f_profile(Side side, const GeometryProfile& profile, const BandTable& band,
                              const std::vector<double>& sigma) {
  const EikonalSolver s(side, profile, band);
  std::vector<double> out;
  out.reserve(sigma.size());
  for (double x : sigma) out.push_back(s.f(x));
  return out;
}

namespace {

void march(const EikonalSolver& solver, const std::vector<double>& sigma, std::size_t well, std::vector<cplx>& phi,
           std::vector<cplx>& dphi, double& max_res) {
  const std::size_t n = sigma.size();
  phi.assign(n, 0.0);
  dphi.assign(n, 0.0);
  const auto p0 = solver.solve(sigma[well]);
  phi[well] = p0.phi;
  dphi[well] = p0.phi_prime;
  max_res = p0.residual;
  auto sweep = [&](int dir) {
    for (long i = static_cast<long>(well) + dir; i >= 0 && i < static_cast<long>(n); i += dir) {
      const long a = i - dir, b = i - 2 * dir;
      cplx guess;
      if ((b - static_cast<long>(well)) * dir >= 0)
        guess = phi[a] + (phi[a] - phi[b]) * (sigma[i] - sigma[a]) / (sigma[a] - sigma[b]);
      else
        guess = phi[a] + dphi[a] * (sigma[i] - sigma[a]);
      const auto p = solver.solve(sigma[i], guess);
      // continuity: the new point must stay close to the extrapolation
      const double jump = std::abs(p.phi - guess);
      const double scale = std::abs(dphi[a]) * std::abs(sigma[i] - sigma[a]) + 0.05 * std::abs(phi[a]);
      if (jump > 0.5 * scale + 1e-10)
        throw Error(ErrorKind::Solver, "eikonal branch jump at sigma = " + fmt(sigma[i]));
      phi[i] = p.phi;
      dphi[i] = p.phi_prime;
      max_res = std::max(max_res, p.residual);
    }
  };
  sweep(+1);
  sweep(-1);
}

}  // namespace

std::vector<cplx> solve_phi(Side side, const GeometryProfile& profile, const BandTable& band,
                            const std::vector<double>& sigma, std::size_t well_index, double* max_residual) {
  const EikonalSolver solver(side, profile, band);
  std::vector<cplx> phi, dphi;
  double res = 0.0;
  march(solver, sigma, well_index, phi, dphi, res);
  if (max_residual) *max_residual = res;
  return phi;
}

std::vector<double> cumulative_simpson(const std::vector<double>& f, double h) {
  const std::size_t n = f.size();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) {
    if (i % 2 == 0) {
      out[i] = out[i - 2] + h / 3.0 * (f[i - 2] + 4.0 * f[i - 1] + f[i]);
    } else if (i + 1 < n) {
      // first half of a Simpson panel
      out[i] = out[i - 1] + h / 12.0 * (5.0 * f[i - 1] + 8.0 * f[i] - f[i + 1]);
    } else {
      out[i] = out[i - 1] + h / 12.0 * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]);
    }
  }
  return out;
}

namespace {

// Integral of values from the anchor index outward in both directions; the
// grid is uniform on each side of the anchor.
std::vector<double> primitive_from(const std::vector<double>& x, const std::vector<double>& v, std::size_t anchor) {
  const std::size_t n = x.size();
  std::vector<double> out(n, 0.0);
  if (anchor + 1 < n) {
    std::vector<double> fwd(v.begin() + anchor, v.end());
    const auto c = cumulative_simpson(fwd, x[anchor + 1] - x[anchor]);
    for (std::size_t i = 0; i < c.size(); ++i) out[anchor + i] = c[i];
  }
  if (anchor > 0) {
    std::vector<double> bwd(v.rend() - anchor - 1, v.rend());
    const auto c = cumulative_simpson(bwd, x[anchor - 1] - x[anchor]);
    for (std::size_t i = 0; i < c.size(); ++i) out[anchor - i] = c[i];
  }
  return out;
}

}  // namespace

PhasePrimitive phase_primitive(const EikonalSolution& sol, const GeometryProfile& profile, const BandTable& band) {
  const double q = 1.0 / (band.k + 2);
  const std::size_t n = sol.sigma.size();
  std::vector<double> re(n), im(n);
  PhasePrimitive out;
  out.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double gq = std::pow(profile.gamma_at(sol.sigma[i]), q);
    out.w[i] = gq * (band.xi0 + cplx(0.0, 1.0) * sol.phi[i]);
    re[i] = gq * (band.xi0 - sol.phi[i].imag());
  }
  // g is anchored at sigma = 0 (last sample on the right, first on the left);
  // integrate from 0 across the well to the far end; each side of the well is uniform
  std::vector<double> g(n, 0.0);
  if (sol.side == Side::Right) {
    std::vector<double> part(re.rbegin(), re.rbegin() + (n - sol.well_index));
    auto c1 = cumulative_simpson(part, sol.sigma[n - 2] - sol.sigma[n - 1]);
    for (std::size_t i = 0; i < c1.size(); ++i) g[n - 1 - i] = c1[i];
    std::vector<double> rest(re.rend() - sol.well_index - 1, re.rend());
    auto c2 = cumulative_simpson(rest, sol.sigma[0] - sol.sigma[1]);
    for (std::size_t i = 0; i < c2.size(); ++i) g[sol.well_index - i] = g[sol.well_index] + c2[i];
  } else {
    std::vector<double> part(re.begin(), re.begin() + sol.well_index + 1);
    auto c1 = cumulative_simpson(part, sol.sigma[1] - sol.sigma[0]);
    for (std::size_t i = 0; i < c1.size(); ++i) g[i] = c1[i];
    std::vector<double> rest(re.begin() + sol.well_index, re.end());
    auto c2 = cumulative_simpson(rest, sol.sigma[n - 1] - sol.sigma[n - 2]);
    for (std::size_t i = 0; i < c2.size(); ++i) g[sol.well_index + i] = g[sol.well_index] + c2[i];
  }
  out.g = std::move(g);
  return out;
}

EikonalSolution solve_eikonal(Side side, const GeometryProfile& profile, const BandTable& band,
                              const EikonalOptions& opt) {
  if (opt.n_segment < 4 || opt.n_segment % 2) throw Error(ErrorKind::Config, "eikonal n_segment must be even");
  const EikonalSolver solver(side, profile, band);
  const double L = profile.L;
  const double sw = solver.s_well();
  const int m = opt.n_segment;
  EikonalSolution sol;
  sol.side = side;
  sol.s_well = sw;
  const double a = side == Side::Right ? -L : 0.0;
  const double b = side == Side::Right ? 0.0 : L;
  if (!(a < sw && sw < b)) throw Error(ErrorKind::Assumption, "well outside its half of the curve");
  for (int i = 0; i < m; ++i) sol.sigma.push_back(a + (sw - a) * i / m);
  sol.well_index = sol.sigma.size();
  for (int i = 0; i <= m; ++i) sol.sigma.push_back(i == m ? b : sw + (b - sw) * i / m);

  march(solver, sol.sigma, sol.well_index, sol.phi, sol.phi_prime, sol.max_residual);
  sol.f_vals = f_profile(side, profile, band, sol.sigma);

  const double q = 1.0 / (band.k + 2);
  std::vector<double> integrand(sol.sigma.size());
  for (std::size_t i = 0; i < integrand.size(); ++i)
    integrand[i] = std::pow(profile.gamma_at(sol.sigma[i]), q) * sol.phi[i].real();
  sol.Phi = primitive_from(sol.sigma, integrand, sol.well_index);
  for (std::size_t i = 0; i < sol.Phi.size(); ++i)
    if (sol.Phi[i] < -1e-12)
      throw Error(ErrorKind::Internal, "negative Agmon primitive at sigma = " + fmt(sol.sigma[i]));

  const auto pp = phase_primitive(sol, profile, band);
  sol.g = pp.g;
  sol.w = pp.w;
  return sol;
}

AgmonDistances agmon_distances(const EikonalSolution& right, const EikonalSolution& left,
                               const GeometryProfile& profile) {
  if (right.side != Side::Right || left.side != Side::Left)
    throw Error(ErrorKind::Internal, "agmon_distances expects (right, left)");
  AgmonDistances d;
  // S_u over [s_r, s_l] through 0, S_d over the complementary arc through +-L
  d.S_u = right.Phi.back() + left.Phi.front();
  d.S_d = right.Phi.front() + left.Phi.back();
  d.S = std::min(d.S_u, d.S_d);
  for (std::size_t i = 0; i < right.sigma.size(); ++i) {
    d.sigma.push_back(right.sigma[i]);
    const double re = right.phi[i].real();
    d.D.push_back(i < right.well_index ? -re : re);
    d.I.push_back(right.phi[i].imag());
  }
  for (std::size_t i = 1; i < left.sigma.size(); ++i) {
    d.sigma.push_back(left.sigma[i]);
    const double re = left.phi[i].real();
    d.D.push_back(i < left.well_index ? -re : re);
    d.I.push_back(left.phi[i].imag());
  }
  const cplx pr = right.phi.back(), pl = left.phi.front();
  d.continuity_defect = std::max(std::abs(pr.real() + pl.real()), std::abs(pr.imag() - pl.imag()));
  const double scale = std::max(1e-300, std::abs(pr));
  if (d.continuity_defect > 1e-8 * std::max(1.0, scale))
    d.warnings.push_back("right and left eikonal data disagree at sigma = 0 by " + fmt(d.continuity_defect));
  (void)profile;
  return d;
}

std::string eikonal_csv(const EikonalSolution& right, const EikonalSolution& left, const AgmonDistances& d) {
  std::ostringstream os;
  os << "# s: arc length [length]; phi: eikonal solution phi(s) (complex, dimensionless); Phi: Agmon primitive; "
        "g: phase primitive g(s); D: Agmon distance; I: Agmon integrand\n";
  os << "s,re_phi,im_phi,Phi,g,D,I\n";
  char buf[256];
  std::size_t row = 0;
  auto emit = [&](const EikonalSolution& s, std::size_t i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.sigma[i], s.phi[i].real(),
                  s.phi[i].imag(), s.Phi[i], s.g[i], d.D[row], d.I[row]);
    os << buf;
    ++row;
  };
  for (std::size_t i = 0; i < right.sigma.size(); ++i) emit(right, i);
  for (std::size_t i = 1; i < left.sigma.size(); ++i) emit(left, i);
  return os.str();
}

}  // namespace tk
