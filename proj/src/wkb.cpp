#include "tunnelkit/wkb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

constexpr cplx I(0.0, 1.0);

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

cplx script_R_formula(int k, double gamma, double delta, double kappa, cplx w, const MomentSet& m) {
  const double k1 = k + 1.0, k2 = k + 2.0;
  return 2.0 * gamma * (delta + kappa * gamma / k1) * m.m2k3 / (k1 * k2) + kappa * m.mdu -
         2.0 * w * (delta + (k + 3.0) * kappa * gamma / k1) * m.mk2 / k2 + 2.0 * w * w * kappa * m.m1;
}

WkbModel::WkbModel(const GeometryProfile& profile, const BandTable& band, const MontgomeryFamily& family,
                   const EikonalSolution& right, const EikonalSolution& left, const WkbOptions& opt)
    : profile_(profile),
      band_(band),
      family_(family),
      right_(Side::Right, profile, band),
      left_(Side::Left, profile, band),
      right_sol_(right),
      left_sol_(left),
      opt_(opt) {
  if (opt.cheb_nodes < 4) throw Error(ErrorKind::Config, "cheb_nodes must be >= 4");
  if (!(opt.eps0 > 0.0) || opt.eps_levels < 2) throw Error(ErrorKind::Config, "invalid excision parameters");
  R_well_ = script_R_direct(profile.s_r);
  delta11_ = 0.5 * band.nu0_dd * zeta() + R_well_.real();
  const double L = profile.L, sr = profile.s_r;
  std::vector<cplx> lo, hi;
  for (double x : ChebyshevInterp::nodes(-L, sr, opt.cheb_nodes)) lo.push_back(script_R_direct(x));
  for (double x : ChebyshevInterp::nodes(sr, 0.0, opt.cheb_nodes)) hi.push_back(script_R_direct(x));
  R_lo_ = ChebyshevInterp(-L, sr, std::move(lo));
  R_hi_ = ChebyshevInterp(sr, 0.0, std::move(hi));
}

double WkbModel::zeta() const {
  const double k = band_.k;
  return std::sqrt(2.0 / (k + 2.0) * profile_.gamma_dd * band_.nu0 /
                   (std::pow(profile_.gamma0, k / (k + 2.0)) * band_.nu0_dd));
}

double WkbModel::delta10() const { return std::pow(profile_.gamma0, 2.0 * q()) * band_.nu0; }

cplx WkbModel::mu(double sigma, cplx xi) const {
  const double g = profile_.gamma_at(sigma);
  return std::pow(g, 2.0 * q()) * band_holomorphic(band_, xi * std::pow(g, -q()));
}

cplx WkbModel::seed_phi(Side side, double sigma) const {
  const EikonalSolution& s = side == Side::Right ? right_sol_ : left_sol_;
  const auto& x = s.sigma;
  if (sigma <= x.front()) return s.phi.front();
  if (sigma >= x.back()) return s.phi.back();
  const auto it = std::upper_bound(x.begin(), x.end(), sigma);
  const std::size_t j = static_cast<std::size_t>(it - x.begin());
  const double t = (sigma - x[j - 1]) / (x[j] - x[j - 1]);
  return (1.0 - t) * s.phi[j - 1] + t * s.phi[j];
}

WkbModel::Local WkbModel::local(Side side, double sigma) const {
  const EikonalSolver& solver = side == Side::Right ? right_ : left_;
  const auto p = solver.solve(sigma, seed_phi(side, sigma));
  const double qq = q();
  const double g = profile_.gamma_at(sigma), gp = profile_.gamma_at(sigma, 1);
  const double gq = std::pow(g, qq);
  const cplx z = I * p.phi;
  const cplx n1 = solver.nu(z, 1), n2 = solver.nu(z, 2);
  Local out;
  out.phi = p.phi;
  out.phi_prime = p.phi_prime;
  out.w = gq * (band_.xi0 + z);
  out.V = -I * gq * n1;
  out.V_prime = -I * (qq * gq / g * gp * n1 + gq * n2 * I * p.phi_prime);
  return out;
}

MomentSet WkbModel::moments(double sigma, cplx w) const {
  const double qq = q();
  const double g = profile_.gamma_at(sigma);
  const auto M = family_.moments(w * std::pow(g, -qq));
  const int k = band_.k;
  MomentSet m;
  m.m1 = M.m1 * std::pow(g, -qq);
  m.mk2 = M.mk2 * std::pow(g, -(k + 2) * qq);
  m.m2k3 = M.m2k3 * std::pow(g, -(2 * k + 3) * qq);
  m.mdu = M.mdu * std::pow(g, qq);
  return m;
}

cplx WkbModel::script_R_direct(double sigma) const {
  const Local loc = local(Side::Right, sigma);
  const MomentSet m = moments(sigma, loc.w);
  return script_R_formula(band_.k, profile_.gamma_at(sigma), profile_.delta_at(sigma), profile_.kappa_at(sigma),
                          loc.w, m);
}

cplx WkbModel::script_R(Side side, double sigma) const {
  if (side == Side::Left) return std::conj(script_R(Side::Right, -sigma));
  if (sigma < -profile_.L - 1e-12 || sigma > 1e-12)
    throw Error(ErrorKind::Domain, "right-well R requested outside [-L, 0] at sigma = " + fmt(sigma));
  return sigma <= profile_.s_r ? R_lo_(sigma) : R_hi_(sigma);
}

cplx WkbModel::transport_integrand(Side side, double sigma) const {
  const Local loc = local(side, sigma);
  const cplx R = script_R(side, sigma);
  return (loc.V_prime + 2.0 * R - 2.0 * delta11_) / (2.0 * loc.V);
}

cplx WkbModel::V_fh(double sigma) const {
  const Local loc = local(Side::Right, sigma);
  const double g = profile_.gamma_at(sigma);
  const auto M = family_.moments(loc.w * std::pow(g, -q()));
  return -I * std::pow(g, q()) * M.fh;
}

cplx WkbModel::excised_integral(Side side, double a, double b, double* slope) const {
  const double sw = side == Side::Right ? profile_.s_r : profile_.s_l;
  auto plain = [&](double lo, double hi) {
    cplx s = 0.0;
    if (hi <= lo) return s;
    const QuadRule rule = composite_gauss(opt_.panels, opt_.order, lo, hi);
    for (std::size_t i = 0; i < rule.x.size(); ++i) s += rule.w[i] * transport_integrand(side, rule.x[i]);
    return s;
  };
  const double lo = std::min(a, b), hi = std::max(a, b);
  const double sign = b >= a ? 1.0 : -1.0;
  if (sw < lo || sw > hi) {
    if (slope) *slope = 0.0;
    return sign * plain(lo, hi);
  }
  std::vector<cplx> est;
  double eps = opt_.eps0;
  for (int l = 0; l < opt_.eps_levels; ++l, eps *= 0.5) {
    if (sw - eps < lo - 1e-14 && sw > lo + 1e-14) throw Error(ErrorKind::Domain, "excision window exceeds interval");
    est.push_back(plain(lo, sw - eps) + plain(sw + eps, hi));
  }
  if (slope) {
    const std::size_t n = est.size();
    *slope = 1.0;
    if (n > 2) {
      const double d1 = std::abs(est[n - 2] - est[n - 3]), d2 = std::abs(est[n - 1] - est[n - 2]);
      if (d2 > 0.0) *slope = std::log2(d1 / d2);
    }
  }
  const cplx v = richardson(est, 2.0, 1.0);
  if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
    throw Error(ErrorKind::Solver, "transport integral did not converge at the well");
  return sign * v;
}

WkbConstants compute_wkb(const GeometryProfile& profile, const BandTable& band, const MontgomeryFamily& family,
                         const EikonalSolution& right, const EikonalSolution& left, const WkbOptions& opt) {
  const WkbModel model(profile, band, family, right, left, opt);
  WkbConstants c;
  c.zeta = model.zeta();
  c.delta10 = model.delta10();
  c.delta11 = model.delta11();
  c.K0 = std::pow(c.zeta / kPi, 0.25);
  c.R_at_well = model.R_at_well();
  c.R_at_well_imag = model.R_at_well_imag();
  if (std::abs(c.R_at_well_imag) > 1e-6) c.warnings.push_back("well value not real: Im R = " + fmt(c.R_at_well_imag));

  const double L = profile.L, sr = profile.s_r, sl = profile.s_l;
  double slope_u = 0.0;
  const cplx Iu = model.excised_integral(Side::Right, sr, 0.0, &slope_u);
  const cplx Id = model.excised_integral(Side::Right, sr, -L);
  const cplx Il = model.excised_integral(Side::Left, sl, L);
  c.eps_slope_u = slope_u;
  c.A_u = std::exp(-Iu.real());
  c.A_d_right = std::exp(-Id.real());
  c.A_d = std::exp(-Il.real());
  c.alpha_0 = -Iu.imag();
  c.alpha_mL = -Id.imag();
  c.alpha0 = (c.alpha_0 - c.alpha_mL) / L;
  c.V0 = model.local(Side::Right, 0.0).V;
  c.VL = model.local(Side::Right, -L).V;
  c.f10_sq_at_0 = std::sqrt(c.zeta / kPi) * c.A_u * c.A_u;
  if (std::abs(c.A_d - c.A_d_right) > 1e-6 * c.A_d)
    c.warnings.push_back("left-well and right-well routes to A_d differ: " + fmt(c.A_d) + " vs " + fmt(c.A_d_right));

  for (std::size_t i = 0; i < right.sigma.size(); i += static_cast<std::size_t>(std::max(1, opt.profile_stride))) {
    const double s = right.sigma[i];
    c.profile_sigma.push_back(s);
    c.V_profile.push_back(model.local(Side::Right, s).V);
    c.R_profile.push_back(model.script_R(Side::Right, s));
  }
  return c;
}

std::string wkb_csv(const WkbConstants& c) {
  std::ostringstream os;
  os << "# s: arc length [length]; V: amplitude coefficient V_r(s) (complex); R: transport source R_r(s) (complex)\n";
  os << "s,re_V,im_V,re_R,im_R\n";
  char buf[200];
  for (std::size_t i = 0; i < c.profile_sigma.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", c.profile_sigma[i], c.V_profile[i].real(),
                  c.V_profile[i].imag(), c.R_profile[i].real(), c.R_profile[i].imag());
    os << buf;
  }
  return os.str();
}

}  // namespace tk
