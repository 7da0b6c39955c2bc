#include "tunnelkit/tunneling.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

double safe_log(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

cplx polar_from_log(double log_mod, double phase) {
  if (!std::isfinite(log_mod) || log_mod < -745.0) return 0.0;
  return std::polar(std::exp(log_mod), phase);
}

}  // namespace

TunnelingConstants collect_constants(const GeometryProfile& profile, const BandTable& band, const WkbConstants& wkb,
                                     const AgmonDistances& dist, const EikonalSolution& right) {
  if (right.side != Side::Right || right.g.empty()) throw Error(ErrorKind::Internal, "right-well eikonal data missing");
  TunnelingConstants c;
  c.k = band.k;
  c.L = profile.L;
  c.beta0 = profile.beta0;
  c.gamma0 = profile.gamma0;
  c.xi0 = band.xi0;
  c.nu0 = band.nu0;
  c.nu0_dd = band.nu0_dd;
  c.zeta = wkb.zeta;
  c.delta10 = wkb.delta10;
  c.delta11 = wkb.delta11;
  c.S_u = dist.S_u;
  c.S_d = dist.S_d;
  c.A_u = wkb.A_u;
  c.A_d = wkb.A_d;
  c.alpha_0 = wkb.alpha_0;
  c.alpha_mL = wkb.alpha_mL;
  c.alpha0 = wkb.alpha0;
  c.g_mL = right.g.front();
  c.V0 = wkb.V0;
  c.VL = wkb.VL;
  c.R_at_well = wkb.R_at_well;
  return c;
}

double flux_phase(double hbar, const TunnelingConstants& c) {
  const double h = std::pow(hbar, 1.0 / (c.k + 2));
  return c.beta0 / hbar + c.g_mL / (h * c.L) - c.alpha0;
}

double flux_phase_printed(double hbar, const TunnelingConstants& c) {
  const double h = std::pow(hbar, 1.0 / (c.k + 2));
  return c.beta0 / hbar + c.g_mL / h - c.alpha0;
}

double flux_integral_direct(const EikonalSolution& right, const GeometryProfile& profile, const BandTable& band,
                            int panels, int order) {
  const EikonalSolver solver(Side::Right, profile, band);
  const double q = 1.0 / (band.k + 2);
  const auto& x = right.sigma;
  auto seed = [&](double s) {
    const auto it = std::upper_bound(x.begin(), x.end(), s);
    if (it == x.begin()) return right.phi.front();
    if (it == x.end()) return right.phi.back();
    const std::size_t j = static_cast<std::size_t>(it - x.begin());
    const double t = (s - x[j - 1]) / (x[j] - x[j - 1]);
    return (1.0 - t) * right.phi[j - 1] + t * right.phi[j];
  };
  // split at the well so each panel sees a smooth integrand
  double sum = 0.0;
  for (auto [a, b] : {std::pair{-profile.L, profile.s_r}, std::pair{profile.s_r, 0.0}}) {
    const QuadRule rule = composite_gauss(panels, order, a, b);
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
      const auto p = solver.solve(rule.x[i], seed(rule.x[i]));
      sum += rule.w[i] * std::pow(profile.gamma_at(rule.x[i]), q) * (band.xi0 - p.phi.imag());
    }
  }
  return sum;
}

InteractionTerms combine_terms(double log_a, double ta, double log_b, double tb) {
  InteractionTerms t;
  t.log_abs_up = log_a;
  t.log_abs_down = log_b;
  t.up = polar_from_log(log_a, ta);
  t.down = polar_from_log(log_b, tb);
  const double m = std::max(log_a, log_b);
  if (!std::isfinite(m)) {
    t.log_gap = -std::numeric_limits<double>::infinity();
    return t;
  }
  const cplx z = std::polar(std::exp(log_a - m), ta) + std::polar(std::exp(log_b - m), tb);
  t.log_gap = std::log(2.0) + m + safe_log(std::abs(z));
  t.gap = std::isfinite(t.log_gap) && t.log_gap > -745.0 ? std::exp(t.log_gap) : 0.0;
  return t;
}

SplittingPrediction interaction_term(double hbar, const TunnelingConstants& c) {
  if (!(hbar > 0.0)) throw Error(ErrorKind::Config, "hbar must be positive");
  const double kk = c.k;
  const double q = 1.0 / (kk + 2.0);
  SplittingPrediction p;
  p.hbar = hbar;
  p.h = std::pow(hbar, q);
  p.f_val = flux_phase(hbar, c);
  p.f_printed = flux_phase_printed(hbar, c);
  const double log_conv = (2.0 * kk + 2.0) * q * std::log(hbar);
  const double argV0 = std::arg(c.V0), argVL = std::arg(c.VL);
  const double Lf = c.L * p.f_val;

  // derived assembly, strip eigenvalue scale
  const double logC = 0.5 * std::log(p.h) + 0.5 * std::log(c.zeta / kPi);
  const double lu = logC + safe_log(std::abs(c.V0)) + 2.0 * safe_log(c.A_u) - c.S_u / p.h;
  const double ld = logC + safe_log(std::abs(c.VL)) + 2.0 * safe_log(c.A_d) - c.S_d / p.h;
  const double tu = -argV0 + Lf;
  const double td = kPi - argVL - Lf;
  const InteractionTerms nu_terms = combine_terms(lu, tu, ld, td);
  p.log_gap_nu = nu_terms.log_gap;
  p.gap_nu = nu_terms.gap;
  p.log_gap = nu_terms.log_gap + log_conv;
  p.gap = std::isfinite(p.log_gap) && p.log_gap > -745.0 ? std::exp(p.log_gap) : 0.0;
  p.up_term = polar_from_log(lu + log_conv, tu);
  p.down_term = polar_from_log(ld + log_conv, td);
  p.w_tilde = p.up_term + p.down_term;
  p.relative_phase = tu - td;

  // displayed closed form, plane eigenvalue scale
  const double logCp = 0.5 * std::log(c.zeta / kPi) + (2.0 * kk + 3.0) * q * std::log(hbar);
  const double Lfp = c.L * p.f_printed;
  const double lup = logCp + safe_log(std::abs(c.V0)) + safe_log(c.A_u) - c.S_u / p.h;
  const double ldp = logCp + safe_log(std::abs(c.VL)) + safe_log(c.A_d) - c.S_d / p.h;
  const InteractionTerms pr = combine_terms(lup, -argV0 + Lfp, ldp, -argVL - Lfp);
  p.up_printed = pr.up;
  p.down_printed = pr.down;
  p.w_tilde_printed = pr.up + pr.down;
  p.log_gap_printed = pr.log_gap;
  p.gap_printed = pr.gap;
  return p;
}

AsymptoticEnergy leading_asymptotics(double hbar, int n, const TunnelingConstants& c, double gamma_dd,
                                     bool two_term) {
  if (!(hbar > 0.0)) throw Error(ErrorKind::Config, "hbar must be positive");
  if (n < 1) throw Error(ErrorKind::Config, "level index must be >= 1");
  if (two_term && c.k != 1) throw Error(ErrorKind::Config, "two-term asymptotics are available for k = 1 only");
  const double kk = c.k;
  AsymptoticEnergy e;
  e.hbar = hbar;
  e.n = n;
  e.theta0 = std::pow(c.gamma0, 2.0 / (kk + 2.0)) * c.nu0;
  e.lambda1_leading = e.theta0 * std::pow(hbar, (2.0 * kk + 2.0) / (kk + 2.0));
  e.theta1 = 0.5 * c.nu0_dd * (2.0 * n - 1.0) * c.zeta + c.R_at_well;
  if (gamma_dd > 0.0)
    e.theta1_printed_ladder = std::pow(c.gamma0, 2.0 / 3.0) * (2.0 * n - 1.0) *
                              (2.0 * c.nu0 * c.nu0_dd * c.gamma0 / (3.0 * gamma_dd));
  if (two_term) e.lambda_n_two_term = e.theta0 * std::pow(hbar, 4.0 / 3.0) + e.theta1 * std::pow(hbar, 5.0 / 3.0);
  return e;
}

std::vector<double> bracket_zeros(const std::function<double(double)>& fn, double a, double b, int samples,
                                  double tol) {
  std::vector<double> out;
  if (!(b > a) || samples < 1) return out;
  double xa = a, fa = fn(a);
  if (fa == 0.0) out.push_back(a);
  for (int i = 1; i <= samples; ++i) {
    const double xb = i == samples ? b : a + (b - a) * i / samples;
    const double fb = fn(xb);
    if (fb == 0.0) {
      out.push_back(xb);
    } else if (fa != 0.0 && (fa < 0.0) != (fb < 0.0)) {
      double lo = xa, hi = xb, flo = fa;
      for (int it = 0; it < 200 && hi - lo > tol; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        const double fm = fn(mid);
        if (fm == 0.0) {
          lo = hi = mid;
          break;
        }
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      out.push_back(0.5 * (lo + hi));
    }
    xa = xb;
    fa = fb;
  }
  return out;
}

GapScan gap_scan(const std::vector<double>& hbar_grid, const TunnelingConstants& c) {
  if (hbar_grid.empty()) throw Error(ErrorKind::Config, "empty hbar grid");
  for (std::size_t i = 0; i < hbar_grid.size(); ++i) {
    if (!(hbar_grid[i] > 0.0)) throw Error(ErrorKind::Config, "hbar grid must be positive");
    if (i > 0 && !(hbar_grid[i] > hbar_grid[i - 1])) throw Error(ErrorKind::Config, "hbar grid must be increasing");
  }
  GapScan scan;
  const double mu = std::abs(c.V0) * c.A_u * c.A_u, md = std::abs(c.VL) * c.A_d * c.A_d;
  scan.symmetric = std::abs(c.S_u - c.S_d) <= kBalanceTol * std::max(c.S_u, c.S_d) &&
                   std::abs(mu - md) <= kBalanceTol * std::max(mu, md);
  for (double hb : hbar_grid) {
    const auto p = interaction_term(hb, c);
    scan.rows.push_back({hb, p.h, p.f_val, p.f_printed, p.log_gap, p.gap, p.log_gap_printed, p.gap_printed, 0});
  }
  if (!scan.symmetric || hbar_grid.size() < 2) return scan;

  auto node_fn = [&](double hb) { return std::cos(0.5 * interaction_term(hb, c).relative_phase); };
  auto node_fn_printed = [&](double hb) { return std::cos(flux_phase_printed(hb, c)); };
  for (std::size_t i = 0; i + 1 < hbar_grid.size(); ++i) {
    const double a = hbar_grid[i], b = hbar_grid[i + 1];
    const double tol = 1e-15 * b;
    // enough samples that neither phase moves by more than pi/4 between them
    const double dphi = std::abs(interaction_term(b, c).relative_phase - interaction_term(a, c).relative_phase) / 2.0;
    const double dphp = std::abs(flux_phase_printed(b, c) - flux_phase_printed(a, c));
    const int n1 = 4 + static_cast<int>(std::ceil(dphi / (kPi / 4.0)));
    const int n2 = 4 + static_cast<int>(std::ceil(dphp / (kPi / 4.0)));
    for (double z : bracket_zeros(node_fn, a, b, n1, tol)) {
      if (!scan.nodes.empty() && std::abs(z - scan.nodes.back()) <= 2.0 * tol) continue;
      scan.nodes.push_back(z);
      if (z < b) scan.rows[i].node_flag = 1;
      else scan.rows[i + 1].node_flag = 1;
    }
    for (double z : bracket_zeros(node_fn_printed, a, b, n2, tol)) {
      if (!scan.nodes_printed.empty() && std::abs(z - scan.nodes_printed.back()) <= 2.0 * tol) continue;
      scan.nodes_printed.push_back(z);
    }
  }
  return scan;
}

std::string scan_csv(const GapScan& scan, const TunnelingConstants& c) {
  std::ostringstream os;
  os << "# hbar: semiclassical parameter; h = hbar^(1/(k+2)); f: flux phase f(hbar) [rad]; S_u, S_d: Agmon distances; "
        "gap_pred: lambda_2 - lambda_1 [energy]; node_flag: 1 at a predicted zero of the interaction; "
        "*_printed: literal-formula variant\n";
  os << "hbar,h,f,S_u,S_d,log_gap_pred,gap_pred,node_flag,f_printed,log_gap_printed,gap_printed\n";
  char buf[400];
  for (const auto& r : scan.rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g,%.17g,%.17g\n", r.hbar, r.h,
                  r.f, c.S_u, c.S_d, r.log_gap, r.gap, r.node_flag, r.f_printed, r.log_gap_printed, r.gap_printed);
    os << buf;
  }
  return os.str();
}

}  // namespace tk
