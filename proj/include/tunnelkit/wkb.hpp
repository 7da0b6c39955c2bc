#pragma once

#include <string>
#include <vector>

#include "tunnelkit/band.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"

namespace tk {

// Moments of the bilinearly normalized ground state u of
// D_t^2 + (xi - gamma t^{k+1}/(k+1))^2.
struct MomentSet {
  cplx m2k3, mk2, m1, mdu;
};

struct WkbOptions {
  int cheb_nodes = 32;      // per segment, for the interpolant of R
  double eps0 = 0.05;       // first excision half-width at the well
  int eps_levels = 3;       // eps0, eps0/2, eps0/4
  int panels = 16;          // composite Gauss-Legendre panels per interval
  int order = 16;           // nodes per panel
  int profile_stride = 8;   // subsampling of the eikonal grid for exported profiles
};

struct WkbConstants {
  double zeta = 0.0;
  double delta10 = 0.0;
  double delta11 = 0.0;
  double K0 = 0.0;
  double A_u = 0.0, A_d = 0.0;
  double A_d_right = 0.0;    // A_d through the right-well integrand on [-L, s_r]
  double alpha0 = 0.0;
  double alpha_0 = 0.0;      // alpha_{1,0}(0) with alpha_{1,0}(s_r) = 0
  double alpha_mL = 0.0;     // alpha_{1,0}(-L)
  double R_at_well = 0.0;
  double R_at_well_imag = 0.0;
  cplx V0, VL;               // V_r(0), V_r(-L)
  double f10_sq_at_0 = 0.0;  // sqrt(zeta/pi) A_u^2: squared amplitude of the normalized profile at 0
  double eps_slope_u = 0.0;  // observed convergence order of the excised integrals
  std::vector<double> profile_sigma;
  std::vector<cplx> V_profile, R_profile;
  std::vector<std::string> warnings;
};

// Right-well WKB model: evaluates mu, V, V', R and the transport integrand at any sigma in [-L, 0].
class WkbModel {
 public:
  WkbModel(const GeometryProfile& profile, const BandTable& band, const MontgomeryFamily& family,
           const EikonalSolution& right, const EikonalSolution& left, const WkbOptions& opt = {});

  double q() const { return 1.0 / (band_.k + 2); }
  double zeta() const;
  double delta10() const;

  // mu(sigma, xi) = gamma^{2q} nu(gamma^{-q} xi) through the band series
  cplx mu(double sigma, cplx xi) const;

  struct Local {
    cplx phi, phi_prime, w, V, V_prime;
  };
  // Right (left) well data at sigma in [-L, 0] ([0, L]).
  Local local(Side side, double sigma) const;

  MomentSet moments(double sigma, cplx w) const;
  // Direct evaluation of R_r from a complex eigensolve.
  cplx script_R_direct(double sigma) const;
  // Interpolated R_r on [-L, 0]; R_l(sigma) = conj R_r(-sigma).
  cplx script_R(Side side, double sigma) const;
  // Transport integrand (V' + 2R - 2 delta11) / (2V).
  cplx transport_integrand(Side side, double sigma) const;
  // V through the Feynman-Hellmann integral of the complex eigenpair.
  cplx V_fh(double sigma) const;

  double delta11() const { return delta11_; }
  double R_at_well() const { return R_well_.real(); }
  double R_at_well_imag() const { return R_well_.imag(); }

  // Integral of the transport integrand over [a, b] with the eps-window at the
  // well excised and extrapolated to eps = 0; slope receives the observed order.
  cplx excised_integral(Side side, double a, double b, double* slope = nullptr) const;

 private:
  const GeometryProfile& profile_;
  const BandTable& band_;
  const MontgomeryFamily& family_;
  EikonalSolver right_, left_;
  const EikonalSolution& right_sol_;
  const EikonalSolution& left_sol_;
  WkbOptions opt_;
  ChebyshevInterp R_lo_, R_hi_;  // [-L, s_r] and [s_r, 0]
  cplx R_well_;
  double delta11_ = 0.0;
  cplx seed_phi(Side side, double sigma) const;
};

WkbConstants compute_wkb(const GeometryProfile& profile, const BandTable& band, const MontgomeryFamily& family,
                         const EikonalSolution& right, const EikonalSolution& left, const WkbOptions& opt = {});

// R_r from the four-moment expression, for given profile values.
cplx script_R_formula(int k, double gamma, double delta, double kappa, cplx w, const MomentSet& m);

// CSV: s, Re V, Im V, Re R, Im R.
std::string wkb_csv(const WkbConstants& c);

}  // namespace tk
