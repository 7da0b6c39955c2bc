#pragma once

#include <string>
#include <vector>

#include "tunnelkit/band.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/wkb.hpp"

namespace tk {

// Everything the splitting formula needs, detached from the pipeline objects.
struct TunnelingConstants {
  int k = 1;
  double L = 0.0;
  double beta0 = 0.0;
  double gamma0 = 0.0;
  double xi0 = 0.0, nu0 = 0.0, nu0_dd = 0.0;
  double zeta = 0.0, delta10 = 0.0, delta11 = 0.0;
  double S_u = 0.0, S_d = 0.0;
  double A_u = 0.0, A_d = 0.0;
  double alpha_0 = 0.0, alpha_mL = 0.0, alpha0 = 0.0;
  double g_mL = 0.0;  // phase primitive g_r(-L), anchored at 0
  cplx V0, VL;        // V_r(0), V_r(-L)
  double R_at_well = 0.0;
};

TunnelingConstants collect_constants(const GeometryProfile& profile, const BandTable& band, const WkbConstants& wkb,
                                     const AgmonDistances& dist, const EikonalSolution& right);

// Phase function multiplying L in the two exponentials:
// beta0/hbar + g_r(-L)/(h L) - alpha0.
double flux_phase(double hbar, const TunnelingConstants& c);
// Same with the integral term taken without the 1/L factor, as in the theorem statement.
double flux_phase_printed(double hbar, const TunnelingConstants& c);

// Integral of gamma^q (xi0 - Im phi_r) over [-L, 0] by Gauss-Legendre on fresh
// eikonal solves; equals -g_r(-L).
double flux_integral_direct(const EikonalSolution& right, const GeometryProfile& profile, const BandTable& band,
                            int panels = 32, int order = 16);

struct InteractionTerms {
  cplx up, down;           // gauged so that the phases read exp(+-i L f)
  double log_abs_up = 0.0, log_abs_down = 0.0;
  double log_gap = 0.0;    // log(2 |up + down|), finite even when the terms underflow
  double gap = 0.0;        // 2 |up + down| (0 on underflow)
};

struct SplittingPrediction {
  double hbar = 0.0;
  double h = 0.0;
  double f_val = 0.0;          // flux_phase
  double f_printed = 0.0;      // flux_phase_printed
  // Eigenvalue scale of the plane operator: up, down, gap multiplied by hbar^{(2k+2)/(k+2)}.
  cplx w_tilde, up_term, down_term;
  double gap = 0.0, log_gap = 0.0;
  // Strip scale: the same quantity before the hbar^{(2k+2)/(k+2)} conversion.
  double gap_nu = 0.0, log_gap_nu = 0.0;
  // The displayed closed form: single powers of A, hbar^{(2k+3)/(k+2)}, plus sign, f_printed.
  cplx w_tilde_printed, up_printed, down_printed;
  double gap_printed = 0.0, log_gap_printed = 0.0;
  // Continuous relative phase of the two terms; the gap vanishes where cos(Delta/2) = 0
  // and the moduli agree.
  double relative_phase = 0.0;
};

// Interaction term at hbar. The derived assembly keeps the minus sign between the
// two boundary contributions, squares A (the amplitude enters twice) and carries
// the h^{1/2} from the quasimode normalization; see README.
SplittingPrediction interaction_term(double hbar, const TunnelingConstants& c);

// Log-domain combination of |a| e^{i ta} + |b| e^{i tb} given log moduli.
InteractionTerms combine_terms(double log_a, double ta, double log_b, double tb);

struct AsymptoticEnergy {
  double hbar = 0.0;
  int n = 1;
  double lambda1_leading = 0.0;
  double lambda_n_two_term = 0.0;  // k = 1 only
  double theta0 = 0.0;
  double theta1 = 0.0;             // delta_{n,1} = nu0'' (2n-1) zeta / 2 + R_r(s_r)
  double theta1_printed_ladder = 0.0;  // printed ladder term gamma0^{2/3}(2n-1)(2 nu0 nu0'' gamma0 / (3 gamma'')), C0 omitted
};

AsymptoticEnergy leading_asymptotics(double hbar, int n, const TunnelingConstants& c, double gamma_dd,
                                     bool two_term);

struct ScanRow {
  double hbar = 0.0, h = 0.0, f = 0.0, f_printed = 0.0;
  double log_gap = 0.0, gap = 0.0, log_gap_printed = 0.0, gap_printed = 0.0;
  int node_flag = 0;  // a predicted node lies in [hbar_i, hbar_{i+1})
};

struct GapScan {
  std::vector<ScanRow> rows;
  std::vector<double> nodes;          // zeros of cos(relative_phase / 2) where the moduli agree
  std::vector<double> nodes_printed;  // zeros of cos(f_printed)
  bool symmetric = false;
};

// Moduli ratio below which the two terms count as balanced.
inline constexpr double kBalanceTol = 1e-6;

GapScan gap_scan(const std::vector<double>& hbar_grid, const TunnelingConstants& c);

// Zeros of x -> fn(x) on [a, b] by sampling and bisection to absolute tolerance tol.
std::vector<double> bracket_zeros(const std::function<double(double)>& fn, double a, double b, int samples,
                                  double tol);

// CSV: hbar, h, f, S_u, S_d, log_gap_pred, gap_pred, node_flag (+ printed-form columns).
std::string scan_csv(const GapScan& scan, const TunnelingConstants& c);

}  // namespace tk
