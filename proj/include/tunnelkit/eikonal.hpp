#pragma once

#include <string>
#include <vector>

#include "tunnelkit/band.hpp"
#include "tunnelkit/geometry.hpp"

namespace tk {

enum class Side { Right, Left };

// Pointwise solver of nu(i phi) = F on one well, where nu is the band shifted
// to vanish at xi0 and evaluated through its Taylor series.
class EikonalSolver {
 public:
  EikonalSolver(Side side, const GeometryProfile& profile, const BandTable& band);

  Side side() const { return side_; }
  double s_well() const { return s_well_; }
  double q() const { return 1.0 / (band_.k + 2); }

  double F(double sigma) const;
  // signed square root of -F, positive past the well
  double f(double sigma) const;
  double f_prime(double sigma) const;

  struct Point {
    cplx phi;       // phi(sigma)
    cplx phi_prime; // d phi / d sigma
    double residual;
  };
  // Newton solve from the given seed z = i phi (series seed if seed is NaN).
  Point solve(double sigma, cplx seed_phi = cplx(std::nan(""), 0.0)) const;

  // Shifted band nu(z) - nu0 and its derivatives (Taylor polynomial at xi0).
  cplx nu(cplx z, int derivative = 0) const;
  // Series seed: phi ~ a1 f + i a2 f^2.
  cplx seed(double fval) const;

 private:
  cplx r(cplx z) const;        // nu(z) / z^2
  cplx r_prime(cplx z) const;

  Side side_;
  const GeometryProfile& profile_;
  const BandTable& band_;
  double s_well_;
  double a1_, a2_;
};

struct EikonalSolution {
  Side side = Side::Right;
  double s_well = 0.0;
  std::size_t well_index = 0;
  std::vector<double> sigma;       // [-L, 0] (right) or [0, L] (left), well is a node
  std::vector<double> f_vals;
  std::vector<cplx> phi;
  std::vector<cplx> phi_prime;
  std::vector<double> Phi;         // Agmon primitive from the well
  std::vector<double> g;           // phase primitive anchored at 0
  std::vector<cplx> w;             // gamma^q (xi0 + i phi)
  double max_residual = 0.0;
};

struct EikonalOptions {
  int n_segment = 512;  // Simpson intervals on each side of the well (even)
};

std::vector<double> f_profile(Side side, const GeometryProfile& profile, const BandTable& band,
                              const std::vector<double>& sigma);
// Marches outward from the well, seeding each Newton solve with the previous point.
std::vector<cplx> solve_phi(Side side, const GeometryProfile& profile, const BandTable& band,
                            const std::vector<double>& sigma, std::size_t well_index, double* max_residual = nullptr);

EikonalSolution solve_eikonal(Side side, const GeometryProfile& profile, const BandTable& band,
                              const EikonalOptions& opt = {});

struct AgmonDistances {
  double S_u = 0.0, S_d = 0.0, S = 0.0;
  std::vector<double> sigma;  // [-L, L]
  std::vector<double> D, I;
  double continuity_defect = 0.0;  // mismatch of the two wells' data at sigma = 0
  std::vector<std::string> warnings;
};

AgmonDistances agmon_distances(const EikonalSolution& right, const EikonalSolution& left,
                               const GeometryProfile& profile);

struct PhasePrimitive {
  std::vector<double> g;
  std::vector<cplx> w;
};
PhasePrimitive phase_primitive(const EikonalSolution& sol, const GeometryProfile& profile, const BandTable& band);

// Cumulative composite Simpson from index 0 on a uniform grid with signed step.
std::vector<double> cumulative_simpson(const std::vector<double>& f, double step);

// CSV over the whole curve: s, Re phi, Im phi, Phi, g, D, I (right well on
// [-L, 0], left well on (0, L)).
std::string eikonal_csv(const EikonalSolution& right, const EikonalSolution& left, const AgmonDistances& d);

}  // namespace tk
