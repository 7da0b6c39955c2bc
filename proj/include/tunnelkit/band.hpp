#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "tunnelkit/numerics.hpp"

namespace tk {

// Uniform grid on [-T, T] with n points; the two end points carry the
// Dirichlet condition, the n - 2 interior points are unknowns.
struct Grid1D {
  double T = 8.0;
  int n = 1601;

  double spacing() const { return 2.0 * T / (n - 1); }
  int interior() const { return n - 2; }
  double point(int i) const { return -T + (i + 1) * spacing(); }  // i-th interior point
  void validate() const;
  // Grid with the spacing divided by 2^level (nested points).
  Grid1D refined(int level) const { return Grid1D{T, (n - 1) * (1 << level) + 1}; }
};

template <class S>
struct SymTridiag {
  std::vector<S> diag;
  std::vector<S> off;  // off[i] couples i and i + 1
};

using RealTridiag = SymTridiag<double>;
using ComplexTridiag = SymTridiag<cplx>;

// D_t^2 + (xi - g t^{k+1}/(k+1))^2 with three-point differences and Dirichlet ends.
ComplexTridiag assemble_montgomery(int k, cplx xi, const Grid1D& grid, cplx gamma_scale = 1.0);
// D_t^2 + V(t) on the same grid, real potential.
RealTridiag assemble_real(const Grid1D& grid, const std::function<double(double)>& potential);

struct RealEigs {
  std::vector<double> values;
  std::vector<std::vector<double>> vectors;  // sum u_i^2 dt = 1, positive at midpoint
};

RealEigs lowest_real_eigs(const RealTridiag& m, int count, double spacing);

struct ComplexEigenpair {
  cplx eigenvalue;
  std::vector<cplx> samples;  // interior grid values
  cplx bilinear_norm;         // sum u_i^2 dt
  Grid1D grid;
};

// Ground eigenpair of the complex symmetric discretization, continued from the
// real axis by homotopy in the imaginary parts of xi and gamma_scale.
ComplexEigenpair complex_eigenpair(int k, cplx xi, cplx gamma_scale, const Grid1D& grid,
                                   bool check_separation = true);

// Richardson-extrapolated evaluations over nested grids.
class MontgomeryFamily {
 public:
  MontgomeryFamily(int k, Grid1D base, int levels = 3);

  int k() const { return k_; }
  const Grid1D& base() const { return base_; }
  int levels() const { return levels_; }

  // index 0: ground band, 1: second band
  double nu(double xi, int index = 0, double gamma_scale = 1.0) const;
  // Feynman-Hellmann derivative of the ground band.
  double dnu(double xi) const;
  cplx nu_complex(cplx xi, cplx gamma_scale = 1.0) const;

  struct Moments {
    cplx eigenvalue;
    cplx fh;       // int 2 (xi - t^{k+1}/(k+1)) u^2
    cplx m1;       // int t u^2
    cplx mk2;      // int t^{k+2} u^2
    cplx m2k3;     // int t^{2k+3} u^2
    cplx mdu;      // int u' u
  };
  // Moments of the bilinearly normalized ground state of the pure family.
  Moments moments(cplx xi) const;

 private:
  int k_;
  Grid1D base_;
  int levels_;
};

struct BandTable {
  int k = 1;
  std::vector<double> xi_samples;
  std::vector<double> nu1_values;
  std::vector<double> nu2_values;
  double xi0 = 0.0;
  double nu0 = 0.0;
  double nu0_dd = 0.0;
  std::vector<double> taylor_coeffs;  // c_n = nu^{(n)}(xi0) / n!
  double taylor_radius = 0.0;
  double contour_radius = 0.0;
  double taylor_imag_residual = 0.0;  // max |Im| discarded from the contour coefficients
  Grid1D grid;
  int levels = 3;
  std::string code_version;
};

struct BandOptions {
  Grid1D grid{8.0, 1601};
  int levels = 3;
  double xi_lo = -1.5;
  double xi_hi = 2.0;
  int n_samples = 71;
  int taylor_order = 32;
  double contour_radius = 0.6;
  int contour_points = 64;
};

BandTable build_band_table(int k, const BandOptions& opt);

// Taylor polynomial of nu (or its derivative of given order) at complex z.
cplx band_holomorphic(const BandTable& t, cplx z, int derivative = 0);

using Mat2 = std::array<std::array<double, 2>, 2>;
Mat2 band_hessian(const BandTable& t, double gamma0, double gamma_dd, double sr);

}  // namespace tk
