#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/lanczos.hpp"

namespace tk {

enum class ModelOrder { Leading, WithDeltaTilde };

struct StripDiscretization {
  int n_sigma = 64;                   // Fourier modes on the sigma period
  int n_tau = 160;                    // interior points on (-T, T)
  double T = 0.0;                     // 0: 6 gamma0^{-1/(k+2)}, capped by the metric
  double h = 0.2;
  std::optional<double> flux_offset;  // default beta0 h^{-k-1}
  ModelOrder model_order = ModelOrder::WithDeltaTilde;
  bool weight_on = false;             // metric factor a_h = 1 - h tau kappa
  bool use_sectors = true;            // split by the half-period shift when the coefficients allow it
  double coef_tol = 1e-10;            // Fourier coefficients below this (relative) are dropped
  double momentum_center = std::nan("");  // centre of the mode window; default gamma0^{q} xi0
  void validate() const;
};

// sigma-dependent coefficients of the strip operator on the period [c - Lb, c + Lb).
struct StripCoefficients {
  int k = 1;
  double center = 0.0;
  double half_period = 0.0;
  double beta0 = 0.0;
  double gamma0 = 0.0;
  std::function<double(double)> gamma, delta_tilde, kappa;
};

StripCoefficients coefficients_from_profile(const GeometryProfile& p);

// Discrete D_tau a D_tau / a + a^{-1}(h D_sigma - A) a^{-1} (h D_sigma - A) with
// A = gamma tau^{k+1}/(k+1) + h delta_tilde tau^{k+2}/(k+2), conjugated by a^{1/2}
// so that it is Hermitian in the flat inner product.
class StripOperator {
 public:
  StripOperator(StripCoefficients coef, const StripDiscretization& disc, double xi0);

  int k() const { return coef_.k; }
  double h() const { return disc_.h; }
  int sectors() const { return static_cast<int>(modes_.size()); }
  const std::vector<int>& modes(int sector) const { return modes_[sector]; }
  // Parity of a sector under the half-period shift (+1, -1), 0 without sectors.
  int sector_parity(int sector) const;
  int sector_size(int sector) const { return static_cast<int>(modes_[sector].size()) * nt_; }
  double tau_max() const { return T_; }
  double flux_offset() const { return b_; }
  int mode_bandwidth() const { return dmax_; }

  HermitianBand assemble(int sector) const;
  // Matrix-free application with the same discretization.
  void apply(int sector, const CVec& u, CVec& y) const;

 private:
  Eigen::MatrixXcd toeplitz(const std::vector<cplx>& c, const std::vector<int>& modes) const;
  std::vector<cplx> fourier(const std::function<double(double)>& g) const;
  Eigen::MatrixXcd sigma_block(int sector, int j) const;
  Eigen::MatrixXcd weight_matrix(int sector, double tau, double power) const;
  int index(int sector, int j, int i) const;

  StripCoefficients coef_;
  StripDiscretization disc_;
  int nt_ = 0, nf_ = 0, dmax_ = 0;
  double T_ = 0.0, dtau_ = 0.0, b_ = 0.0;
  bool sigma_dependent_metric_ = false;
  bool tau_major_ = true;
  std::vector<double> tau_, half_;  // interior nodes and staggered points
  std::vector<std::vector<std::pair<int, double>>> d1_;  // staggered first derivative rows
  std::vector<cplx> gamma_hat_, dtilde_hat_, kappa_hat_;  // index d + nf/2
  std::vector<double> kappa_samples_;
  std::vector<std::vector<int>> modes_;
};

struct DirectSpectrum {
  double h = 0.0;
  std::vector<double> eigenvalues;      // nu_n(h), ascending
  std::vector<double> residual_norms;
  std::vector<double> lambda_equiv;     // hbar^{2(k+1)/(k+2)} nu_n
  std::vector<int> parity;              // sector parity of each eigenvector (0 if unsplit)
  std::vector<CVec> vectors;
  int sector_count = 1;
};

DirectSpectrum lowest_eigs_hermitian(const StripOperator& op, int count, double shift,
                                     const LanczosOptions& opt = {});

DirectSpectrum double_well_direct(const GeometryProfile& profile, double xi0, double delta10,
                                  const StripDiscretization& disc, int count = 2);

struct SingleWellExtension {
  double gamma_inf = 0.0;  // 0: 1.5 max gamma
  double blend = 0.1;      // blending width as a fraction of L, ending at the opposite well
  double pad = 0.3;        // extra box length on each side as a fraction of L
  double check_tol = 0.0;  // > 0: rerun with gamma_inf doubled and fail above this change in nu_1
};

StripCoefficients single_well_coefficients(const GeometryProfile& profile, Side side,
                                           const SingleWellExtension& ext);
DirectSpectrum single_well_direct(const GeometryProfile& profile, Side side, double xi0, double delta10,
                                  const StripDiscretization& disc, const SingleWellExtension& ext = {},
                                  int count = 2);

}  // namespace tk
