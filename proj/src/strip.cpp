#include "tunnelkit/strip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

void StripDiscretization::validate() const {
  if (n_sigma < 8 || n_sigma % 2 != 0) throw Error(ErrorKind::Config, "n_sigma must be even and >= 8");
  if (n_tau < 16) throw Error(ErrorKind::Config, "n_tau must be >= 16");
  if (!(h > 0.0)) throw Error(ErrorKind::Config, "h must be positive");
  if (T < 0.0) throw Error(ErrorKind::Config, "T must be nonnegative");
  if (!(coef_tol >= 0.0)) throw Error(ErrorKind::Config, "coef_tol must be nonnegative");
}

StripCoefficients coefficients_from_profile(const GeometryProfile& p) {
  StripCoefficients c;
  c.k = p.k;
  c.center = 0.0;
  c.half_period = p.L;
  c.beta0 = p.beta0;
  c.gamma0 = p.gamma0;
  c.gamma = [f = p.gamma_fn](double x) { return f(x); };
  c.delta_tilde = [f = p.delta_tilde_fn](double x) { return f(x); };
  c.kappa = [f = p.kappa_fn](double x) { return f(x); };
  return c;
}

StripOperator::StripOperator(StripCoefficients coef, const StripDiscretization& disc, double xi0)
    : coef_(std::move(coef)), disc_(disc) {
  disc_.validate();
  const int k = coef_.k;
  const double h = disc_.h, q = 1.0 / (k + 2);
  const double Lb = coef_.half_period;
  if (!(Lb > 0.0) || !(coef_.gamma0 > 0.0)) throw Error(ErrorKind::Config, "invalid strip coefficients");
  nf_ = std::max(1024, 8 * disc_.n_sigma);

  gamma_hat_ = fourier(coef_.gamma);
  dtilde_hat_ = fourier(coef_.delta_tilde);
  kappa_hat_ = fourier(coef_.kappa);
  kappa_samples_.resize(nf_);
  double kmax = 0.0;
  for (int i = 0; i < nf_; ++i) {
    kappa_samples_[i] = coef_.kappa(coef_.center - Lb + 2.0 * Lb * i / nf_);
    kmax = std::max(kmax, std::abs(kappa_samples_[i]));
  }

  // drop negligible coefficients; track the bandwidth and odd content
  const int off = nf_ / 2;
  double odd = 0.0;
  dmax_ = 0;
  auto prune = [&](std::vector<cplx>& c, bool used) {
    double big = 0.0;
    for (const auto& v : c) big = std::max(big, std::abs(v));
    for (int d = -off + 1; d < off; ++d) {
      cplx& v = c[d + off];
      if (std::abs(v) <= disc_.coef_tol * big) {
        v = 0.0;
      } else if (used) {
        dmax_ = std::max(dmax_, std::abs(d));
        if (d % 2 != 0) odd = std::max(odd, std::abs(v));
      }
    }
    c[0] = 0.0;
  };
  prune(gamma_hat_, true);
  prune(dtilde_hat_, disc_.model_order == ModelOrder::WithDeltaTilde);
  prune(kappa_hat_, disc_.weight_on);
  if (disc_.weight_on) {
    for (int d = -off + 1; d < off; ++d)
      if (d != 0 && kappa_hat_[d + off] != 0.0) sigma_dependent_metric_ = true;
  }
  if (dmax_ >= disc_.n_sigma) dmax_ = disc_.n_sigma - 1;

  // tau grid: interior nodes, Dirichlet at +-T
  T_ = disc_.T > 0.0 ? disc_.T : 6.0 * std::pow(coef_.gamma0, -q);
  if (disc_.weight_on && kmax > 0.0) {
    if (disc_.T <= 0.0) T_ = std::min(T_, 0.8 / (h * kmax));
    if (1.0 - h * T_ * kmax <= 0.0)
      throw Error(ErrorKind::Domain, "metric degeneracy: 1 - h tau kappa <= 0 at tau = " + fmt(T_));
  }
  nt_ = disc_.n_tau;
  dtau_ = 2.0 * T_ / (nt_ + 1);
  for (int j = 0; j < nt_; ++j) tau_.push_back(-T_ + (j + 1) * dtau_);
  // staggered derivative between extended nodes e and e+1, e = -1..nt-1, with odd
  // reflection through the Dirichlet ends
  auto ext = [&](int e, double w, std::vector<std::pair<int, double>>& row) {
    if (e >= 0 && e < nt_) row.push_back({e, w});
    else if (e == -2) row.push_back({0, -w});
    else if (e == nt_ + 1) row.push_back({nt_ - 1, -w});
  };
  for (int e = -1; e < nt_; ++e) {
    std::vector<std::pair<int, double>> row;
    const double s = 1.0 / (24.0 * dtau_);
    ext(e - 1, s, row);
    ext(e, -27.0 * s, row);
    ext(e + 1, 27.0 * s, row);
    ext(e + 2, -s, row);
    // merge repeated nodes
    std::sort(row.begin(), row.end());
    std::vector<std::pair<int, double>> merged;
    for (auto& p : row) {
      if (!merged.empty() && merged.back().first == p.first) merged.back().second += p.second;
      else merged.push_back(p);
    }
    d1_.push_back(merged);
    half_.push_back(-T_ + (e + 1) * dtau_ + 0.5 * dtau_);
  }

  b_ = disc_.flux_offset ? *disc_.flux_offset : coef_.beta0 * std::pow(h, -(k + 1.0));
  const double pstar = std::isnan(disc_.momentum_center) ? std::pow(coef_.gamma0, q) * xi0 : disc_.momentum_center;
  const long mc = std::lround((pstar - b_) * Lb / (h * kPi));
  std::vector<int> all;
  for (int m = 0; m < disc_.n_sigma; ++m) all.push_back(static_cast<int>(mc - disc_.n_sigma / 2 + m));
  const bool split = disc_.use_sectors && odd == 0.0;
  if (split) {
    std::vector<int> even, oddm;
    for (int m : all) (m % 2 == 0 ? even : oddm).push_back(m);
    modes_ = {even, oddm};
  } else {
    modes_ = {all};
  }
  const int ns = static_cast<int>(modes_[0].size());
  const int bw_sector = split ? (dmax_ + 1) / 2 : dmax_;
  const long tau_kd = 3L * ns + (sigma_dependent_metric_ ? ns - 1 : 0);
  const long m_kd = 2L * bw_sector * nt_ + 3;
  tau_major_ = sigma_dependent_metric_ || tau_kd <= m_kd;
}

int StripOperator::sector_parity(int sector) const {
  if (sectors() == 1) return 0;
  return modes_[sector].front() % 2 == 0 ? 1 : -1;
}

std::vector<cplx> StripOperator::fourier(const std::function<double(double)>& g) const {
  const double Lb = coef_.half_period;
  std::vector<cplx> s(nf_);
  for (int i = 0; i < nf_; ++i) s[i] = g(coef_.center - Lb + 2.0 * Lb * i / nf_);
  const auto F = dft(s);
  std::vector<cplx> c(nf_, 0.0);
  const int off = nf_ / 2;
  for (int d = -off + 1; d < off; ++d) {
    const double sign = (d % 2 == 0) ? 1.0 : -1.0;
    c[d + off] = sign * F[(d + nf_) % nf_] / static_cast<double>(nf_);
  }
  return c;
}

Eigen::MatrixXcd StripOperator::toeplitz(const std::vector<cplx>& c, const std::vector<int>& modes) const {
  const int n = static_cast<int>(modes.size());
  const int off = nf_ / 2;
  Eigen::MatrixXcd T = Eigen::MatrixXcd::Zero(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      const int d = modes[a] - modes[b];
      if (std::abs(d) < off) T(a, b) = c[d + off];
    }
  return T;
}

Eigen::MatrixXcd StripOperator::weight_matrix(int sector, double tau, double power) const {
  const auto& modes = modes_[sector];
  const int n = static_cast<int>(modes.size());
  if (!disc_.weight_on) return Eigen::MatrixXcd::Identity(n, n);
  if (!sigma_dependent_metric_) {
    const double a = 1.0 - disc_.h * tau * kappa_hat_[nf_ / 2].real();
    return std::pow(a, power) * Eigen::MatrixXcd::Identity(n, n);
  }
  std::vector<cplx> s(nf_);
  for (int i = 0; i < nf_; ++i) s[i] = std::pow(1.0 - disc_.h * tau * kappa_samples_[i], power);
  const auto F = dft(s);
  std::vector<cplx> c(nf_, 0.0);
  const int off = nf_ / 2;
  for (int d = -off + 1; d < off; ++d) c[d + off] = ((d % 2 == 0) ? 1.0 : -1.0) * F[(d + nf_) % nf_] / double(nf_);
  return toeplitz(c, modes);
}

Eigen::MatrixXcd StripOperator::sigma_block(int sector, int j) const {
  const auto& modes = modes_[sector];
  const int n = static_cast<int>(modes.size());
  const int k = coef_.k;
  const double tau = tau_[j], h = disc_.h;
  std::vector<cplx> A(nf_);
  const double ga = std::pow(tau, k + 1) / (k + 1);
  const double da = disc_.model_order == ModelOrder::WithDeltaTilde ? h * std::pow(tau, k + 2) / (k + 2) : 0.0;
  for (int i = 0; i < nf_; ++i) A[i] = ga * gamma_hat_[i] + da * dtilde_hat_[i];
  Eigen::MatrixXcd P = -toeplitz(A, modes);
  for (int a = 0; a < n; ++a) P(a, a) += h * kPi * modes[a] / coef_.half_period + b_;
  if (!disc_.weight_on) return P * P;
  const Eigen::MatrixXcd M = weight_matrix(sector, tau, -0.5);
  const Eigen::MatrixXcd W = weight_matrix(sector, tau, -1.0);
  return M * P * W * P * M;
}

int StripOperator::index(int sector, int j, int i) const {
  const int ns = static_cast<int>(modes_[sector].size());
  return tau_major_ ? j * ns + i : i * nt_ + j;
}

HermitianBand StripOperator::assemble(int sector) const {
  const int ns = static_cast<int>(modes_[sector].size());
  const int n = ns * nt_;
  const int bw_sector = sectors() == 2 ? (dmax_ + 1) / 2 : dmax_;
  int kd;
  if (tau_major_) {
    kd = sigma_dependent_metric_ ? 4 * ns - 1 : std::max(3 * ns, 2 * bw_sector);
  } else {
    kd = std::max(2 * bw_sector * nt_, 3);
  }
  HermitianBand H(n, std::min(kd, n - 1));
  auto put_block = [&](int j, int jp, const Eigen::MatrixXcd& B) {
    for (int a = 0; a < ns; ++a)
      for (int b = 0; b < ns; ++b) {
        const int r = index(sector, j, a), c = index(sector, jp, b);
        if (j == jp && r < c) continue;
        if (B(a, b) == 0.0) continue;
        H.add(r, c, r == c ? cplx(B(a, b).real(), 0.0) : B(a, b));
      }
  };
  std::vector<Eigen::MatrixXcd> M(nt_);
  for (int j = 0; j < nt_; ++j) {
    put_block(j, j, sigma_block(sector, j));
    M[j] = weight_matrix(sector, tau_[j], -0.5);
  }
  // tau part: M D1^T a D1 M
  std::vector<Eigen::MatrixXcd> Ah(half_.size());
  for (std::size_t hh = 0; hh < half_.size(); ++hh) Ah[hh] = weight_matrix(sector, half_[hh], 1.0);
  for (int j = 0; j < nt_; ++j)
    for (int jp = std::max(0, j - 3); jp <= j; ++jp) {
      Eigen::MatrixXcd K = Eigen::MatrixXcd::Zero(ns, ns);
      bool any = false;
      for (std::size_t hh = 0; hh < d1_.size(); ++hh) {
        double wj = 0.0, wjp = 0.0;
        for (auto& [node, w] : d1_[hh]) {
          if (node == j) wj = w;
          if (node == jp) wjp = w;
        }
        if (wj != 0.0 && wjp != 0.0) {
          K += wj * wjp * Ah[hh];
          any = true;
        }
      }
      if (any) put_block(j, jp, M[j] * K * M[jp]);
    }
  return H;
}

void StripOperator::apply(int sector, const CVec& u, CVec& y) const {
  const int ns = static_cast<int>(modes_[sector].size());
  y.assign(u.size(), 0.0);
  std::vector<Eigen::VectorXcd> v(nt_), acc(nt_, Eigen::VectorXcd::Zero(ns));
  std::vector<Eigen::MatrixXcd> M(nt_);
  for (int j = 0; j < nt_; ++j) {
    Eigen::VectorXcd uj(ns);
    for (int a = 0; a < ns; ++a) uj(a) = u[index(sector, j, a)];
    acc[j] = sigma_block(sector, j) * uj;
    M[j] = weight_matrix(sector, tau_[j], -0.5);
    v[j] = M[j] * uj;
  }
  std::vector<Eigen::VectorXcd> tacc(nt_, Eigen::VectorXcd::Zero(ns));
  for (std::size_t hh = 0; hh < d1_.size(); ++hh) {
    Eigen::VectorXcd g = Eigen::VectorXcd::Zero(ns);
    for (auto& [node, w] : d1_[hh]) g += w * v[node];
    g = weight_matrix(sector, half_[hh], 1.0) * g;
    for (auto& [node, w] : d1_[hh]) tacc[node] += w * g;
  }
  for (int j = 0; j < nt_; ++j) {
    acc[j] += M[j] * tacc[j];
    for (int a = 0; a < ns; ++a) y[index(sector, j, a)] = acc[j](a);
  }
}

DirectSpectrum lowest_eigs_hermitian(const StripOperator& op, int count, double shift, const LanczosOptions& opt) {
  struct Item {
    double value, residual;
    int parity;
    CVec vec;
  };
  std::vector<Item> items;
  for (int s = 0; s < op.sectors(); ++s) {
    HermitianBand H = op.assemble(s);
    const int c = std::min(count, op.sector_size(s));
    auto r = lowest_eigs_band(H, c, shift, opt);
    for (int i = 0; i < c; ++i) items.push_back({r.values[i], r.residuals[i], op.sector_parity(s), r.vectors[i]});
  }
  std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.value < b.value; });
  DirectSpectrum d;
  d.h = op.h();
  d.sector_count = op.sectors();
  const double conv = std::pow(op.h(), 2.0 * op.k() + 2.0);
  for (int i = 0; i < count && i < static_cast<int>(items.size()); ++i) {
    d.eigenvalues.push_back(items[i].value);
    d.residual_norms.push_back(items[i].residual);
    d.lambda_equiv.push_back(conv * items[i].value);
    d.parity.push_back(items[i].parity);
    d.vectors.push_back(std::move(items[i].vec));
  }
  return d;
}

DirectSpectrum double_well_direct(const GeometryProfile& profile, double xi0, double delta10,
                                  const StripDiscretization& disc, int count) {
  const StripOperator op(coefficients_from_profile(profile), disc, xi0);
  return lowest_eigs_hermitian(op, count, delta10 - 0.02);
}

StripCoefficients single_well_coefficients(const GeometryProfile& profile, Side side,
                                           const SingleWellExtension& ext) {
  if (!(ext.blend > 0.0 && ext.blend < 1.0) || ext.pad < 0.0)
    throw Error(ErrorKind::Config, "invalid single-well extension parameters");
  double gmax = 0.0;
  for (double g : profile.gamma) gmax = std::max(gmax, g);
  const double ginf = ext.gamma_inf > 0.0 ? ext.gamma_inf : 1.5 * gmax;
  if (!(ginf > gmax)) throw Error(ErrorKind::Config, "gamma_inf must exceed max gamma");
  const double L = profile.L;
  StripCoefficients c;
  c.k = profile.k;
  c.center = side == Side::Right ? profile.s_r : profile.s_l;
  c.half_period = L * (1.0 + ext.pad);
  c.beta0 = 0.0;  // a single well carries no circulation
  c.gamma0 = profile.gamma0;
  const double center = c.center, blend = ext.blend;
  auto chi = [center, L, blend](double x) {
    const double d = std::abs(x - center);
    return smooth_step((d - (1.0 - blend) * L) / (blend * L));
  };
  c.gamma = [f = profile.gamma_fn, chi, ginf](double x) {
    const double w = chi(x);
    return (1.0 - w) * f(x) + w * ginf;
  };
  c.delta_tilde = [f = profile.delta_tilde_fn, chi](double x) { return (1.0 - chi(x)) * f(x); };
  c.kappa = [f = profile.kappa_fn, chi](double x) { return (1.0 - chi(x)) * f(x); };
  return c;
}

DirectSpectrum single_well_direct(const GeometryProfile& profile, Side side, double xi0, double delta10,
                                  const StripDiscretization& disc, const SingleWellExtension& ext, int count) {
  StripDiscretization d = disc;
  d.use_sectors = false;
  const StripOperator op(single_well_coefficients(profile, side, ext), d, xi0);
  DirectSpectrum r = lowest_eigs_hermitian(op, count, delta10 - 0.02);
  if (ext.check_tol > 0.0) {
    SingleWellExtension e2 = ext;
    double gmax = 0.0;
    for (double g : profile.gamma) gmax = std::max(gmax, g);
    e2.gamma_inf = 2.0 * (ext.gamma_inf > 0.0 ? ext.gamma_inf : 1.5 * gmax);
    e2.check_tol = 0.0;
    const StripOperator op2(single_well_coefficients(profile, side, e2), d, xi0);
    const DirectSpectrum r2 = lowest_eigs_hermitian(op2, 1, delta10 - 0.02);
    const double change = std::abs(r2.eigenvalues[0] - r.eigenvalues[0]);
    if (change > ext.check_tol)
      throw Error(ErrorKind::Solver, "single-well truncation sensitivity " + fmt(change) +
                                         " exceeds tolerance; enlarge the sigma box or decrease h");
  }
  return r;
}

}  // namespace tk
