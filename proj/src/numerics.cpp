#include "tunnelkit/numerics.hpp"

#include <cmath>
#include <unsupported/Eigen/FFT>

#include <boost/math/special_functions/legendre.hpp>

#include "tunnelkit/errors.hpp"

namespace tk {

QuadRule gauss_legendre(int n, double a, double b) {
  if (n < 1) throw Error(ErrorKind::Internal, "gauss_legendre: n < 1");
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  QuadRule q;
  const double c = 0.5 * (a + b), hw = 0.5 * (b - a);
  auto push = [&](double z) {
    const double dp = boost::math::legendre_p_prime<double>(n, z);
    q.x.push_back(c + hw * z);
    q.w.push_back(hw * 2.0 / ((1.0 - z * z) * dp * dp));
  };
  // zeros holds the nonnegative roots in increasing order
  for (auto it = zeros.rbegin(); it != zeros.rend(); ++it)
    if (*it != 0.0) push(-*it);
  for (double z : zeros) push(z);
  return q;
}

QuadRule composite_gauss(int panels, int n, double a, double b) {
  QuadRule q;
  const double d = (b - a) / panels;
  for (int p = 0; p < panels; ++p) {
    QuadRule g = gauss_legendre(n, a + p * d, a + (p + 1) * d);
    q.x.insert(q.x.end(), g.x.begin(), g.x.end());
    q.w.insert(q.w.end(), g.w.begin(), g.w.end());
  }
  return q;
}

std::vector<cplx> dft(const std::vector<cplx>& x) {
  Eigen::FFT<double> fft;
  std::vector<cplx> out;
  fft.fwd(out, x);
  return out;
}

PeriodicSeries::PeriodicSeries(const std::vector<double>& samples, double x0, double period)
    : n_(samples.size()), x0_(x0), period_(period) {
  if (n_ < 4 || n_ % 2 != 0) throw Error(ErrorKind::Internal, "PeriodicSeries needs an even sample count >= 4");
  std::vector<cplx> in(samples.begin(), samples.end());
  c_ = dft(in);
  for (auto& v : c_) v /= static_cast<double>(n_);
}

cplx PeriodicSeries::coefficient(int m) const {
  const int n = static_cast<int>(n_);
  if (std::abs(m) > n / 2) return 0.0;
  if (std::abs(m) == n / 2) return 0.5 * c_[n / 2];
  return c_[(m + n) % n];
}

double PeriodicSeries::derivative(double x, int order) const {
  const int n = static_cast<int>(n_);
  const double w = 2.0 * kPi / period_;
  const double th = w * (x - x0_);
  double sum = c_[0].real() * (order == 0 ? 1.0 : 0.0);
  const cplx e1 = std::polar(1.0, th);
  cplx e = 1.0;
  for (int m = 1; m < n / 2; ++m) {
    // c_m e^{i m th} + c_{-m} e^{-i m th} = 2 Re(c_m e^{i m th}) for real data
    e *= e1;
    if (m % 64 == 0) e = std::polar(1.0, m * th);
    const cplx dm = order == 0 ? cplx(1.0) : std::pow(cplx(0.0, m * w), order);
    sum += 2.0 * (c_[m] * e * dm).real();
  }
  // Nyquist term c_{n/2} cos(n th / 2)
  const double mn = 0.5 * n;
  const double nyq = c_[n / 2].real();
  const double ph = mn * th;
  const double k = mn * w;
  switch (order % 4) {
    case 0: sum += nyq * std::pow(k, order) * std::cos(ph); break;
    case 1: sum -= nyq * std::pow(k, order) * std::sin(ph); break;
    case 2: sum -= nyq * std::pow(k, order) * std::cos(ph); break;
    case 3: sum += nyq * std::pow(k, order) * std::sin(ph); break;
  }
  return sum;
}

std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {(sy - b * sx) / n, b};
}

std::vector<double> fd_weights(const std::vector<double>& x, int m) {
  const int n = static_cast<int>(x.size());
  if (n <= m) throw Error(ErrorKind::Internal, "fd_weights: too few nodes");
  std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
  double c1 = 1.0, c4 = x[0];
  c[0][0] = 1.0;
  for (int i = 1; i < n; ++i) {
    const int mn = std::min(i, m);
    double c2 = 1.0;
    const double c5 = c4;
    c4 = x[i];
    for (int j = 0; j < i; ++j) {
      const double c3 = x[i] - x[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int kk = mn; kk >= 1; --kk) c[i][kk] = c1 * (kk * c[i - 1][kk - 1] - c5 * c[i - 1][kk]) / c2;
        c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
      }
      for (int kk = mn; kk >= 1; --kk) c[j][kk] = (c4 * c[j][kk] - kk * c[j][kk - 1]) / c3;
      c[j][0] = c4 * c[j][0] / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = c[i][m];
  return w;
}

std::vector<double> ChebyshevInterp::nodes(double a, double b, int n) {
  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) x[j] = 0.5 * (a + b) + 0.5 * (b - a) * std::cos(kPi * j / (n - 1));
  return x;
}

ChebyshevInterp::ChebyshevInterp(double a, double b, std::vector<cplx> values)
    : a_(a), b_(b), x_(nodes(a, b, static_cast<int>(values.size()))), f_(std::move(values)) {
  const int n = static_cast<int>(f_.size());
  if (n < 2) throw Error(ErrorKind::Internal, "ChebyshevInterp needs at least two nodes");
  w_.assign(n, 1.0);
  for (int j = 0; j < n; ++j) {
    if (j % 2) w_[j] = -1.0;
    if (j == 0 || j == n - 1) w_[j] *= 0.5;
  }
}

cplx ChebyshevInterp::operator()(double x) const {
  cplx num = 0.0;
  double den = 0.0;
  for (std::size_t j = 0; j < x_.size(); ++j) {
    const double d = x - x_[j];
    if (d == 0.0) return f_[j];
    const double t = w_[j] / d;
    num += t * f_[j];
    den += t;
  }
  return num / den;
}

double smooth_step(double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

}  // namespace tk
