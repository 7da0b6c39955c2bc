#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <algorithm>
#include <functional>
#include <vector>

namespace tk {

using cplx = std::complex<double>;
inline constexpr double kPi = 3.14159265358979323846;

// Richardson table for values computed at steps h, h/r, h/r^2, ... whose error
// expands in h^p, h^{2p}, ... Returns the fully extrapolated value.
template <class T>
T richardson(std::vector<T> v, double r, double p) {
  for (std::size_t level = 1; level < v.size(); ++level) {
    const double f = std::pow(r, p * static_cast<double>(level));
    for (std::size_t i = v.size() - 1; i >= level; --i) v[i] = (f * v[i] - v[i - 1]) / (f - 1.0);
  }
  return v.back();
}

struct QuadRule {
  std::vector<double> x;
  std::vector<double> w;
};

// Gauss-Legendre rule with n nodes mapped to [a, b].
QuadRule gauss_legendre(int n, double a, double b);

// Composite Gauss-Legendre: m panels of n nodes each.
QuadRule composite_gauss(int panels, int n, double a, double b);

// Trigonometric interpolant of uniformly spaced samples on one period.
class PeriodicSeries {
 public:
  PeriodicSeries() = default;
  PeriodicSeries(const std::vector<double>& samples, double x0, double period);

  double operator()(double x) const { return derivative(x, 0); }
  double derivative(double x, int order) const;
  double period() const { return period_; }
  double origin() const { return x0_; }
  std::size_t size() const { return n_; }
  // Coefficient c_m of exp(2 pi i m (x - x0) / period), |m| <= n/2.
  cplx coefficient(int m) const;

 private:
  std::size_t n_ = 0;
  double x0_ = 0.0;
  double period_ = 1.0;
  std::vector<cplx> c_;  // FFT layout, already divided by n
};

// Forward DFT (no normalization), sign convention exp(-2 pi i j m / n).
std::vector<cplx> dft(const std::vector<cplx>& x);

// Least-squares line fit y = a + b x; returns {a, b}.
std::pair<double, double> linear_fit(const std::vector<double>& x, const std::vector<double>& y);

// Finite-difference weights for the m-th derivative at 0 on nodes x.
std::vector<double> fd_weights(const std::vector<double>& x, int m);

// Barycentric interpolant on Chebyshev points of the second kind.
class ChebyshevInterp {
 public:
  ChebyshevInterp() = default;
  ChebyshevInterp(double a, double b, std::vector<cplx> values);
  static std::vector<double> nodes(double a, double b, int n);
  cplx operator()(double x) const;
  double lo() const { return std::min(a_, b_); }
  double hi() const { return std::max(a_, b_); }

 private:
  double a_ = 0.0, b_ = 1.0;
  std::vector<double> x_, w_;
  std::vector<cplx> f_;
};

// Smooth step: 0 for x <= 0, 1 for x >= 1, C-infinity in between.
double smooth_step(double x);

}  // namespace tk
