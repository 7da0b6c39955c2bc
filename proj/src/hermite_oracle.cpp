#include "tunnelkit/hermite_oracle.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <boost/math/tools/roots.hpp>

#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

struct Decomp {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
  Eigen::MatrixXd dh;  // dH/dxi restricted to the basis
};

Decomp decompose(const HermiteOracle& o, double xi) {
  const int big = o.size + 2 * o.k + 6;
  // position operator x = s (a + a^+) / sqrt 2 in the Hermite function basis
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(big, big);
  Eigen::MatrixXd p2 = Eigen::MatrixXd::Zero(big, big);
  for (int n = 0; n + 1 < big; ++n) x(n, n + 1) = x(n + 1, n) = o.scale * std::sqrt((n + 1) / 2.0);
  // D^2 = -(a - a^+)^2 / (2 s^2); its matrix is (2n + 1) / (2 s^2) on the diagonal
  for (int n = 0; n < big; ++n) {
    p2(n, n) = (2.0 * n + 1.0) / (2.0 * o.scale * o.scale);
    if (n + 2 < big) p2(n, n + 2) = p2(n + 2, n) = -std::sqrt((n + 1.0) * (n + 2.0)) / (2.0 * o.scale * o.scale);
  }
  Eigen::MatrixXd w = Eigen::MatrixXd::Identity(big, big);
  for (int j = 0; j <= o.k; ++j) w = w * x;
  w /= (o.k + 1.0);
  const Eigen::MatrixXd q = xi * Eigen::MatrixXd::Identity(big, big) - w;
  const Eigen::MatrixXd h = (p2 + q * q).topLeftCorner(o.size, o.size);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  if (es.info() != Eigen::Success) throw Error(ErrorKind::Solver, "Hermite oracle eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors(), 2.0 * q.topLeftCorner(o.size, o.size)};
}

}  // namespace

std::vector<double> HermiteOracle::eigenvalues(double xi, int count) const {
  const Decomp d = decompose(*this, xi);
  return std::vector<double>(d.values.data(), d.values.data() + count);
}

double HermiteOracle::derivative(double xi) const {
  const Decomp d = decompose(*this, xi);
  const Eigen::VectorXd u = d.vectors.col(0);
  return u.dot(d.dh * u);
}

double HermiteOracle::second_derivative(double xi) const {
  const Decomp d = decompose(*this, xi);
  const Eigen::VectorXd u = d.vectors.col(0);
  const Eigen::VectorXd g = d.dh * u;
  // d^2H/dxi^2 = 2 restricted to the basis (exact: the basis is xi independent)
  double s = 2.0;
  for (int n = 1; n < size; ++n) {
    const double c = d.vectors.col(n).dot(g);
    s -= 2.0 * c * c / (d.values(n) - d.values(0));
  }
  return s;
}

HermiteOracle::Minimum HermiteOracle::minimum(double lo, double hi) const {
  std::uintmax_t it = 200;
  auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-14; };
  const auto r = boost::math::tools::toms748_solve([&](double x) { return derivative(x); }, lo, hi, tol, it);
  Minimum m;
  m.xi0 = 0.5 * (r.first + r.second);
  m.nu0 = eigenvalues(m.xi0, 1)[0];
  m.nu0_dd = second_derivative(m.xi0);
  return m;
}

}  // namespace tk
