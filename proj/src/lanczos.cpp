#include "tunnelkit/lanczos.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cstdio>
#include <random>

#include "lapack.hpp"
#include "tunnelkit/errors.hpp"

namespace tk {

namespace {

cplx dot(const CVec& a, const CVec& b) {
  cplx s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

double norm(const CVec& a) { return std::sqrt(std::max(0.0, dot(a, a).real())); }

}  // namespace

HermitianBand::HermitianBand(int n, int kd) : n_(n), kd_(std::min(kd, n - 1)) {
  if (n <= 0 || kd < 0) throw Error(ErrorKind::Internal, "invalid band dimensions");
  ab_.assign(static_cast<std::size_t>(kd_ + 1) * n, 0.0);
}

void HermitianBand::add(int i, int j, cplx v) {
  if (i < j) {
    std::swap(i, j);
    v = std::conj(v);
  }
  if (i - j > kd_) throw Error(ErrorKind::Internal, "entry outside the band");
  ab_[static_cast<std::size_t>(i - j) + static_cast<std::size_t>(j) * (kd_ + 1)] += v;
}

cplx HermitianBand::get(int i, int j) const {
  if (i < j) return std::conj(get(j, i));
  if (i - j > kd_) return 0.0;
  return ab_[static_cast<std::size_t>(i - j) + static_cast<std::size_t>(j) * (kd_ + 1)];
}

void HermitianBand::matvec(const CVec& x, CVec& y) const {
  y.assign(n_, 0.0);
  const std::size_t ld = kd_ + 1;
  for (int j = 0; j < n_; ++j) {
    const cplx* col = &ab_[j * ld];
    y[j] += col[0].real() * x[j];
    const int top = std::min(n_ - 1, j + kd_);
    for (int i = j + 1; i <= top; ++i) {
      const cplx a = col[i - j];
      y[i] += a * x[j];
      y[j] += std::conj(a) * x[i];
    }
  }
}

bool HermitianBand::factor(double shift) {
  fac_ = ab_;
  const std::size_t ld = kd_ + 1;
  for (int j = 0; j < n_; ++j) fac_[j * ld] -= shift;
  const lapack_int info = LAPACKE_zpbtrf(LAPACK_COL_MAJOR, 'L', n_, kd_, fac_.data(), kd_ + 1);
  if (info < 0) throw Error(ErrorKind::Internal, "zpbtrf argument error");
  return info == 0;
}

void HermitianBand::solve(CVec& x) const {
  const lapack_int info = LAPACKE_zpbtrs(LAPACK_COL_MAJOR, 'L', n_, kd_, 1, fac_.data(), kd_ + 1, x.data(), n_);
  if (info != 0) throw Error(ErrorKind::Solver, "band triangular solve failed");
}

LanczosResult shift_invert_lanczos(int n, int count, double shift, const std::function<void(const CVec&, CVec&)>& apply,
                                   const std::function<void(CVec&)>& solve, const LanczosOptions& opt) {
  if (count < 1 || count > n) throw Error(ErrorKind::Internal, "invalid eigenvalue count");
  const int max_steps = std::min(n, opt.max_steps);
  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> nd;
  std::vector<CVec> Q;
  CVec q(n);
  for (auto& v : q) v = cplx(nd(rng), nd(rng));
  double nq = norm(q);
  for (auto& v : q) v /= nq;
  Q.push_back(q);
  std::vector<double> alpha, beta;
  LanczosResult res;
  CVec w(n), Ax(n);
  for (int step = 1; step <= max_steps; ++step) {
    w = Q.back();
    solve(w);
    const double a = dot(Q.back(), w).real();
    alpha.push_back(a);
    // full reorthogonalization, twice
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& v : Q) {
        const cplx c = dot(v, w);
        for (int i = 0; i < n; ++i) w[i] -= c * v[i];
      }
    const double b = norm(w);
    const bool exhausted = b < 1e-14 * std::abs(a) || step == max_steps;
    if (step % opt.check_every == 0 || exhausted || step >= count + 2) {
      const int m = static_cast<int>(alpha.size());
      if (m >= count && (step % opt.check_every == 0 || exhausted)) {
        Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
        for (int i = 0; i < m; ++i) {
          T(i, i) = alpha[i];
          if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
        // map theta -> shift + 1/theta and keep the lowest
        std::vector<std::pair<double, int>> cand;
        for (int i = 0; i < m; ++i) {
          const double th = es.eigenvalues()(i);
          if (std::abs(th) > 0.0) cand.push_back({shift + 1.0 / th, i});
        }
        std::sort(cand.begin(), cand.end());
        if (static_cast<int>(cand.size()) >= count) {
          res.values.clear();
          res.vectors.clear();
          res.residuals.clear();
          bool ok = true;
          for (int c = 0; c < count; ++c) {
            CVec x(n, 0.0);
            for (int j = 0; j < m; ++j) {
              const double y = es.eigenvectors()(j, cand[c].second);
              for (int i = 0; i < n; ++i) x[i] += y * Q[j][i];
            }
            const double nx = norm(x);
            for (auto& v : x) v /= nx;
            apply(x, Ax);
            const double nu = dot(x, Ax).real();
            double r2 = 0.0;
            for (int i = 0; i < n; ++i) r2 += std::norm(Ax[i] - nu * x[i]);
            const double r = std::sqrt(r2);
            res.values.push_back(nu);
            res.vectors.push_back(std::move(x));
            res.residuals.push_back(r);
            ok = ok && r <= opt.tol;
          }
          res.steps = step;
          if (ok) {
            res.converged = true;
            return res;
          }
        }
      }
    }
    if (exhausted) break;
    beta.push_back(b);
    for (auto& v : w) v /= b;
    Q.push_back(w);
  }
  res.converged = false;
  return res;
}

LanczosResult lowest_eigs_band(HermitianBand& A, int count, double shift, const LanczosOptions& opt,
                               double shift_step) {
  double s = shift;
  int tries = 0;
  while (!A.factor(s)) {
    if (++tries > 60) throw Error(ErrorKind::Solver, "no positive definite shift found below the spectrum");
    s -= shift_step * (1 << std::min(tries, 10));
  }
  auto r = shift_invert_lanczos(
      A.size(), count, s, [&](const CVec& x, CVec& y) { A.matvec(x, y); }, [&](CVec& x) { A.solve(x); }, opt);
  if (!r.converged) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "eigensolver did not converge: %d steps, last residual %.3e", r.steps,
                  r.residuals.empty() ? -1.0 : *std::max_element(r.residuals.begin(), r.residuals.end()));
    throw Error(ErrorKind::Solver, buf);
  }
  return r;
}

}  // namespace tk
