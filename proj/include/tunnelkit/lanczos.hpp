#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tunnelkit/numerics.hpp"

namespace tk {

using CVec = std::vector<cplx>;

// Hermitian band matrix in LAPACK lower band storage.
class HermitianBand {
 public:
  HermitianBand() = default;
  HermitianBand(int n, int kd);

  int size() const { return n_; }
  int bandwidth() const { return kd_; }
  // Adds v at (i, j), i >= j, i - j <= kd. The (j, i) entry is implied.
  void add(int i, int j, cplx v);
  cplx get(int i, int j) const;
  void matvec(const CVec& x, CVec& y) const;

  // Cholesky factor of (A - shift I); false if the shifted matrix is not positive definite.
  bool factor(double shift);
  // x <- (A - shift I)^{-1} x with the current factor.
  void solve(CVec& x) const;

 private:
  int n_ = 0, kd_ = 0;
  std::vector<cplx> ab_, fac_;
};

struct LanczosOptions {
  int max_steps = 120;
  int check_every = 5;
  double tol = 1e-8;          // absolute residual target relative to the vector norm
  std::uint64_t seed = 12345;
};

struct LanczosResult {
  std::vector<double> values;  // ascending
  std::vector<CVec> vectors;   // unit norm
  std::vector<double> residuals;
  int steps = 0;
  bool converged = false;
};

// Lowest `count` eigenpairs of a Hermitian operator from a shift-invert Krylov
// space with full reorthogonalization. apply: y = A x; solve: x <- (A - shift)^{-1} x.
LanczosResult shift_invert_lanczos(int n, int count, double shift, const std::function<void(const CVec&, CVec&)>& apply,
                                   const std::function<void(CVec&)>& solve, const LanczosOptions& opt = {});

// Factorizes the band matrix below its spectrum bottom, lowering the shift until
// the factorization succeeds, then runs the Lanczos iteration.
LanczosResult lowest_eigs_band(HermitianBand& A, int count, double shift, const LanczosOptions& opt = {},
                               double shift_step = 0.05);

}  // namespace tk
