#pragma once

#include <vector>

namespace tk {

// Independent spectral discretization of the Montgomery family in a scaled
// Hermite-function basis (exact Galerkin matrix for the polynomial potential).
struct HermiteOracle {
  int k = 1;
  int size = 140;
  double scale = 1.0;

  // Lowest `count` eigenvalues at real xi.
  std::vector<double> eigenvalues(double xi, int count = 1) const;
  // First and second xi-derivatives of the ground eigenvalue (perturbation sums).
  double derivative(double xi) const;
  double second_derivative(double xi) const;

  struct Minimum {
    double xi0, nu0, nu0_dd;
  };
  Minimum minimum(double lo, double hi) const;
};

}  // namespace tk
