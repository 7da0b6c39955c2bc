#pragma once

#include <string>
#include <vector>

#include "tunnelkit/geometry.hpp"
#include "tunnelkit/lanczos.hpp"

namespace tk {

struct PlanarOptions {
  double half_width = 0.0;  // 0: curve extent + margin
  double margin = 0.3;
  double dx = 0.01;
  int count = 2;
  int quad_t = 8;           // Gauss nodes for the Poincare integral in t
  int quad_link = 4;        // Gauss nodes along each grid link
  std::string gauge_chi;    // optional gauge function chi(x1, x2) added as A + grad chi
  double rotation = 0.0;    // field rotated by this angle about the origin
  bool check_resolution = true;
};

struct PlanarSpectrum {
  double hbar = 0.0;
  std::vector<double> eigenvalues;
  std::vector<double> residuals;
  std::vector<double> scaled;  // lambda / hbar^{(2k+2)/(k+2)}
  int unknowns = 0;
  double half_width = 0.0;
};

// Poincare gauge potential A(x) = (int_0^1 t B(t x) dt) (-x2, x1).
Vec2 poincare_potential(const Expression& B, double x1, double x2, int quad_t = 8);

// Lowest eigenvalues of (-i hbar grad + A)^2 on a Dirichlet square, five-point
// Peierls discretization.
PlanarSpectrum planar_direct(const FieldSpec& field, const CurveSpec& curve, double hbar,
                             const PlanarOptions& opt = {});

}  // namespace tk
