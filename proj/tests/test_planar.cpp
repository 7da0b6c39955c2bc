#include <gtest/gtest.h>

#include <cmath>

#include "tunnelkit/errors.hpp"
#include "tunnelkit/planar.hpp"

using namespace tk;

namespace {

const FieldSpec kCorpus{"(1 - x1^2 - x2^2) * (4 + x2^2)", 1};

PlanarOptions coarse() {
  PlanarOptions o;
  o.dx = 0.02;
  return o;
}

}  // namespace

TEST(Planar, PoincareGaugeHasTheRightCurl) {
  const Expression B("1 + x1 * x2^2");
  const double x = 0.3, y = -0.4, e = 1e-5;
  const double curl = (poincare_potential(B, x + e, y)[1] - poincare_potential(B, x - e, y)[1]) / (2 * e) -
                      (poincare_potential(B, x, y + e)[0] - poincare_potential(B, x, y - e)[0]) / (2 * e);
  EXPECT_NEAR(curl, B(x, y), 1e-8);
}

TEST(Planar, ConstantFieldLandauLevel) {
  // B = 1 on a box much larger than the magnetic length: ground energy hbar
  const PlanarSpectrum s = planar_direct(FieldSpec{"1", 1}, CurveSpec::circle(1.0), 0.05, coarse());
  EXPECT_NEAR(s.eigenvalues[0] / 0.05, 1.0, 2e-3);
  EXPECT_LE(s.residuals[0], 1e-8);
}

TEST(Planar, GaugeInvariance) {
  const PlanarSpectrum a = planar_direct(kCorpus, CurveSpec::circle(1.0), 0.05, coarse());
  PlanarOptions o = coarse();
  o.gauge_chi = "0.3*x1^3 - 0.7*x1*x2^2 + 1.1*x2";
  const PlanarSpectrum b = planar_direct(kCorpus, CurveSpec::circle(1.0), 0.05, o);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-9 * a.eigenvalues[i]);
}

TEST(Planar, QuarterTurnInvariance) {
  const PlanarSpectrum a = planar_direct(kCorpus, CurveSpec::circle(1.0), 0.05, coarse());
  PlanarOptions o = coarse();
  o.rotation = kPi / 2.0;
  const PlanarSpectrum b = planar_direct(kCorpus, CurveSpec::circle(1.0), 0.05, o);
  for (int i = 0; i < 2; ++i) EXPECT_NEAR(a.eigenvalues[i], b.eigenvalues[i], 1e-9 * a.eigenvalues[i]);
}

TEST(Planar, ResolutionHeuristic) {
  PlanarOptions o;
  o.dx = 0.02;
  try {
    planar_direct(kCorpus, CurveSpec::circle(1.0), 0.01, o);
    FAIL() << "expected a resolution error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
  }
  o.half_width = 0.9;  // box inside the curve
  EXPECT_THROW(planar_direct(kCorpus, CurveSpec::circle(1.0), 0.05, o), Error);
}
