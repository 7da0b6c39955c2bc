#include <gtest/gtest.h>

#include <boost/math/special_functions/ellint_2.hpp>
#include <cmath>

#include "tunnelkit/errors.hpp"
#include "tunnelkit/geometry.hpp"

using namespace tk;

namespace {

const char* kField = "(1 - x1^2 - x2^2) * (4 + x2^2)";

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Internal;
}

}  // namespace

TEST(Geometry, CircleArcLengthAndCurvature) {
  const ArcLengthData a = arclength_parametrize(CurveSpec::circle(2.0), 256);
  EXPECT_NEAR(a.L, 2.0 * kPi, 1e-12);
  for (double k : a.kappa) EXPECT_NEAR(k, 0.5, 1e-9);
}

TEST(Geometry, EllipseLengthMatchesEllipticIntegral) {
  const double A = 2.0, B = 1.0;
  const ArcLengthData a = arclength_parametrize(CurveSpec::ellipse(A, B), 512);
  const double e = std::sqrt(1.0 - B * B / (A * A));
  EXPECT_NEAR(a.L, 2.0 * A * boost::math::ellint_2(e), 1e-10);
  // curvature at the end of the major axis is A / B^2
  double kmax = 0.0;
  for (double k : a.kappa) kmax = std::max(kmax, k);
  EXPECT_NEAR(kmax, A / (B * B), 1e-8);
}

TEST(Geometry, CirculationIsMeanFlux) {
  EXPECT_NEAR(circulation(FieldSpec{"1", 1}, CurveSpec::circle(1.5)), 0.75, 1e-11);
  EXPECT_NEAR(circulation(FieldSpec{kField, 1}, CurveSpec::circle(1.0)), 25.0 / 24.0, 1e-11);
}

TEST(Geometry, FiniteDifferenceJetMatchesTaylorJet) {
  const ArcLengthData a = arclength_parametrize(CurveSpec::ellipse(1.5, 1.0), 128);
  const FieldSpec f{"(1 - x1^2/2.25 - x2^2) * (3 + x2 + x2^2)", 1};
  const NormalJet fd = normal_jet(f, a);
  const NormalJet ex = normal_jet_exact(f, a);
  for (std::size_t i = 0; i < fd.gamma.size(); ++i) {
    EXPECT_NEAR(fd.gamma[i], ex.gamma[i], 1e-8);
    EXPECT_NEAR(fd.delta[i], ex.delta[i], 1e-7);
  }
}

TEST(Geometry, CorpusProfile) {
  const GeometryProfile p = build_geometry(CurveSpec::circle(1.0), FieldSpec{kField, 1}, GeometryOptions{});
  EXPECT_NEAR(p.L, kPi, 1e-12);
  EXPECT_NEAR(p.gamma0, 8.0, 1e-9);
  EXPECT_NEAR(p.gamma_dd, 4.0, 1e-7);
  EXPECT_NEAR(p.s_r, -kPi / 2.0, 1e-9);
  EXPECT_NEAR(p.s_l, kPi / 2.0, 1e-9);
  EXPECT_NEAR(p.beta0, 25.0 / 24.0, 1e-11);
  // gamma = 9 - cos 2 theta, so the top of the circle carries the maximum 10
  EXPECT_NEAR(p.gamma_at(0.0), 10.0, 1e-9);
  EXPECT_NEAR(p.kappa_at(0.3), 1.0, 1e-10);
  EXPECT_NEAR(p.delta_at(0.0), -9.0, 1e-6);
  EXPECT_NEAR(p.delta_tilde_at(0.0), -19.0, 1e-6);
  EXPECT_NEAR(p.variability, 0.2, 1e-9);
  EXPECT_TRUE(p.warnings.empty());
  EXPECT_EQ(profile_csv(p).rfind("# s:", 0), 0u);
}

TEST(Geometry, VariabilityWarning) {
  GeometryOptions o;
  o.variability_eps = 0.1;
  const GeometryProfile p = build_geometry(CurveSpec::circle(1.0), FieldSpec{kField, 1}, o);
  ASSERT_EQ(p.warnings.size(), 1u);
}

TEST(Geometry, AssumptionViolations) {
  const GeometryOptions o;
  // B does not vanish on the curve
  EXPECT_EQ(kind_of([&] { build_geometry(CurveSpec::circle(1.0), FieldSpec{"1.5 - x1^2 - x2^2", 1}, o); }),
            ErrorKind::Assumption);
  // field not mirror symmetric
  EXPECT_EQ(kind_of([&] { build_geometry(CurveSpec::circle(1.0), FieldSpec{"(1 - x1^2 - x2^2) * (4 + x1)", 1}, o); }),
            ErrorKind::Assumption);
  // constant gamma: no wells
  EXPECT_EQ(kind_of([&] { build_geometry(CurveSpec::circle(1.0), FieldSpec{"1 - x1^2 - x2^2", 1}, o); }),
            ErrorKind::Assumption);
  // parametric curve using a plane variable
  EXPECT_EQ(kind_of([&] { build_geometry(CurveSpec::parametric("cos(t) + x1", "sin(t)"), FieldSpec{kField, 1}, o); }),
            ErrorKind::Config);
}

TEST(Geometry, HalfTurnInvariance) {
  const GeometryOptions o;
  const GeometryProfile a = build_geometry(CurveSpec::parametric("2*cos(t)", "sin(t)"),
                                           FieldSpec{"(1 - x1^2/4 - x2^2) * (4 + x2 + x2^2)", 1}, o);
  const GeometryProfile b = build_geometry(CurveSpec::parametric("-2*cos(t)", "-sin(t)"),
                                           FieldSpec{"(1 - x1^2/4 - x2^2) * (4 - x2 + x2^2)", 1}, o);
  EXPECT_NEAR(a.L, b.L, 1e-10);
  EXPECT_NEAR(a.beta0, b.beta0, 1e-10);
  EXPECT_NEAR(a.gamma0, b.gamma0, 1e-9);
  EXPECT_NEAR(a.gamma_dd, b.gamma_dd, 1e-7);
  // the half-turn exchanges the upper and lower arcs between the wells
  auto arcs = [](const GeometryProfile& p) {
    const double d = std::abs(p.s_r - p.s_l);
    return std::make_pair(std::min(d, 2.0 * p.L - d), std::max(d, 2.0 * p.L - d));
  };
  EXPECT_NEAR(arcs(a).first, arcs(b).first, 1e-9);
  EXPECT_NEAR(arcs(a).second, arcs(b).second, 1e-9);
}

TEST(Geometry, ParametricCircleMatchesBuiltin) {
  const GeometryOptions o;
  const GeometryProfile a = build_geometry(CurveSpec::circle(1.0), FieldSpec{kField, 1}, o);
  const GeometryProfile b = build_geometry(CurveSpec::parametric("cos(t)", "sin(t)"), FieldSpec{kField, 1}, o);
  EXPECT_NEAR(a.gamma0, b.gamma0, 1e-10);
  for (double s : {-2.0, -0.4, 1.3}) EXPECT_NEAR(a.gamma_at(s), b.gamma_at(s), 1e-9);
}
