#include <gtest/gtest.h>

#include <cmath>

#include "tunnelkit/band.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/hermite_oracle.hpp"

using namespace tk;

namespace {

const BandTable& table_k1() {
  static const BandTable t = [] {
    BandOptions o;
    o.n_samples = 21;
    return build_band_table(1, o);
  }();
  return t;
}

}  // namespace

TEST(Band, GridValidation) {
  EXPECT_THROW((Grid1D{-1.0, 101}).validate(), Error);
  EXPECT_THROW((Grid1D{8.0, 10}).validate(), Error);
  const Grid1D g{8.0, 101};
  EXPECT_EQ(g.refined(2).n, 401);
  EXPECT_DOUBLE_EQ(g.refined(2).spacing() * 4.0, g.spacing());
}

TEST(Band, HarmonicOscillatorLevels) {
  const Grid1D g{8.0, 1601};
  const RealEigs e = lowest_real_eigs(assemble_real(g, [](double t) { return t * t; }), 3, g.spacing());
  EXPECT_NEAR(e.values[0], 1.0, 1e-4);
  EXPECT_NEAR(e.values[1], 3.0, 1e-4);
  EXPECT_NEAR(e.values[2], 5.0, 2e-4);
}

TEST(Band, FamilyMatchesHermiteOracle) {
  for (int k : {1, 2}) {
    const MontgomeryFamily fam(k, Grid1D{8.0, 1601}, 3);
    const HermiteOracle oracle{k, 140, 1.0};
    for (double xi : {-0.5, 0.0, 0.35, 1.2}) EXPECT_NEAR(fam.nu(xi), oracle.eigenvalues(xi)[0], 1e-8) << k << " " << xi;
  }
}

TEST(Band, TableMinimumMatchesOracle) {
  const BandTable& t = table_k1();
  const auto m = HermiteOracle{1, 140, 1.0}.minimum(-1.5, 2.0);
  EXPECT_NEAR(t.xi0, m.xi0, 1e-7 * m.xi0);
  EXPECT_NEAR(t.nu0, m.nu0, 1e-7 * m.nu0);
  EXPECT_NEAR(t.nu0_dd, m.nu0_dd, 1e-7 * m.nu0_dd);
  EXPECT_NEAR(t.xi0, 0.346758403748, 1e-9);
  EXPECT_NEAR(t.nu0, 0.569820317388, 1e-10);
}

TEST(Band, HolomorphicExtensionIsConsistent) {
  const BandTable& t = table_k1();
  EXPECT_NEAR(band_holomorphic(t, t.xi0).real(), t.nu0, 1e-13);
  // contour Taylor coefficients against the Richardson second difference
  EXPECT_NEAR(band_holomorphic(t, t.xi0, 2).real(), t.nu0_dd, 1e-9);
  const MontgomeryFamily fam(1, t.grid, t.levels);
  EXPECT_NEAR(band_holomorphic(t, t.xi0 + 0.3).real(), fam.nu(t.xi0 + 0.3), 1e-9);
  // the real band has a real extension on the real axis and conjugate symmetry off it
  const cplx z(t.xi0 + 0.1, 0.2);
  EXPECT_NEAR(std::abs(band_holomorphic(t, std::conj(z)) - std::conj(band_holomorphic(t, z))), 0.0, 1e-13);
  EXPECT_NEAR(std::abs(band_holomorphic(t, z) - fam.nu_complex(z)), 0.0, 1e-8);
}

TEST(Band, HessianClosedForm) {
  const BandTable& t = table_k1();
  const Mat2 h = band_hessian(t, 1.0, 1.0, 0.0);
  EXPECT_NEAR(h[0][0], 2.0 / 3.0 * t.nu0, 1e-15);
  EXPECT_DOUBLE_EQ(h[1][1], t.nu0_dd);
  EXPECT_EQ(h[0][1], 0.0);
  EXPECT_THROW(band_hessian(t, -1.0, 1.0, 0.0), Error);
}

TEST(Band, FeynmanHellmannIntegral) {
  const MontgomeryFamily fam(1, Grid1D{8.0, 1601}, 3);
  for (cplx xi : {cplx(0.8, 0.0), cplx(0.3, 0.15)}) {
    auto cd = [&](double e) { return (fam.nu_complex(xi + e) - fam.nu_complex(xi - e)) / (2.0 * e); };
    const cplx d = richardson<cplx>({cd(2e-3), cd(1e-3)}, 2.0, 2.0);
    EXPECT_NEAR(std::abs(fam.moments(xi).fh - d), 0.0, 1e-7);
  }
  EXPECT_NEAR(fam.dnu(0.346758403748), 0.0, 1e-10);
}

TEST(Band, EvenOrderMinimumIsSymmetric) {
  BandOptions o;
  o.n_samples = 21;
  const BandTable t = build_band_table(2, o);
  EXPECT_LE(std::abs(t.xi0), 1e-8);
}

TEST(Band, BracketFailureWhenRangeMissesMinimum) {
  BandOptions o;
  o.xi_lo = 0.6;
  o.xi_hi = 1.5;
  o.n_samples = 9;
  try {
    build_band_table(1, o);
    FAIL() << "expected a bracket failure";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Domain);
  }
}
