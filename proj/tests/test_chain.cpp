#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <sstream>

#include "tunnelkit/band.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/tunneling.hpp"
#include "tunnelkit/wkb.hpp"

using namespace tk;

namespace {

struct Chain {
  BandTable band;
  GeometryProfile geom;
  EikonalSolution right, left;
  AgmonDistances dist;
  std::unique_ptr<MontgomeryFamily> family;
  WkbConstants wkb;
  TunnelingConstants c;
};

// Corpus chain built once for the whole suite.
const Chain& chain() {
  static const std::unique_ptr<Chain> ch = [] {
    auto c = std::make_unique<Chain>();
    BandOptions o;
    o.n_samples = 21;
    c->band = build_band_table(1, o);
    c->geom = build_geometry(CurveSpec::circle(1.0), FieldSpec{"(1 - x1^2 - x2^2) * (4 + x2^2)", 1}, {});
    c->right = solve_eikonal(Side::Right, c->geom, c->band);
    c->left = solve_eikonal(Side::Left, c->geom, c->band);
    c->dist = agmon_distances(c->right, c->left, c->geom);
    c->family = std::make_unique<MontgomeryFamily>(1, c->band.grid, c->band.levels);
    c->wkb = compute_wkb(c->geom, c->band, *c->family, c->right, c->left);
    c->c = collect_constants(c->geom, c->band, c->wkb, c->dist, c->right);
    return c;
  }();
  return *ch;
}

}  // namespace

TEST(Eikonal, CumulativeSimpsonIsExactForCubics) {
  std::vector<double> f;
  const double step = 0.1;
  for (int i = 0; i <= 10; ++i) f.push_back(std::pow(i * step, 3));
  const auto F = cumulative_simpson(f, step);
  EXPECT_NEAR(F.back(), 0.25, 1e-14);
  EXPECT_NEAR(F[4], std::pow(0.4, 4) / 4.0, 1e-14);
}

TEST(Eikonal, ResidualAndWellSlope) {
  const Chain& c = chain();
  EXPECT_LE(c.right.max_residual, 1e-10 * c.band.nu0);
  EXPECT_LE(c.left.max_residual, 1e-10 * c.band.nu0);
  const double lemma = std::sqrt(2.0 / 3.0 * c.geom.gamma_dd * c.band.nu0 / (c.geom.gamma0 * c.band.nu0_dd));
  EXPECT_NEAR(c.right.phi_prime[c.right.well_index].real(), lemma, 1e-4 * lemma);
  EXPECT_NEAR(c.right.phi[c.right.well_index].real(), 0.0, 1e-12);
}

TEST(Eikonal, AgmonDistancesOfTheSymmetricCorpus) {
  const Chain& c = chain();
  EXPECT_NEAR(c.dist.S_u, 1.367408733441, 1e-8);
  EXPECT_NEAR(c.dist.S_u, c.dist.S_d, 1e-8);
  EXPECT_DOUBLE_EQ(c.dist.S, std::min(c.dist.S_u, c.dist.S_d));
  EXPECT_LT(c.dist.continuity_defect, 1e-8);
  // the Agmon primitive is monotone away from the well
  for (std::size_t i = c.right.well_index + 1; i < c.right.Phi.size(); ++i) EXPECT_GE(c.right.Phi[i], c.right.Phi[i - 1]);
}

TEST(Eikonal, CsvCarriesUnitsLine) {
  const Chain& c = chain();
  const std::string csv = eikonal_csv(c.right, c.left, c.dist);
  EXPECT_EQ(csv.rfind("# s:", 0), 0u);
  EXPECT_NE(csv.find("\ns,re_phi,im_phi,Phi,g,D,I\n"), std::string::npos);
}

TEST(Wkb, HarmonicConstants) {
  const Chain& c = chain();
  EXPECT_NEAR(c.wkb.delta10, std::pow(c.geom.gamma0, 2.0 / 3.0) * c.band.nu0, 1e-12);
  // Hessian identity: nu0'' zeta / 2 equals sqrt(det Hess) / 2
  const Mat2 H = band_hessian(c.band, c.geom.gamma0, c.geom.gamma_dd, c.geom.s_r);
  EXPECT_NEAR(c.band.nu0_dd * c.wkb.zeta, std::sqrt(H[0][0] * H[1][1]), 1e-10);
  // for odd k the correction term vanishes at the well, leaving the harmonic ladder
  EXPECT_NEAR(c.wkb.R_at_well, 0.0, 1e-8);
  EXPECT_NEAR(c.wkb.delta11, c.band.nu0_dd * c.wkb.zeta / 2.0, 1e-8);
}

TEST(Wkb, SymmetricAmplitudes) {
  const Chain& c = chain();
  EXPECT_NEAR(c.wkb.A_u, c.wkb.A_d, 1e-8);
  EXPECT_NEAR(c.wkb.A_d, c.wkb.A_d_right, 1e-8);
  EXPECT_NEAR(c.wkb.VL.real(), -c.wkb.V0.real(), 1e-10);
  EXPECT_NEAR(c.wkb.VL.imag(), c.wkb.V0.imag(), 1e-10);
  EXPECT_NEAR(c.wkb.A_u, 1.4272926864, 1e-8);
  EXPECT_NEAR(c.wkb.alpha0, 0.0306653989, 1e-8);
}

TEST(Tunneling, FluxIntegralByDirectQuadrature) {
  const Chain& c = chain();
  EXPECT_NEAR(flux_integral_direct(c.right, c.geom, c.band), -c.c.g_mL, 1e-9);
}

TEST(Tunneling, LogDomainCombination) {
  const InteractionTerms t = combine_terms(-800.0, 0.3, -800.0, 0.3 + kPi);
  EXPECT_EQ(t.gap, 0.0);
  const InteractionTerms u = combine_terms(-800.0, 0.0, -800.0, 0.0);
  EXPECT_NEAR(u.log_gap, std::log(4.0) - 800.0, 1e-12);
  const InteractionTerms v = combine_terms(std::log(3.0), 0.0, std::log(1.0), kPi / 2.0);
  EXPECT_NEAR(v.gap, 2.0 * std::sqrt(10.0), 1e-12);
}

TEST(Tunneling, PredictCsvReplaysTheFormula) {
  const Chain& c = chain();
  std::vector<double> grid;
  for (int i = 0; i < 40; ++i) grid.push_back(0.001 + 1e-4 * i);
  const GapScan scan = gap_scan(grid, c.c);
  EXPECT_TRUE(scan.symmetric);
  std::istringstream in(scan_csv(scan, c.c));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("#", 0), 0u);
  std::getline(in, line);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    ASSERT_TRUE(std::getline(in, line));
    std::vector<double> cols;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cols.push_back(std::stod(cell));
    const SplittingPrediction p = interaction_term(grid[i], c.c);
    EXPECT_DOUBLE_EQ(cols[0], grid[i]);
    EXPECT_NEAR(cols[6], p.gap, 1e-12 * std::abs(p.gap) + 1e-300);
    EXPECT_NEAR(cols[5], p.log_gap, 1e-12);
  }
}

TEST(Tunneling, NodesAreZerosOfTheInterference) {
  const Chain& c = chain();
  std::vector<double> grid;
  for (int i = 0; i <= 60; ++i) grid.push_back(std::pow(0.19 + 1e-4 * i, 3));
  const GapScan scan = gap_scan(grid, c.c);
  ASSERT_GE(scan.nodes.size(), 5u);
  for (double z : scan.nodes) {
    const SplittingPrediction p = interaction_term(z, c.c);
    EXPECT_NEAR(std::cos(p.relative_phase / 2.0), 0.0, 1e-6);
  }
  EXPECT_NEAR(std::cbrt(scan.nodes[0]), 0.19024858, 2e-7);
}

TEST(Tunneling, GridValidation) {
  const Chain& c = chain();
  EXPECT_THROW(gap_scan({}, c.c), Error);
  EXPECT_THROW(gap_scan({0.002, 0.001}, c.c), Error);
  EXPECT_THROW(gap_scan({-0.001, 0.001}, c.c), Error);
  EXPECT_THROW(interaction_term(0.0, c.c), Error);
}

TEST(Tunneling, LeadingAsymptotics) {
  const Chain& c = chain();
  const AsymptoticEnergy e = leading_asymptotics(0.01, 1, c.c, c.geom.gamma_dd, true);
  EXPECT_NEAR(e.lambda1_leading, std::pow(0.01, 4.0 / 3.0) * c.wkb.delta10, 1e-15);
  EXPECT_NEAR(e.theta1, c.wkb.delta11, 1e-12);
  TunnelingConstants k2 = c.c;
  k2.k = 2;
  EXPECT_THROW(leading_asymptotics(0.01, 1, k2, c.geom.gamma_dd, true), Error);
}
