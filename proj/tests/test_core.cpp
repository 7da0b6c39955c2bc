#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "tunnelkit/compare.hpp"
#include "tunnelkit/config.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/expr.hpp"
#include "tunnelkit/lanczos.hpp"
#include "tunnelkit/numerics.hpp"

using namespace tk;

TEST(Numerics, GaussLegendreIsExactForPolynomials) {
  const QuadRule r = gauss_legendre(6, -1.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], 11);
  EXPECT_NEAR(s, (std::pow(2.0, 12) - 1.0) / 12.0, 1e-10);
}

TEST(Numerics, RichardsonRemovesLeadingError) {
  auto f = [](double h) { return 1.0 + 3.0 * h * h + 5.0 * h * h * h * h; };
  EXPECT_NEAR(richardson<double>({f(0.1), f(0.05), f(0.025)}, 2.0, 2.0), 1.0, 1e-12);
}

TEST(Numerics, PeriodicSeriesDifferentiatesTrigPolynomials) {
  const int n = 32;
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = std::sin(3.0 * (-kPi + 2.0 * kPi * i / n)) + 0.5;
  const PeriodicSeries p(v, -kPi, 2.0 * kPi);
  EXPECT_NEAR(p(0.3), std::sin(0.9) + 0.5, 1e-13);
  EXPECT_NEAR(p.derivative(0.3, 1), 3.0 * std::cos(0.9), 1e-12);
  EXPECT_NEAR(p.derivative(0.3, 2), -9.0 * std::sin(0.9), 1e-11);
}

TEST(Numerics, LinearFitRecoversLine) {
  const auto [a, b] = linear_fit({0.0, 1.0, 2.0, 3.0}, {1.0, 3.0, 5.0, 7.0});
  EXPECT_NEAR(a, 1.0, 1e-14);
  EXPECT_NEAR(b, 2.0, 1e-14);
}

TEST(Numerics, SmoothStepLimits) {
  EXPECT_EQ(smooth_step(-0.1), 0.0);
  EXPECT_EQ(smooth_step(1.1), 1.0);
  EXPECT_NEAR(smooth_step(0.5), 0.5, 1e-14);
}

TEST(Expression, EvaluatesTheGrammar) {
  const Expression e("(1 - x1^2 - x2^2) * (4 + x2^2) + exp(0) * sin(0) - sqrt(4) / 2 + cos(t)");
  EXPECT_NEAR(e(0.5, 0.5, 0.0), 0.5 * 4.25 - 1.0 + 1.0, 1e-14);
  EXPECT_TRUE(e.uses("t"));
}

TEST(Expression, RejectsUnknownNames) {
  try {
    Expression e("system(1) + x1");
    FAIL() << "expected a config error";
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::Config);
  }
  EXPECT_THROW(Expression("x1 +"), Error);
  EXPECT_THROW(Expression("x3"), Error);
}

TEST(Expression, TaylorArithmeticMatchesDerivatives) {
  const Expression e("x1^3 * exp(x2)");
  const Jet j = e.eval(Jet::variable(1.5, 4), Jet(0.2, 4), Jet(0.0, 4));
  EXPECT_NEAR(j.derivative(1), 3.0 * 1.5 * 1.5 * std::exp(0.2), 1e-12);
  EXPECT_NEAR(j.derivative(3), 6.0 * std::exp(0.2), 1e-12);
}

TEST(Lanczos, BandSolverMatchesDenseEigenvalues) {
  const int n = 60, kd = 3;
  HermitianBand A(n, kd);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXcd D = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    A.add(i, i, 4.0 + 2.0 * u(rng));
    for (int d = 1; d <= kd && i + d < n; ++d) A.add(i + d, i, cplx(u(rng), u(rng)));
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (std::abs(i - j) <= kd) D(i, j) = A.get(i, j);
  EXPECT_LT((D - D.adjoint()).norm(), 1e-14);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(D);
  const LanczosResult r = lowest_eigs_band(A, 3, es.eigenvalues()(0) - 0.1, LanczosOptions{});
  ASSERT_TRUE(r.converged);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(r.values[i], es.eigenvalues()(i), 1e-10);
}

TEST(Lanczos, ReportsNonConvergence) {
  const int n = 40;
  HermitianBand A(n, 1);
  for (int i = 0; i < n; ++i) A.add(i, i, 1.0 + i);
  LanczosOptions o;
  o.max_steps = 2;
  o.check_every = 1;
  try {
    lowest_eigs_band(A, 3, 0.5, o);
    FAIL() << "expected a solver error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Solver);
  }
}

TEST(Compare, InsufficientRangeIsAnError) {
  std::vector<CampaignPoint> p{{0.2, 0.008, 0, 0, 1e-3, 1e-3, 1}, {0.15, 0.003, 0, 0, 1e-4, 1e-4, 1},
                               {0.1, 0.001, 0, 0, 1e-6, 1e-6, 1}};
  EXPECT_THROW(compare_report(p, 1.0, {}), Error);
  p.push_back({0.08, 0.0005, 0, 0, 1e-20, 1e-8, 1});  // below the floor, refused
  EXPECT_THROW(compare_report(p, 1.0, {}), Error);
}

TEST(Compare, RecoversDecayRateAndMinima) {
  std::vector<CampaignPoint> p;
  const double S = 1.3;
  for (double h = 0.08; h <= 0.2001; h += 0.01) p.push_back({h, h * h * h, 0, 0, 2.0 * std::exp(-S / h), std::exp(-S / h), 0});
  const CompareReport r = compare_report(p, S, {});
  EXPECT_NEAR(r.slope, S, 1e-10);
  EXPECT_NEAR(r.ratio_spread, 1.0, 1e-10);

  std::vector<CampaignPoint> q;
  for (int i = 0; i < 9; ++i) q.push_back({0.1 + 0.01 * i, 0, 0, 0, 1.0 + std::abs(i - 4.0), 1.0, i < 4 ? 1 : -1});
  const CompareReport rq = compare_report(q, 1.0, {0.1405});
  ASSERT_EQ(rq.measured_minima.size(), 1u);
  EXPECT_DOUBLE_EQ(rq.measured_minima[0], 0.14);
  EXPECT_NEAR(rq.node_offsets[0], 5e-4, 1e-12);
  ASSERT_EQ(rq.parity_flips.size(), 1u);
}

TEST(Config, MinimalConfigParses) {
  const RunConfig c = parse_config(R"({"curve": {"type": "circle"}, "field": "1 - x1^2 - x2^2",
                                       "hbar_grid": {"log_range": [0.001, 0.01, 3]}})");
  EXPECT_EQ(c.k, 1);
  ASSERT_EQ(c.hbar_grid.size(), 3u);
  EXPECT_NEAR(c.hbar_grid[1], std::sqrt(1e-5), 1e-15);
}

TEST(Config, SchemaViolationsAreConfigErrors) {
  const char* bad[] = {
      R"({"curve": {"type": "circle"}})",                                            // missing field
      R"({"curve": {"type": "circle"}, "field": "x1", "colour": 1})",              // unknown key
      R"({"curve": {"type": "circle", "r": 1}, "field": "x1"})",                   // unknown nested key
      R"({"curve": {"type": "square"}, "field": "x1"})",                           // unknown curve
      R"({"curve": {"type": "circle"}, "field": "x1", "grids": {"band": {"n": 1.5}}})",
      R"({"curve": {"type": "circle"}, "field": "x1", "stages": ["band", "plot"]})",
      R"({"curve": {"type": "circle"}, "field": "x1", "validate": {"measure": "peak"}})",
      R"({not json)",
  };
  for (const char* text : bad) {
    try {
      parse_config(text);
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config) << text;
    }
  }
}

TEST(Config, NumberListOverride) {
  const auto v = parse_number_list("0.001,2e-3, 0.004");
  ASSERT_EQ(v.size(), 3u);
  EXPECT_DOUBLE_EQ(v[1], 0.002);
  EXPECT_THROW(parse_number_list("0.1,abc"), Error);
}
