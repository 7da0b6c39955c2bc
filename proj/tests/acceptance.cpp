// Acceptance run: one PASS/FAIL line per criterion. Usage: acceptance [criterion ...]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "tunnelkit/band.hpp"
#include "tunnelkit/compare.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/hermite_oracle.hpp"
#include "tunnelkit/numerics.hpp"
#include "tunnelkit/planar.hpp"
#include "tunnelkit/strip.hpp"
#include "tunnelkit/tunneling.hpp"
#include "tunnelkit/wkb.hpp"

using namespace tk;

namespace {

const char* kField = "(1 - x1^2 - x2^2) * (4 + x2^2)";

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// Corpus pipeline shared by several criteria.
struct Corpus {
  BandOptions band_opt;
  BandTable band;
  GeometryProfile geom;
  EikonalSolution right, left;
  AgmonDistances dist;
  std::unique_ptr<MontgomeryFamily> family;
  WkbConstants wkb;
  TunnelingConstants c;
};

Corpus& corpus() {
  static std::unique_ptr<Corpus> cp;
  if (!cp) {
    cp = std::make_unique<Corpus>();
    Corpus& c = *cp;
    c.band = build_band_table(1, c.band_opt);
    c.geom = build_geometry(CurveSpec::circle(1.0), FieldSpec{kField, 1}, GeometryOptions{});
    c.right = solve_eikonal(Side::Right, c.geom, c.band);
    c.left = solve_eikonal(Side::Left, c.geom, c.band);
    c.dist = agmon_distances(c.right, c.left, c.geom);
    c.family = std::make_unique<MontgomeryFamily>(1, c.band.grid, c.band.levels);
    c.wkb = compute_wkb(c.geom, c.band, *c.family, c.right, c.left);
    c.c = collect_constants(c.geom, c.band, c.wkb, c.dist, c.right);
  }
  return *cp;
}

Outcome criterion1() {
  std::ostringstream os;
  bool ok = true;
  for (int k = 1; k <= 3; ++k) {
    BandOptions o;
    o.n_samples = 41;
    const BandTable t = build_band_table(k, o);
    const HermiteOracle oracle{k, 140, 1.0};
    const auto m = oracle.minimum(o.xi_lo, o.xi_hi);
    auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
    // xi0 vanishes for even k, so its agreement is absolute there
    const double e_xi = k % 2 == 0 ? std::abs(t.xi0 - m.xi0) : rel(t.xi0, m.xi0);
    const double e_nu = rel(t.nu0, m.nu0), e_dd = rel(t.nu0_dd, m.nu0_dd);
    const bool kok = e_xi <= 1e-7 && e_nu <= 1e-7 && e_dd <= 1e-7 && (k != 2 || std::abs(t.xi0) <= 1e-8);
    ok = ok && kok;
    char buf[200];
    std::snprintf(buf, sizeof buf, "k=%d xi0 %.10f err %.1e, nu0 err %.1e, nu0'' err %.1e; ", k, t.xi0, e_xi, e_nu,
                  e_dd);
    os << buf;
  }
  return {ok, os.str()};
}

Outcome criterion2() {
  const MontgomeryFamily fam(1, Grid1D{8.0, 1601}, 3);
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> real_xi(-1.0, 1.5), im(-0.2, 0.2), re(0.2, 0.5);
  std::vector<cplx> points;
  for (int i = 0; i < 20; ++i) points.emplace_back(real_xi(rng), 0.0);
  for (int i = 0; i < 5; ++i) points.emplace_back(re(rng), im(rng));
  double worst = 0.0;
  for (cplx xi : points) {
    const cplx fh = fam.moments(xi).fh;
    // central differences at two steps, Richardson-combined
    auto cd = [&](double e) { return (fam.nu_complex(xi + e) - fam.nu_complex(xi - e)) / (2.0 * e); };
    const cplx d = richardson<cplx>({cd(2e-3), cd(1e-3)}, 2.0, 2.0);
    worst = std::max(worst, std::abs(fh - d) / std::max(1.0, std::abs(d)));
  }
  return {worst <= 1e-6, "max relative mismatch " + fmt("%.2e", worst) + " over 20 real and 5 complex xi"};
}

Outcome criterion3() {
  Corpus& c = corpus();
  const double res = std::max(c.right.max_residual, c.left.max_residual) / c.band.nu0;
  const double lemma = std::sqrt(2.0 / 3.0 * c.geom.gamma_dd * c.band.nu0 / (c.geom.gamma0 * c.band.nu0_dd));
  const double slope = c.right.phi_prime[c.right.well_index].real();
  const double err = std::abs(slope - lemma) / lemma;
  char buf[200];
  std::snprintf(buf, sizeof buf, "residual/nu0 %.2e, phi'(s_r) %.10f vs closed form %.10f (rel %.1e)", res, slope,
                lemma, err);
  return {res <= 1e-10 && err <= 1e-4, buf};
}

Outcome criterion4() {
  Corpus& c = corpus();
  const double q = 1.0 / 3.0;
  const double x0 = c.geom.s_r, p0 = std::pow(c.geom.gamma0, q) * c.band.xi0;
  auto mu = [&](double x, double p) {
    const double g = c.geom.gamma_at(x);
    return std::pow(g, 2.0 * q) * c.family->nu(std::pow(g, -q) * p);
  };
  const double d = 0.02;
  const double w1[5] = {1.0 / 12, -8.0 / 12, 0.0, 8.0 / 12, -1.0 / 12};
  const double w2[5] = {-1.0 / 12, 16.0 / 12, -30.0 / 12, 16.0 / 12, -1.0 / 12};
  double hxx = 0.0, hpp = 0.0, hxp = 0.0;
  for (int i = 0; i < 5; ++i) {
    hxx += w2[i] * mu(x0 + (i - 2) * d, p0) / (d * d);
    hpp += w2[i] * mu(x0, p0 + (i - 2) * d) / (d * d);
    for (int j = 0; j < 5; ++j) hxp += w1[i] * w1[j] * mu(x0 + (i - 2) * d, p0 + (j - 2) * d) / (d * d);
  }
  const Mat2 H = band_hessian(c.band, c.geom.gamma0, c.geom.gamma_dd, c.geom.s_r);
  const double e11 = std::abs(hxx - H[0][0]) / H[0][0], e22 = std::abs(hpp - H[1][1]) / H[1][1];
  char buf[240];
  std::snprintf(buf, sizeof buf, "H11 %.9f vs %.9f (rel %.1e), H22 %.9f vs %.9f (rel %.1e), off-diagonal %.1e", hxx,
                H[0][0], e11, hpp, H[1][1], e22, std::abs(hxp));
  return {e11 <= 1e-5 && e22 <= 1e-5 && std::abs(hxp) < 1e-7 && H[0][1] == 0.0 && H[1][0] == 0.0, buf};
}

struct SingleFit {
  double slope_fit = 0.0;   // delta11 estimate with the intercept pinned at delta10
  double resid_slope = 0.0;  // log-log slope of nu1 - delta10 - delta11 h
  std::vector<double> nu1, nu2;
};

SingleFit single_well_fit(ModelOrder order, const std::vector<double>& hs) {
  Corpus& c = corpus();
  SingleFit f;
  std::vector<double> x, y, lx, ly;
  for (double h : hs) {
    StripDiscretization d;
    d.h = h;
    d.n_sigma = 64;
    d.n_tau = 160;
    d.model_order = order;
    const DirectSpectrum s = single_well_direct(c.geom, Side::Right, c.band.xi0, c.wkb.delta10, d);
    f.nu1.push_back(s.eigenvalues[0]);
    f.nu2.push_back(s.eigenvalues[1]);
    x.push_back(h);
    y.push_back((s.eigenvalues[0] - c.wkb.delta10) / h);
  }
  f.slope_fit = linear_fit(x, y).first;
  for (std::size_t i = 0; i < hs.size(); ++i) {
    lx.push_back(std::log(hs[i]));
    ly.push_back(std::log(std::abs(f.nu1[i] - c.wkb.delta10 - c.wkb.delta11 * hs[i])));
  }
  f.resid_slope = linear_fit(lx, ly).second;
  return f;
}

Outcome criterion5() {
  Corpus& c = corpus();
  const std::vector<double> hs{0.3, 0.2, 0.15, 0.1};
  const SingleFit lead = single_well_fit(ModelOrder::Leading, hs);
  const double err = std::abs(lead.slope_fit - c.wkb.delta11) / c.wkb.delta11;
  const double ladder = lead.nu2[3] - lead.nu1[3], ladder_pred = c.band.nu0_dd * c.wkb.zeta * hs[3];
  const SingleFit full = single_well_fit(ModelOrder::WithDeltaTilde, hs);
  char buf[400];
  std::snprintf(buf, sizeof buf,
                "leading model: delta11 fit %.5f vs %.5f (rel %.1e), residual slope %.2f; ladder at h=0.1 %.5f vs %.5f "
                "(rel %.1e); diagnostic delta_tilde model: fit %.5f (rel %.1e), residual slope %.2f",
                lead.slope_fit, c.wkb.delta11, err, lead.resid_slope, ladder, ladder_pred,
                std::abs(ladder - ladder_pred) / ladder_pred, full.slope_fit,
                std::abs(full.slope_fit - c.wkb.delta11) / c.wkb.delta11, full.resid_slope);
  return {err <= 0.05 && lead.resid_slope >= 1.7, buf};
}

Outcome criterion6() {
  Corpus& c = corpus();
  std::vector<CampaignPoint> env, raw;
  for (double h : {0.2, 0.18, 0.16, 0.14, 0.12, 0.1, 0.09, 0.08}) {
    StripDiscretization d;
    d.h = h;
    d.n_sigma = 48;
    d.n_tau = 140;
    const DirectSpectrum a = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, d, 2);
    d.flux_offset = c.geom.beta0 * std::pow(h, -2.0) + h * kPi / (2.0 * c.geom.L);
    const DirectSpectrum b = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, d, 2);
    const double hbar = h * h * h;
    const SplittingPrediction p = interaction_term(hbar, c.c);
    const double g0 = a.eigenvalues[1] - a.eigenvalues[0], g1 = b.eigenvalues[1] - b.eigenvalues[0];
    env.push_back({h, hbar, a.eigenvalues[0], a.eigenvalues[1], std::hypot(g0, g1),
                   4.0 * std::abs(p.up_term) / std::pow(hbar, 4.0 / 3.0), a.parity[0]});
    raw.push_back({h, hbar, a.eigenvalues[0], a.eigenvalues[1], g0, p.gap_nu, a.parity[0]});
  }
  const CompareReport r = compare_report(env, c.dist.S, {}, 1e-12 * 2.5);
  const CompareReport rr = compare_report(raw, c.dist.S, {}, 1e-12 * 2.5);
  char buf[360];
  std::snprintf(buf, sizeof buf,
                "flux envelope: slope %.4f vs S %.4f (rel %.1e), ratio range [%.3f, %.3f] spread %.3f; diagnostic "
                "raw gap at the physical flux: slope %.4f (rel %.1e), ratio spread %.2f",
                r.slope, r.S, r.slope_rel_err, r.ratio_min, r.ratio_max, r.ratio_spread, rr.slope, rr.slope_rel_err,
                rr.ratio_spread);
  return {r.slope_rel_err <= 0.10 && r.ratio_spread < 2.0, buf};
}

Outcome criterion7() {
  Corpus& c = corpus();
  const double a = 0.19, b = 0.195, step = 1e-4;
  const int n = static_cast<int>(std::lround((b - a) / step));
  std::vector<CampaignPoint> pts;
  std::vector<double> hbar_grid;
  for (int i = 0; i <= n; ++i) {
    const double h = a + step * i;
    StripDiscretization d;
    d.h = h;
    d.n_sigma = 32;
    d.n_tau = 120;
    const DirectSpectrum s = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, d, 2);
    const double hbar = h * h * h;
    pts.push_back({h, hbar, s.eigenvalues[0], s.eigenvalues[1], s.eigenvalues[1] - s.eigenvalues[0],
                   interaction_term(hbar, c.c).gap_nu, s.parity[0]});
    hbar_grid.push_back(hbar);
  }
  const GapScan scan = gap_scan(hbar_grid, c.c);
  std::vector<double> nodes, printed;
  for (double z : scan.nodes) nodes.push_back(std::cbrt(z));
  for (double z : scan.nodes_printed) printed.push_back(std::cbrt(z));
  const CompareReport r = compare_report(pts, c.dist.S, nodes, 1e-12 * 2.5);

  bool ok = !r.measured_minima.empty();
  int flips = 0;
  double worst = 0.0, worst_printed = 0.0;
  for (std::size_t m = 0; m < r.measured_minima.size(); ++m) {
    worst = std::max(worst, r.node_offsets[m]);
    double bp = INFINITY;
    for (double z : printed) bp = std::min(bp, std::abs(z - r.measured_minima[m]));
    worst_printed = std::max(worst_printed, bp);
    const auto it = std::find_if(pts.begin(), pts.end(), [&](const auto& p) { return p.h == r.measured_minima[m]; });
    const std::size_t i = static_cast<std::size_t>(it - pts.begin());
    const bool flip = i > 0 && i + 1 < pts.size() && pts[i - 1].parity != pts[i + 1].parity;
    flips += flip;
    ok = ok && r.node_offsets[m] <= step * (1.0 + 1e-9) && flip;
  }
  char buf[360];
  std::snprintf(buf, sizeof buf,
                "%zu gap minima in h in [0.19, 0.195] (grid %.0e), %zu predicted nodes, worst offset %.2e, parity flips "
                "at %d of them; diagnostic: nearest zeros of the literal cos f are up to %.2e away",
                r.measured_minima.size(), step, nodes.size(), worst, flips, worst_printed);
  return {ok, buf};
}

Outcome criterion8() {
  Corpus& c = corpus();
  PlanarOptions o;
  o.dx = 0.01;
  const PlanarSpectrum s = planar_direct(FieldSpec{kField, 1}, CurveSpec::circle(1.0), 0.01, o);
  const double lead = std::pow(c.geom.gamma0, 2.0 / 3.0) * c.band.nu0;
  const double err = std::abs(s.scaled[0] - lead) / lead;
  const AsymptoticEnergy two = leading_asymptotics(0.01, 1, c.c, c.geom.gamma_dd, true);
  char buf[260];
  std::snprintf(buf, sizeof buf,
                "lambda1/hbar^(4/3) = %.5f vs gamma0^(2/3) nu0 = %.5f (rel %.1e, %d unknowns); two-term value %.5f",
                s.scaled[0], lead, err, s.unknowns, two.lambda_n_two_term / std::pow(0.01, 4.0 / 3.0));
  return {err <= 0.15, buf};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome criterion9() {
  Corpus& c = corpus();
  std::ostringstream os;
  bool ok = true;

  // byte-identical CLI reruns: cold cache, then warm cache
  namespace fs = std::filesystem;
  const fs::path tmp = fs::temp_directory_path() / ("tunnelkit-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  const std::string cfg = (tmp / "run.json").string();
  {
    std::ofstream out(cfg);
    out << R"({"k": 1, "curve": {"type": "circle", "radius": 1.0}, "field": ")" << kField
        << R"(", "grids": {"band": {"samples": 31}}, "hbar_grid": {"log_range": [0.001, 0.008, 60]}, "cache_dir": ")"
        << (tmp / "cache").string() << "\"}";
  }
  bool same = true;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const fs::path out = tmp / ("out" + std::to_string(run));
    const std::string cmd = std::string(TUNNELKIT_CLI) + " all --stages band,geometry,eikonal,predict --config " + cfg +
                            " --out " + out.string() + " 2> /dev/null";
    if (std::system(cmd.c_str()) != 0) {
      same = false;
      break;
    }
    std::string all;
    for (const char* f : {"band.csv", "geometry.csv", "eikonal.csv", "predict.csv"}) all += slurp(out / f);
    if (run == 0) first = all;
    else same = same && all == first && !all.empty();
  }
  fs::remove_all(tmp);
  ok = ok && same;
  os << "CLI reruns byte-identical: " << (same ? "yes" : "no");

  // in-process solver determinism
  StripDiscretization d;
  d.h = 0.2;
  d.n_sigma = 32;
  d.n_tau = 120;
  const DirectSpectrum s1 = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, d, 2);
  const DirectSpectrum s2 = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, d, 2);
  const bool det = s1.eigenvalues == s2.eigenvalues;
  ok = ok && det;
  os << "; strip solve repeat identical: " << (det ? "yes" : "no");

  // geometry under a half-turn of curve and field
  const FieldSpec rf{"(1 - x1^2/4 - x2^2) * (4 + x2 + x2^2)", 1};
  const FieldSpec rf_rot{"(1 - x1^2/4 - x2^2) * (4 - x2 + x2^2)", 1};
  const GeometryProfile g0 = build_geometry(CurveSpec::parametric("2*cos(t)", "sin(t)"), rf, GeometryOptions{});
  const GeometryProfile g1 = build_geometry(CurveSpec::parametric("-2*cos(t)", "-sin(t)"), rf_rot, GeometryOptions{});
  const double geo = std::max({std::abs(g0.L - g1.L), std::abs(g0.beta0 - g1.beta0), std::abs(g0.gamma0 - g1.gamma0),
                               std::abs(g0.gamma_dd - g1.gamma_dd)});
  ok = ok && geo <= 1e-8;
  os << "; geometry half-turn defect " << fmt("%.1e", geo);

  // planar: polynomial gauge and quarter-turn rotation
  PlanarOptions po;
  po.dx = 0.02;
  const FieldSpec pf{kField, 1};
  const PlanarSpectrum p0 = planar_direct(pf, CurveSpec::circle(1.0), 0.05, po);
  PlanarOptions pg = po;
  pg.gauge_chi = "0.3*x1^3 - 0.7*x1*x2^2 + 1.1*x2";
  const PlanarSpectrum p1 = planar_direct(pf, CurveSpec::circle(1.0), 0.05, pg);
  PlanarOptions pr = po;
  pr.rotation = kPi / 2.0;
  const PlanarSpectrum p2 = planar_direct(pf, CurveSpec::circle(1.0), 0.05, pr);
  double gauge = 0.0, rot = 0.0;
  for (int i = 0; i < 2; ++i) {
    gauge = std::max(gauge, std::abs(p1.eigenvalues[i] - p0.eigenvalues[i]) / p0.eigenvalues[i]);
    rot = std::max(rot, std::abs(p2.eigenvalues[i] - p0.eigenvalues[i]) / p0.eigenvalues[i]);
  }
  ok = ok && gauge <= 1e-8 && rot <= 1e-8;
  os << "; planar gauge change " << fmt("%.1e", gauge) << ", quarter turn " << fmt("%.1e", rot);

  // strip: integer flux shift and sigma translation with the matching phase
  const StripCoefficients base = coefficients_from_profile(c.geom);
  StripDiscretization e = d;
  e.flux_offset = c.geom.beta0 * std::pow(d.h, -2.0) + 3.0 * d.h * kPi / c.geom.L;
  const DirectSpectrum s3 = double_well_direct(c.geom, c.band.xi0, c.wkb.delta10, e, 2);
  const double integer_gauge = std::max(std::abs(s3.eigenvalues[0] - s1.eigenvalues[0]),
                                        std::abs(s3.eigenvalues[1] - s1.eigenvalues[1]));
  StripCoefficients shifted = base;
  const double a = 0.37;
  shifted.center += a;
  shifted.gamma = [g = base.gamma, a](double s) { return g(s - a); };
  shifted.delta_tilde = [g = base.delta_tilde, a](double s) { return g(s - a); };
  shifted.kappa = [g = base.kappa, a](double s) { return g(s - a); };
  StripDiscretization ds = d;
  ds.use_sectors = false;
  const DirectSpectrum t0 = lowest_eigs_hermitian(StripOperator(base, ds, c.band.xi0), 2, c.wkb.delta10 - 0.02);
  const DirectSpectrum t1 = lowest_eigs_hermitian(StripOperator(shifted, ds, c.band.xi0), 2, c.wkb.delta10 - 0.02);
  const double translate = std::max(std::abs(t1.eigenvalues[0] - t0.eigenvalues[0]),
                                    std::abs(t1.eigenvalues[1] - t0.eigenvalues[1]));
  ok = ok && integer_gauge <= 1e-10 && translate <= 1e-10;
  os << "; strip integer gauge " << fmt("%.1e", integer_gauge) << ", sigma translation " << fmt("%.1e", translate);
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::function<Outcome()>> all{{1, criterion1}, {2, criterion2}, {3, criterion3},
                                                    {4, criterion4}, {5, criterion5}, {6, criterion6},
                                                    {7, criterion7}, {8, criterion8}, {9, criterion9}};
  std::set<int> pick;
  for (int i = 1; i < argc; ++i) pick.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& [id, fn] : all) {
    if (!pick.empty() && !pick.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", dt, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
