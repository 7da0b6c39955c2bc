#include "tunnelkit/pipeline.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "json.hpp"
#include "tunnelkit/errors.hpp"
#include "tunnelkit/planar.hpp"
#include "tunnelkit/strip.hpp"
#include "tunnelkit/version.hpp"

namespace tk {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::uint64_t fnv1a64(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Internal, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json cplx_json(cplx z) { return json::array({z.real(), z.imag()}); }

}  // namespace

std::string band_cache_key(int k, const BandOptions& o) {
  return "band|k=" + std::to_string(k) + "|T=" + num(o.grid.T) + "|n=" + std::to_string(o.grid.n) +
         "|levels=" + std::to_string(o.levels) + "|xi=" + num(o.xi_lo) + "," + num(o.xi_hi) +
         "|samples=" + std::to_string(o.n_samples) + "|taylor=" + std::to_string(o.taylor_order) +
         "|radius=" + num(o.contour_radius) + "|points=" + std::to_string(o.contour_points);
}

std::string geometry_cache_key(const CurveSpec& c, const FieldSpec& f, const GeometryOptions& o) {
  std::string curve;
  switch (c.kind) {
    case CurveSpec::Kind::Circle: curve = "circle:" + num(c.radius); break;
    case CurveSpec::Kind::Ellipse: curve = "ellipse:" + num(c.a) + "," + num(c.b); break;
    case CurveSpec::Kind::Parametric: curve = "parametric:" + c.x_expr + ";" + c.y_expr; break;
  }
  return "geometry|curve=" + curve + "|field=" + f.expression + "|k=" + std::to_string(f.k) +
         "|samples=" + std::to_string(o.n_samples) + "|jet=" + num(o.jet_step) + "|sym=" + num(o.symmetry_tol) +
         "|eps=" + num(o.variability_eps);
}

std::string band_to_json(const BandTable& t) {
  json j;
  j["k"] = t.k;
  j["xi_samples"] = t.xi_samples;
  j["nu1_values"] = t.nu1_values;
  j["nu2_values"] = t.nu2_values;
  j["xi0"] = t.xi0;
  j["nu0"] = t.nu0;
  j["nu0_dd"] = t.nu0_dd;
  j["taylor_coeffs"] = t.taylor_coeffs;
  j["taylor_radius"] = t.taylor_radius;
  j["contour_radius"] = t.contour_radius;
  j["taylor_imag_residual"] = t.taylor_imag_residual;
  j["grid"] = {{"T", t.grid.T}, {"n", t.grid.n}, {"levels", t.levels}};
  j["code_version"] = t.code_version;
  return j.dump();
}

BandTable band_from_json(const std::string& text) {
  const json j = json::parse(text);
  BandTable t;
  t.k = j.at("k").get<int>();
  t.xi_samples = j.at("xi_samples").get<std::vector<double>>();
  t.nu1_values = j.at("nu1_values").get<std::vector<double>>();
  t.nu2_values = j.at("nu2_values").get<std::vector<double>>();
  t.xi0 = j.at("xi0").get<double>();
  t.nu0 = j.at("nu0").get<double>();
  t.nu0_dd = j.at("nu0_dd").get<double>();
  t.taylor_coeffs = j.at("taylor_coeffs").get<std::vector<double>>();
  t.taylor_radius = j.at("taylor_radius").get<double>();
  t.contour_radius = j.at("contour_radius").get<double>();
  t.taylor_imag_residual = j.at("taylor_imag_residual").get<double>();
  t.grid.T = j.at("grid").at("T").get<double>();
  t.grid.n = j.at("grid").at("n").get<int>();
  t.levels = j.at("grid").at("levels").get<int>();
  t.code_version = j.at("code_version").get<std::string>();
  if (t.xi_samples.size() != t.nu1_values.size() || t.xi_samples.size() != t.nu2_values.size())
    throw Error(ErrorKind::Internal, "band table arrays disagree in length");
  return t;
}

std::string geometry_to_json(const GeometryProfile& p) {
  json j;
  j["k"] = p.k;
  j["L"] = p.L;
  j["s"] = p.s;
  json m = json::array();
  for (const auto& v : p.M) m.push_back(json::array({v[0], v[1]}));
  j["M"] = m;
  j["kappa"] = p.kappa;
  j["gamma"] = p.gamma;
  j["delta"] = p.delta;
  j["delta_tilde"] = p.delta_tilde;
  j["beta0"] = p.beta0;
  j["s_r"] = p.s_r;
  j["s_l"] = p.s_l;
  j["gamma0"] = p.gamma0;
  j["gamma_dd"] = p.gamma_dd;
  j["variability"] = p.variability;
  j["warnings"] = p.warnings;
  return j.dump();
}

GeometryProfile geometry_from_json(const std::string& text) {
  const json j = json::parse(text);
  GeometryProfile p;
  p.k = j.at("k").get<int>();
  p.L = j.at("L").get<double>();
  p.s = j.at("s").get<std::vector<double>>();
  for (const auto& v : j.at("M")) p.M.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  p.kappa = j.at("kappa").get<std::vector<double>>();
  p.gamma = j.at("gamma").get<std::vector<double>>();
  p.delta = j.at("delta").get<std::vector<double>>();
  p.delta_tilde = j.at("delta_tilde").get<std::vector<double>>();
  p.beta0 = j.at("beta0").get<double>();
  p.s_r = j.at("s_r").get<double>();
  p.s_l = j.at("s_l").get<double>();
  p.gamma0 = j.at("gamma0").get<double>();
  p.gamma_dd = j.at("gamma_dd").get<double>();
  p.variability = j.at("variability").get<double>();
  p.warnings = j.at("warnings").get<std::vector<std::string>>();
  const std::size_t n = p.s.size();
  if (n < 8 || p.M.size() != n || p.kappa.size() != n || p.gamma.size() != n || p.delta.size() != n ||
      p.delta_tilde.size() != n)
    throw Error(ErrorKind::Internal, "geometry profile arrays disagree in length");
  p.rebuild();
  return p;
}

const char* cache_state_name(CacheState s) {
  switch (s) {
    case CacheState::Disabled: return "disabled";
    case CacheState::Miss: return "miss";
    case CacheState::Hit: return "hit";
    case CacheState::Corrupted: return "corrupted";
    case CacheState::VersionMismatch: return "version_mismatch";
  }
  return "miss";
}

ArtifactCache::ArtifactCache(std::string dir) : dir_(std::move(dir)) {
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create cache directory " + dir_ + ": " + ec.message());
  const std::string lock = (fs::path(dir_) / ".lock").string();
  lock_fd_ = ::open(lock.c_str(), O_RDWR | O_CREAT, 0644);
  if (lock_fd_ < 0 || ::flock(lock_fd_, LOCK_EX) != 0)
    throw Error(ErrorKind::Config, "cannot lock cache directory " + dir_);
}

ArtifactCache::~ArtifactCache() {
  if (lock_fd_ >= 0) {
    ::flock(lock_fd_, LOCK_UN);
    ::close(lock_fd_);
  }
}

std::string ArtifactCache::path(const std::string& kind, const std::string& key) const {
  return (fs::path(dir_) / (kind + "-" + hex64(fnv1a64(key)) + ".json")).string();
}

std::optional<std::string> ArtifactCache::load(const std::string& kind, const std::string& key,
                                               CacheState& state) const {
  const std::string p = path(kind, key);
  state = CacheState::Miss;
  if (!fs::exists(p)) return std::nullopt;
  try {
    const json j = json::parse(read_file(p));
    if (j.at("code_version").get<std::string>() != kVersion) {
      state = CacheState::VersionMismatch;
      return std::nullopt;
    }
    if (j.at("key").get<std::string>() != key) return std::nullopt;  // hash collision
    state = CacheState::Hit;
    return j.at("payload").get<std::string>();
  } catch (const std::exception&) {
    state = CacheState::Corrupted;
    return std::nullopt;
  }
}

void ArtifactCache::store(const std::string& kind, const std::string& key, const std::string& payload) const {
  const json j{{"code_version", kVersion}, {"key", key}, {"payload", payload}};
  const std::string p = path(kind, key);
  const std::string tmp = p + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Config, "cannot write cache file " + tmp);
    out << j.dump();
  }
  fs::rename(tmp, p);
}

Pipeline::Pipeline(RunConfig cfg) : cfg_(std::move(cfg)) {
  if (!cfg_.cache_dir.empty()) cache_ = std::make_unique<ArtifactCache>(cfg_.cache_dir);
}

Pipeline::~Pipeline() = default;

void Pipeline::notice(const std::string& msg) {
  notices_.push_back(msg);
  std::cerr << "tunnelkit: " << msg << "\n";
}

void Pipeline::write_file(const std::string& name, const std::string& content) const {
  std::error_code ec;
  fs::create_directories(cfg_.output_dir, ec);
  if (ec) throw Error(ErrorKind::Config, "cannot create output directory " + cfg_.output_dir);
  const std::string p = (fs::path(cfg_.output_dir) / name).string();
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + p);
  out << content;
}

namespace {

// On a miss the loader reports why, then the artifact is rebuilt and stored.
template <class T, class Build, class FromJson, class ToJson>
T cached(ArtifactCache* cache, const std::string& kind, const std::string& key, CacheState& state, Build build,
         FromJson from_json, ToJson to_json, const std::function<void(const std::string&)>& notice) {
  if (!cache) {
    state = CacheState::Disabled;
    return build();
  }
  if (auto payload = cache->load(kind, key, state)) {
    try {
      return from_json(*payload);
    } catch (const std::exception&) {
      state = CacheState::Corrupted;
    }
  }
  if (state == CacheState::Corrupted) notice("warning: corrupted " + kind + " cache file, recomputing");
  if (state == CacheState::VersionMismatch) notice("notice: " + kind + " cache written by another version, recomputing");
  T value = build();
  cache->store(kind, key, to_json(value));
  return value;
}

}  // namespace

const BandTable& Pipeline::band() {
  if (!band_) {
    band_ = cached<BandTable>(
        cache_.get(), "band", band_cache_key(cfg_.k, cfg_.band), band_state_,
        [&] { return build_band_table(cfg_.k, cfg_.band); }, band_from_json, band_to_json,
        [&](const std::string& m) { notice(m); });
  }
  return *band_;
}

const GeometryProfile& Pipeline::geometry() {
  if (!geometry_) {
    FieldSpec field = cfg_.field;
    field.k = cfg_.k;
    geometry_ = cached<GeometryProfile>(
        cache_.get(), "geometry", geometry_cache_key(cfg_.curve, field, cfg_.geometry), geometry_state_,
        [&] { return build_geometry(cfg_.curve, field, cfg_.geometry); }, geometry_from_json, geometry_to_json,
        [&](const std::string& m) { notice(m); });
    for (const auto& w : geometry_->warnings) notice("warning: " + w);
  }
  return *geometry_;
}

const EikonalSolution& Pipeline::right() {
  if (!right_) right_ = solve_eikonal(Side::Right, geometry(), band(), cfg_.eikonal);
  return *right_;
}

const EikonalSolution& Pipeline::left() {
  if (!left_) left_ = solve_eikonal(Side::Left, geometry(), band(), cfg_.eikonal);
  return *left_;
}

const AgmonDistances& Pipeline::distances() {
  if (!distances_) {
    distances_ = agmon_distances(right(), left(), geometry());
    for (const auto& w : distances_->warnings) notice("warning: " + w);
  }
  return *distances_;
}

const WkbConstants& Pipeline::wkb() {
  if (!wkb_) {
    const BandTable& t = band();
    if (!family_) family_ = std::make_unique<MontgomeryFamily>(t.k, t.grid, t.levels);
    wkb_ = compute_wkb(geometry(), t, *family_, right(), left(), cfg_.wkb);
    for (const auto& w : wkb_->warnings) notice("warning: " + w);
  }
  return *wkb_;
}

const TunnelingConstants& Pipeline::constants() {
  if (!constants_) constants_ = collect_constants(geometry(), band(), wkb(), distances(), right());
  return *constants_;
}

void Pipeline::run_stage(const std::string& stage) {
  if (stage == "band") {
    const BandTable& t = band();
    std::ostringstream os;
    os << "# xi: fiber momentum xi; nu1, nu2: lowest two eigenvalues nu_1(xi), nu_2(xi) of the fiber operator\n";
    os << "xi,nu1,nu2\n";
    for (std::size_t i = 0; i < t.xi_samples.size(); ++i)
      os << num(t.xi_samples[i]) << "," << num(t.nu1_values[i]) << "," << num(t.nu2_values[i]) << "\n";
    write_file("band.csv", os.str());
    json j{{"k", t.k},
           {"xi0", t.xi0},
           {"nu0", t.nu0},
           {"nu0_dd", t.nu0_dd},
           {"taylor_radius", t.taylor_radius},
           {"taylor_coeffs", t.taylor_coeffs},
           {"cache", cache_state_name(band_state_)}};
    write_file("band.json", j.dump(2) + "\n");
  } else if (stage == "geometry") {
    const GeometryProfile& p = geometry();
    write_file("geometry.csv", profile_csv(p));
    json j{{"k", p.k},           {"L", p.L},         {"beta0", p.beta0},
           {"s_r", p.s_r},       {"s_l", p.s_l},     {"gamma0", p.gamma0},
           {"gamma_dd", p.gamma_dd}, {"variability", p.variability}, {"warnings", p.warnings},
           {"cache", cache_state_name(geometry_state_)}};
    write_file("geometry.json", j.dump(2) + "\n");
  } else if (stage == "eikonal") {
    const AgmonDistances& d = distances();
    write_file("eikonal.csv", eikonal_csv(right(), left(), d));
    json j{{"S_u", d.S_u},
           {"S_d", d.S_d},
           {"S", d.S},
           {"max_residual_right", right().max_residual},
           {"max_residual_left", left().max_residual},
           {"continuity_defect", d.continuity_defect},
           {"warnings", d.warnings}};
    write_file("eikonal.json", j.dump(2) + "\n");
  } else if (stage == "wkb") {
    const WkbConstants& c = wkb();
    write_file("wkb.csv", wkb_csv(c));
    json j{{"zeta", c.zeta},       {"delta10", c.delta10},   {"delta11", c.delta11},
           {"K0", c.K0},           {"A_u", c.A_u},           {"A_d", c.A_d},
           {"alpha0", c.alpha0},   {"alpha_0", c.alpha_0},   {"alpha_mL", c.alpha_mL},
           {"R_at_well", c.R_at_well}, {"V0", cplx_json(c.V0)}, {"VL", cplx_json(c.VL)},
           {"warnings", c.warnings}};
    write_file("wkb.json", j.dump(2) + "\n");
  } else if (stage == "predict") {
    if (cfg_.hbar_grid.empty()) throw Error(ErrorKind::Config, "predict needs a non-empty hbar_grid");
    std::vector<double> grid = cfg_.hbar_grid;
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    const TunnelingConstants& c = constants();
    const GapScan scan = gap_scan(grid, c);
    write_file("predict.csv", scan_csv(scan, c));
    json j{{"k", c.k},           {"L", c.L},         {"beta0", c.beta0},   {"gamma0", c.gamma0},
           {"xi0", c.xi0},       {"nu0", c.nu0},     {"nu0_dd", c.nu0_dd}, {"zeta", c.zeta},
           {"delta10", c.delta10}, {"delta11", c.delta11}, {"S_u", c.S_u}, {"S_d", c.S_d},
           {"A_u", c.A_u},       {"A_d", c.A_d},     {"alpha0", c.alpha0}, {"g_mL", c.g_mL},
           {"V0", cplx_json(c.V0)}, {"VL", cplx_json(c.VL)}, {"symmetric", scan.symmetric},
           {"nodes_hbar", scan.nodes}, {"nodes_printed_hbar", scan.nodes_printed}};
    write_file("predict.json", j.dump(2) + "\n");
  } else if (stage == "validate") {
    const GeometryProfile& p = geometry();
    const BandTable& t = band();
    const WkbConstants& w = wkb();
    const TunnelingConstants& c = constants();
    const int k = cfg_.k;
    const bool envelope = cfg_.validate.measure == "envelope";
    std::vector<double> hs = cfg_.validate.h;
    std::sort(hs.begin(), hs.end());
    if (envelope && std::abs(c.S_u - c.S_d) > 1e-6 * c.S_u)
      throw Error(ErrorKind::Config, "the envelope measure needs a symmetric curve (S_u = S_d)");

    std::vector<CampaignPoint> pts;
    double scale = 0.0;
    for (double h : hs) {
      StripDiscretization disc = cfg_.strip;
      disc.h = h;
      disc.flux_offset.reset();
      const DirectSpectrum s = double_well_direct(p, t.xi0, w.delta10, disc, 2);
      const double hbar = std::pow(h, k + 2.0);
      const SplittingPrediction pred = interaction_term(hbar, c);
      CampaignPoint pt;
      pt.h = h;
      pt.hbar = hbar;
      pt.nu1 = s.eigenvalues[0];
      pt.nu2 = s.eigenvalues[1];
      pt.parity = s.parity[0];
      pt.gap_direct = s.eigenvalues[1] - s.eigenvalues[0];
      pt.gap_pred = pred.gap_nu;
      if (envelope) {
        // a quarter flux quantum turns cos into sin in the interference factor
        disc.flux_offset = p.beta0 * std::pow(h, -k - 1.0) + h * kPi / (2.0 * p.L);
        const DirectSpectrum q = double_well_direct(p, t.xi0, w.delta10, disc, 2);
        pt.gap_direct = std::hypot(pt.gap_direct, q.eigenvalues[1] - q.eigenvalues[0]);
        pt.gap_pred = 4.0 * std::abs(pred.up_term) / std::pow(hbar, (2.0 * k + 2.0) / (k + 2.0));
      }
      scale = std::max(scale, std::abs(pt.nu2));
      pts.push_back(pt);
    }
    write_file("validate.csv", campaign_csv(pts));

    std::vector<double> grid;
    for (double h : hs) grid.push_back(std::pow(h, k + 2.0));
    std::vector<double> nodes_h;
    if (!envelope && grid.size() >= 2 && grid.front() < grid.back())
      for (double z : gap_scan(grid, c).nodes) nodes_h.push_back(std::pow(z, 1.0 / (k + 2.0)));
    const CompareReport rep = compare_report(pts, c.S_u < c.S_d ? c.S_u : c.S_d, nodes_h,
                                             cfg_.tolerances.gap_floor * scale);
    json j{{"measure", cfg_.validate.measure},
           {"usable", rep.usable},
           {"slope", rep.slope},
           {"S", rep.S},
           {"slope_rel_err", rep.slope_rel_err},
           {"ratio_min", rep.ratio_min},
           {"ratio_max", rep.ratio_max},
           {"ratio_spread", rep.ratio_spread},
           {"ratio_trend", rep.ratio_trend},
           {"measured_minima_h", rep.measured_minima},
           {"node_offsets_h", rep.node_offsets},
           {"predicted_nodes_h", nodes_h},
           {"parity_flips_h", rep.parity_flips}};

    if (!cfg_.validate.planar_hbar.empty()) {
      std::ostringstream os;
      os << "# hbar: semiclassical parameter; lambda1, lambda2: lowest eigenvalues of the plane operator [energy]; "
            "scaled1 = lambda1 / hbar^((2k+2)/(k+2)); leading = gamma0^(2/(k+2)) nu0\n";
      os << "hbar,lambda1,lambda2,scaled1,leading,rel_err\n";
      FieldSpec field = cfg_.field;
      field.k = k;
      for (double hb : cfg_.validate.planar_hbar) {
        const PlanarSpectrum ps = planar_direct(field, cfg_.curve, hb, cfg_.planar);
        const double lead = std::pow(c.gamma0, 2.0 / (k + 2.0)) * c.nu0;
        os << num(hb) << "," << num(ps.eigenvalues[0]) << "," << num(ps.eigenvalues[1]) << ","
           << num(ps.scaled[0]) << "," << num(lead) << "," << num(std::abs(ps.scaled[0] - lead) / lead) << "\n";
      }
      write_file("planar.csv", os.str());
    }
    write_file("validate.json", j.dump(2) + "\n");
  } else {
    throw Error(ErrorKind::Config, "unknown stage '" + stage + "'");
  }
}

void Pipeline::run(const std::vector<std::string>& stages) {
  for (const auto& s : stages) run_stage(s);
}

std::vector<std::string> stages_for(const std::string& sub) {
  if (sub == "all") return {"band", "geometry", "eikonal", "wkb", "predict", "validate"};
  if (sub == "band" || sub == "geometry" || sub == "eikonal" || sub == "wkb" || sub == "predict" ||
      sub == "validate")
    return {sub};
  throw Error(ErrorKind::Config, "unknown subcommand '" + sub + "'");
}

}  // namespace tk
