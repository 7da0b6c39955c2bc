#include "tunnelkit/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "tunnelkit/errors.hpp"

namespace tk {
namespace {

using json = nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& msg) {
  throw Error(ErrorKind::Config, "schema: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) schema_error(path, "expected a table");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items())
    if (!ok.count(key)) schema_error(path, "unknown key '" + key + "'");
}

double get_number(const json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number()) schema_error(path + "." + key, "expected a number");
  return v.get<double>();
}

int get_int(const json& obj, const char* key, const std::string& path, int fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) schema_error(path + "." + key, "expected an integer");
  return v.get<int>();
}

std::string get_string(const json& obj, const char* key, const std::string& path, const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

bool get_bool(const json& obj, const char* key, const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  const auto& v = obj.at(key);
  if (!v.is_boolean()) schema_error(path + "." + key, "expected true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const json& v, const std::string& path) {
  if (!v.is_array()) schema_error(path, "expected a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) schema_error(path, "expected a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

CurveSpec parse_curve(const json& c) {
  const std::string type = get_string(c, "type", "curve", "");
  if (type == "circle") {
    check_keys(c, "curve", {"type", "radius"});
    const double r = get_number(c, "radius", "curve", 1.0);
    if (!(r > 0.0)) schema_error("curve.radius", "must be positive");
    return CurveSpec::circle(r);
  }
  if (type == "ellipse") {
    check_keys(c, "curve", {"type", "a", "b"});
    const double a = get_number(c, "a", "curve", 1.0), b = get_number(c, "b", "curve", 1.0);
    if (!(a > 0.0 && b > 0.0)) schema_error("curve", "ellipse semi-axes must be positive");
    return CurveSpec::ellipse(a, b);
  }
  if (type == "parametric") {
    check_keys(c, "curve", {"type", "x", "y"});
    if (!c.contains("x") || !c.contains("y")) schema_error("curve", "parametric curve needs x and y");
    return CurveSpec::parametric(get_string(c, "x", "curve", ""), get_string(c, "y", "curve", ""));
  }
  schema_error("curve.type", "expected circle, ellipse or parametric");
}

std::vector<double> parse_hbar_grid(const json& v) {
  if (v.is_array()) return get_numbers(v, "hbar_grid");
  check_keys(v, "hbar_grid", {"log_range"});
  const auto r = get_numbers(v.at("log_range"), "hbar_grid.log_range");
  if (r.size() != 3 || !(r[0] > 0.0 && r[1] > r[0]) || r[2] < 2 || r[2] != std::floor(r[2]))
    schema_error("hbar_grid.log_range", "expected [lo, hi, count] with 0 < lo < hi and integer count >= 2");
  const int n = static_cast<int>(r[2]);
  std::vector<double> out;
  for (int i = 0; i < n; ++i) out.push_back(std::exp(std::log(r[0]) + (std::log(r[1]) - std::log(r[0])) * i / (n - 1)));
  return out;
}

void parse_grids(const json& g, RunConfig& cfg) {
  check_keys(g, "grids", {"band", "geometry", "eikonal", "wkb", "strip", "planar"});
  if (g.contains("band")) {
    const auto& b = g.at("band");
    const std::string p = "grids.band";
    check_keys(b, p, {"T", "n", "levels", "samples", "taylor_order", "contour_radius", "contour_points"});
    cfg.band.grid.T = get_number(b, "T", p, cfg.band.grid.T);
    cfg.band.grid.n = get_int(b, "n", p, cfg.band.grid.n);
    cfg.band.levels = get_int(b, "levels", p, cfg.band.levels);
    cfg.band.n_samples = get_int(b, "samples", p, cfg.band.n_samples);
    cfg.band.taylor_order = get_int(b, "taylor_order", p, cfg.band.taylor_order);
    cfg.band.contour_radius = get_number(b, "contour_radius", p, cfg.band.contour_radius);
    cfg.band.contour_points = get_int(b, "contour_points", p, cfg.band.contour_points);
  }
  if (g.contains("geometry")) {
    const auto& b = g.at("geometry");
    const std::string p = "grids.geometry";
    check_keys(b, p, {"samples", "jet_step", "symmetry_tol"});
    cfg.geometry.n_samples = get_int(b, "samples", p, cfg.geometry.n_samples);
    cfg.geometry.jet_step = get_number(b, "jet_step", p, cfg.geometry.jet_step);
    cfg.geometry.symmetry_tol = get_number(b, "symmetry_tol", p, cfg.geometry.symmetry_tol);
  }
  if (g.contains("eikonal")) {
    const auto& b = g.at("eikonal");
    check_keys(b, "grids.eikonal", {"segment"});
    cfg.eikonal.n_segment = get_int(b, "segment", "grids.eikonal", cfg.eikonal.n_segment);
  }
  if (g.contains("wkb")) {
    const auto& b = g.at("wkb");
    const std::string p = "grids.wkb";
    check_keys(b, p, {"cheb_nodes", "eps0", "eps_levels", "panels", "order"});
    cfg.wkb.cheb_nodes = get_int(b, "cheb_nodes", p, cfg.wkb.cheb_nodes);
    cfg.wkb.eps0 = get_number(b, "eps0", p, cfg.wkb.eps0);
    cfg.wkb.eps_levels = get_int(b, "eps_levels", p, cfg.wkb.eps_levels);
    cfg.wkb.panels = get_int(b, "panels", p, cfg.wkb.panels);
    cfg.wkb.order = get_int(b, "order", p, cfg.wkb.order);
  }
  if (g.contains("strip")) {
    const auto& b = g.at("strip");
    const std::string p = "grids.strip";
    check_keys(b, p, {"n_sigma", "n_tau", "T", "model_order", "weight", "sectors"});
    cfg.strip.n_sigma = get_int(b, "n_sigma", p, cfg.strip.n_sigma);
    cfg.strip.n_tau = get_int(b, "n_tau", p, cfg.strip.n_tau);
    cfg.strip.T = get_number(b, "T", p, cfg.strip.T);
    const std::string mo = get_string(b, "model_order", p, "delta_tilde");
    if (mo == "leading") cfg.strip.model_order = ModelOrder::Leading;
    else if (mo == "delta_tilde") cfg.strip.model_order = ModelOrder::WithDeltaTilde;
    else schema_error(p + ".model_order", "expected leading or delta_tilde");
    cfg.strip.weight_on = get_bool(b, "weight", p, cfg.strip.weight_on);
    cfg.strip.use_sectors = get_bool(b, "sectors", p, cfg.strip.use_sectors);
  }
  if (g.contains("planar")) {
    const auto& b = g.at("planar");
    const std::string p = "grids.planar";
    check_keys(b, p, {"dx", "margin", "half_width"});
    cfg.planar.dx = get_number(b, "dx", p, cfg.planar.dx);
    cfg.planar.margin = get_number(b, "margin", p, cfg.planar.margin);
    cfg.planar.half_width = get_number(b, "half_width", p, cfg.planar.half_width);
  }
}

const std::set<std::string> kStages{"band", "geometry", "eikonal", "wkb", "predict", "validate"};

}  // namespace

std::vector<double> parse_number_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, "not a number: '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Config, "empty number list");
  return out;
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Config, std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(j, "config", {"k", "curve", "field", "xi_range", "grids", "hbar_grid", "validate", "tolerances",
                           "output_dir", "cache_dir", "stages"});
  RunConfig cfg;
  cfg.k = get_int(j, "k", "config", 1);
  if (cfg.k < 1 || cfg.k > 5) schema_error("k", "vanishing order must be in [1, 5]");
  if (!j.contains("curve")) schema_error("curve", "missing");
  cfg.curve = parse_curve(j.at("curve"));
  if (!j.contains("field")) schema_error("field", "missing field expression");
  cfg.field.expression = get_string(j, "field", "config", "");
  if (cfg.field.expression.empty()) schema_error("field", "empty field expression");
  cfg.field.k = cfg.k;
  if (j.contains("xi_range")) {
    const auto r = get_numbers(j.at("xi_range"), "xi_range");
    if (r.size() != 2 || !(r[1] > r[0])) schema_error("xi_range", "expected [lo, hi] with lo < hi");
    cfg.band.xi_lo = r[0];
    cfg.band.xi_hi = r[1];
  }
  if (j.contains("grids")) parse_grids(j.at("grids"), cfg);
  if (j.contains("hbar_grid")) cfg.hbar_grid = parse_hbar_grid(j.at("hbar_grid"));
  for (double hb : cfg.hbar_grid)
    if (!(hb > 0.0)) schema_error("hbar_grid", "values must be positive");
  if (j.contains("validate")) {
    const auto& v = j.at("validate");
    check_keys(v, "validate", {"h", "measure", "planar_hbar"});
    if (v.contains("h")) cfg.validate.h = get_numbers(v.at("h"), "validate.h");
    cfg.validate.measure = get_string(v, "measure", "validate", cfg.validate.measure);
    if (cfg.validate.measure != "gap" && cfg.validate.measure != "envelope")
      schema_error("validate.measure", "expected gap or envelope");
    if (v.contains("planar_hbar")) cfg.validate.planar_hbar = get_numbers(v.at("planar_hbar"), "validate.planar_hbar");
    for (double h : cfg.validate.h)
      if (!(h > 0.0 && h < 1.0)) schema_error("validate.h", "values must lie in (0, 1)");
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    check_keys(t, "tolerances", {"variability_eps", "gap_floor"});
    cfg.geometry.variability_eps = get_number(t, "variability_eps", "tolerances", cfg.geometry.variability_eps);
    cfg.tolerances.gap_floor = get_number(t, "gap_floor", "tolerances", cfg.tolerances.gap_floor);
  }
  cfg.output_dir = get_string(j, "output_dir", "config", cfg.output_dir);
  cfg.cache_dir = get_string(j, "cache_dir", "config", cfg.cache_dir);
  if (j.contains("stages")) {
    if (!j.at("stages").is_array()) schema_error("stages", "expected a list of stage names");
    for (const auto& s : j.at("stages")) {
      if (!s.is_string() || !kStages.count(s.get<std::string>())) schema_error("stages", "unknown stage " + s.dump());
      cfg.stages.push_back(s.get<std::string>());
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Config, "cannot read config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace tk
