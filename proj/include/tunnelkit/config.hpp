#pragma once

#include <string>
#include <vector>

#include "tunnelkit/band.hpp"
#include "tunnelkit/eikonal.hpp"
#include "tunnelkit/geometry.hpp"
#include "tunnelkit/planar.hpp"
#include "tunnelkit/strip.hpp"
#include "tunnelkit/wkb.hpp"

namespace tk {

struct ValidateSettings {
  std::vector<double> h{0.2, 0.15, 0.1, 0.08};
  // "gap": nu2 - nu1 at the physical flux; "envelope": flux-phase-free amplitude
  // from two runs a quarter flux quantum apart (symmetric curves only)
  std::string measure = "gap";
  std::vector<double> planar_hbar;  // optional planar leading-order runs
};

struct Tolerances {
  double gap_floor = 1e-12;  // relative to the operator scale nu
};

struct RunConfig {
  int k = 1;
  CurveSpec curve;
  FieldSpec field;
  BandOptions band;
  GeometryOptions geometry;
  EikonalOptions eikonal;
  WkbOptions wkb;
  StripDiscretization strip;
  PlanarOptions planar;
  std::vector<double> hbar_grid;
  ValidateSettings validate;
  Tolerances tolerances;
  std::string output_dir = "out";
  std::string cache_dir = ".tunnelkit-cache";
  std::vector<std::string> stages;  // empty: decided by the subcommand
};

// Parses and schema-checks a JSON config; unknown keys and missing required keys are config errors.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);

// Parses "a,b,c" into doubles; used by the --hbar override.
std::vector<double> parse_number_list(const std::string& s);

}  // namespace tk
