#pragma once

#include <string>
#include <vector>

namespace tk {

struct CampaignPoint {
  double h = 0.0, hbar = 0.0;
  double nu1 = 0.0, nu2 = 0.0;
  double gap_direct = 0.0;  // measured gap (or its flux envelope)
  double gap_pred = 0.0;
  int parity = 0;           // parity of the ground state, 0 if unknown
};

struct CompareReport {
  int usable = 0;
  double slope = 0.0;          // least-squares slope of log gap against -1/h
  double S = 0.0;
  double slope_rel_err = 0.0;  // |slope - S| / S
  double ratio_min = 0.0, ratio_max = 0.0;
  double ratio_spread = 0.0;   // ratio_max / ratio_min
  double ratio_trend = 0.0;    // slope of log(ratio) against h
  std::vector<double> measured_minima;  // h of local minima of the measured gap
  std::vector<double> node_offsets;     // distance from each minimum to the nearest predicted node
  std::vector<double> parity_flips;     // midpoints where the ground-state parity changes
};

// Points with gap_direct below floor are unusable; fewer than four usable points is an error.
CompareReport compare_report(std::vector<CampaignPoint> points, double S, const std::vector<double>& predicted_nodes_h,
                             double floor = 1e-12);

// CSV: h, hbar, nu1, nu2, gap_direct, gap_pred, log_ratio, parity.
std::string campaign_csv(const std::vector<CampaignPoint>& points);

}  // namespace tk
