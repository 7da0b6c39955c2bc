#include "tunnelkit/compare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "tunnelkit/errors.hpp"
#include "tunnelkit/numerics.hpp"

namespace tk {

CompareReport compare_report(std::vector<CampaignPoint> points, double S, const std::vector<double>& nodes,
                             double floor) {
  std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) { return a.h < b.h; });
  std::vector<double> x, y, hs, lr;
  CompareReport rep;
  rep.S = S;
  for (const auto& p : points) {
    if (!(p.gap_direct > floor) || !std::isfinite(p.gap_direct)) continue;
    x.push_back(-1.0 / p.h);
    y.push_back(std::log(p.gap_direct));
    if (p.gap_pred > 0.0) {
      hs.push_back(p.h);
      lr.push_back(std::log(p.gap_direct / p.gap_pred));
    }
  }
  rep.usable = static_cast<int>(x.size());
  if (rep.usable < 4) throw Error(ErrorKind::Config, "insufficient range: fewer than 4 usable h points");
  rep.slope = linear_fit(x, y).second;
  rep.slope_rel_err = std::abs(rep.slope - S) / S;
  if (!lr.empty()) {
    const auto [mn, mx] = std::minmax_element(lr.begin(), lr.end());
    rep.ratio_min = std::exp(*mn);
    rep.ratio_max = std::exp(*mx);
    rep.ratio_spread = rep.ratio_max / rep.ratio_min;
    if (lr.size() >= 2) rep.ratio_trend = linear_fit(hs, lr).second;
  }
  for (std::size_t i = 1; i + 1 < points.size(); ++i) {
    if (points[i].gap_direct < points[i - 1].gap_direct && points[i].gap_direct < points[i + 1].gap_direct) {
      rep.measured_minima.push_back(points[i].h);
      double best = INFINITY;
      for (double z : nodes) best = std::min(best, std::abs(z - points[i].h));
      rep.node_offsets.push_back(best);
    }
  }
  for (std::size_t i = 1; i < points.size(); ++i)
    if (points[i].parity != 0 && points[i - 1].parity != 0 && points[i].parity != points[i - 1].parity)
      rep.parity_flips.push_back(0.5 * (points[i].h + points[i - 1].h));
  return rep;
}

std::string campaign_csv(const std::vector<CampaignPoint>& points) {
  std::ostringstream os;
  os << "# h = hbar^(1/(k+2)); nu1, nu2: strip eigenvalues nu_n(h) [h-scaled energy]; gap_direct, gap_pred: nu2 - nu1 "
        "measured and predicted; log_ratio: log(gap_direct / gap_pred); parity: ground-state parity under the symmetry U\n";
  os << "h,hbar,nu1,nu2,gap_direct,gap_pred,log_ratio,parity\n";
  char buf[300];
  for (const auto& p : points) {
    const double lr = p.gap_pred > 0.0 && p.gap_direct > 0.0 ? std::log(p.gap_direct / p.gap_pred) : NAN;
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", p.h, p.hbar, p.nu1, p.nu2,
                  p.gap_direct, p.gap_pred, lr, p.parity);
    os << buf;
  }
  return os.str();
}

}  // namespace tk
