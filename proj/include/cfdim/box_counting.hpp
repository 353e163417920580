#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "cfdim/errors.hpp"

namespace cfdim {

// Number of grid boxes of side `delta` hit by the points.
inline std::size_t box_count(const std::vector<double>& points, double delta) {
  if (!(delta > 0.0) || !std::isfinite(delta)) {
    throw Error("box_count: scale must be positive and finite");
  }
  std::vector<long long> bins;
  bins.reserve(points.size());
  for (double x : points) {
    bins.push_back(static_cast<long long>(std::floor(x / delta)));
  }
  std::sort(bins.begin(), bins.end());
  bins.erase(std::unique(bins.begin(), bins.end()), bins.end());
  return bins.size();
}

struct BoxCountResult {
  double slope = 0.0;
  double r2 = 1.0;
  std::vector<std::pair<double, std::size_t>> counts;  // (scale, boxes hit)
};

// Least-squares slope of log N(delta) against log(1/delta).
inline BoxCountResult box_count_dimension(const std::vector<double>& points,
                                          std::vector<double> scales) {
  if (points.empty()) throw Error("box_count_dimension: no points");
  for (double d : scales) {
    if (!(d > 0.0) || !std::isfinite(d)) {
      throw Error("box_count_dimension: degenerate scale list");
    }
  }
  std::sort(scales.begin(), scales.end(), std::greater<>());
  scales.erase(std::unique(scales.begin(), scales.end()), scales.end());
  if (scales.size() < 2) {
    throw Error("box_count_dimension: degenerate scale list");
  }

  BoxCountResult res;
  std::vector<double> xs, ys;
  for (double d : scales) {
    const std::size_t n = box_count(points, d);
    res.counts.emplace_back(d, n);
    xs.push_back(std::log(1.0 / d));
    ys.push_back(std::log(static_cast<double>(n)));
  }

  const double m = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  res.slope = sxy / sxx;
  if (syy > 0.0) {
    const double ss_res = syy - sxy * sxy / sxx;
    res.r2 = std::max(0.0, 1.0 - ss_res / syy);
  } else {
    res.r2 = 1.0;  // constant counts: the zero-slope fit is exact
  }
  return res;
}

}  // namespace cfdim
