#include "fracseg/segmentation.hpp"

#include <algorithm>
#include <cmath>

#include "fracseg/error.hpp"

namespace fracseg {

SegmentationMask trof_threshold(const ScalarField& h, int max_iter) {
  if (h.empty()) throw ConfigError("trof_threshold: empty input");
  if (!h.all_finite()) throw ParameterError("trof_threshold: input must be finite");
  const auto [lo, hi] = std::minmax_element(h.values().begin(), h.values().end());
  if (!(*lo < *hi)) throw DegenerateInputError("trof_threshold: constant map has no two-region split");

  SegmentationMask out;
  out.map = LabelMap(h.rows(), h.cols());
  double m0 = *lo;
  double m1 = *hi;
  LabelMap next(h.rows(), h.cols());
  for (int it = 0; it < max_iter; ++it) {
    const double t = 0.5 * (m0 + m1);
    double s0 = 0.0, s1 = 0.0;
    std::size_t n0 = 0, n1 = 0;
    for (std::size_t i = 0; i < h.size(); ++i) {
      const bool upper = h[i] > t;
      next.labels[i] = upper ? 1 : 0;
      if (upper) {
        s1 += h[i];
        ++n1;
      } else {
        s0 += h[i];
        ++n0;
      }
    }
    if (n0 == 0 || n1 == 0) {
      // Keep the last non-degenerate partition.
      out.degenerate = true;
      break;
    }
    const bool unchanged = it > 0 && next == out.map;
    out.threshold_history.push_back(t);
    out.threshold = t;
    out.iterations = it + 1;
    out.map = next;
    if (unchanged) break;
    m0 = s0 / static_cast<double>(n0);
    m1 = s1 / static_cast<double>(n1);
  }
  return out;
}

double regression_slope(const std::vector<double>& values, const RegressionSystem& sys) {
  if (values.size() != static_cast<std::size_t>(sys.j2 - sys.j1 + 1)) {
    throw ConfigError("regression_slope: one value per octave expected");
  }
  double s = 0.0, t = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double j = sys.j1 + static_cast<double>(i);
    s += values[i];
    t += j * values[i];
  }
  return sys.J_inv.b * s + sys.J_inv.c * t;
}

std::pair<double, double> global_h(const LeaderPyramid& pyr, const LabelMap& mask,
                                   const RegressionSystem& sys, RegionAverage mode) {
  if (!pyr.log_domain) throw ConfigError("global_h expects a log-domain pyramid");
  if (mask.rows != pyr.rows() || mask.cols != pyr.cols()) {
    throw ConfigError("global_h: mask and pyramid dimensions differ");
  }
  const std::size_t n1 = mask.count(1);
  const std::size_t n0 = mask.labels.size() - n1;
  if (n0 == 0 || n1 == 0) throw DegenerateInputError("global_h: empty region");

  std::vector<double> y0, y1;
  for (int j = sys.j1; j <= sys.j2; ++j) {
    const ScalarField& f = pyr.at_octave(j);
    double a0 = 0.0, a1 = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
      const double v = mode == RegionAverage::Linear ? std::exp2(f[i]) : f[i];
      (mask.labels[i] ? a1 : a0) += v;
    }
    a0 /= static_cast<double>(n0);
    a1 /= static_cast<double>(n1);
    if (mode == RegionAverage::Linear) {
      a0 = std::log2(std::max(a0, kLeaderFloor));
      a1 = std::log2(std::max(a1, kLeaderFloor));
    }
    y0.push_back(a0);
    y1.push_back(a1);
  }
  return {regression_slope(y0, sys), regression_slope(y1, sys)};
}

double classification_score(const LabelMap& mask, const LabelMap& truth) {
  if (mask.rows != truth.rows || mask.cols != truth.cols ||
      mask.labels.size() != truth.labels.size()) {
    throw ConfigError("classification_score: dimension mismatch");
  }
  if (mask.labels.empty()) throw ConfigError("classification_score: empty masks");
  std::size_t agree = 0;
  for (std::size_t i = 0; i < mask.labels.size(); ++i) {
    agree += (mask.labels[i] != 0) == (truth.labels[i] != 0) ? 1 : 0;
  }
  const double f = static_cast<double>(agree) / static_cast<double>(mask.labels.size());
  return std::max(f, 1.0 - f);
}

}  // namespace fracseg
