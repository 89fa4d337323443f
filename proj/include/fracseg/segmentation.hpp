#pragma once

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "fracseg/fidelity.hpp"
#include "fracseg/grid.hpp"
#include "fracseg/wavelet.hpp"

namespace fracseg {

struct SegmentationMask {
  LabelMap map;
  std::vector<double> threshold_history;
  double threshold = 0.0;  // terminal threshold T*
  int iterations = 0;
  bool degenerate = false;  // an update emptied a region; previous partition returned
  double H0 = 0.0;
  double H1 = 0.0;
  double delta_h() const { return H1 - H0; }
};

inline constexpr int kThresholdMaxIter = 1000;

/// Two-region iterative midpoint thresholding. Pixels with h <= T get label 0.
/// Throws DegenerateInputError on a constant map.
SegmentationMask trof_threshold(const ScalarField& h, int max_iter = kThresholdMaxIter);

enum class RegionAverage { Linear, Log };

/// Region-wise global regularity: leaders averaged over each region per
/// octave, log2, then the slope of the regression against j.
std::pair<double, double> global_h(const LeaderPyramid& pyr, const LabelMap& mask,
                                   const RegressionSystem& sys,
                                   RegionAverage mode = RegionAverage::Linear);

/// Slope of the least-squares line through (j, values[j - j1]).
double regression_slope(const std::vector<double>& values, const RegressionSystem& sys);

/// Fraction of matching pixels, maximized over the label swap.
double classification_score(const LabelMap& mask, const LabelMap& truth);

}  // namespace fracseg
