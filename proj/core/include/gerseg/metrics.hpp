#pragma once

#include <cstdint>
#include <optional>

#include "gerseg/tensor.hpp"

namespace gerseg::metrics {

struct ConfusionCounts {
  int64_t tp = 0;
  int64_t fp = 0;
  int64_t fn = 0;
  int64_t tn = 0;
};

struct ScalarMetrics {
  double dice = 0;
  double jaccard = 0;
  double precision = 0;
  double recall = 0;
  double specificity = 0;
  double f1 = 0;
};

// Pixelwise counts over two same-shaped masks; any nonzero value counts as
// foreground.
ConfusionCounts confusion(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt);

// Ratio metrics with the empty-class convention: when a denominator is zero,
// the metric is 1 if prediction and ground truth are both empty of the class
// in question and 0 otherwise.
ScalarMetrics scalar_metrics(const ConfusionCounts& c);

// Symmetric Hausdorff distance between the foreground pixel sets, in pixel
// units. Exact: squared distances are computed in integers and the square
// root is taken once at the end. Empty masks make the distance undefined.
// percentile < 100 switches to the percentile variant of the two directed
// distances.
std::optional<double> hausdorff(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt,
                                double percentile = 100.0);

// Squared Euclidean distance transform of a mask's foreground, exact in
// int64. Cells of an empty mask get -1. Exposed for the distance-transform
// vs brute-force cross-check.
Tensor<int64_t> squared_distance_field(const Tensor<uint8_t>& mask);

struct MetricsReport {
  double dice = 0;
  double jaccard = 0;
  double precision = 0;
  double recall = 0;
  double specificity = 0;
  double f1 = 0;
  double hausdorff = 0;  // mean over the images where it is defined
  int n_images = 0;
  int n_hausdorff_undefined = 0;
};

// Per-image metrics averaged over a test set (macro average). Hausdorff
// averages only the defined cases and reports how many were skipped.
class MetricsAccumulator {
 public:
  void add(const Tensor<uint8_t>& pred, const Tensor<uint8_t>& gt, double hausdorff_percentile = 100.0);
  MetricsReport report() const;

 private:
  ScalarMetrics sums_;
  double hausdorff_sum_ = 0;
  int n_ = 0;
  int n_hausdorff_defined_ = 0;
};

}  // namespace gerseg::metrics
