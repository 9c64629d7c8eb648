#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fdt/geometry.hpp"

namespace fdt {

inline constexpr int kPrecisionThresholds = 51;  // 0..50 px
inline constexpr int kSuccessThresholds = 21;    // 0.00..1.00 step 0.05

struct EvalResult {
  std::vector<double> center_errors;
  std::vector<double> overlaps;
  std::vector<double> precision;  // [t] = fraction with error <= t px
  std::vector<double> success;    // [i] = fraction with IoU > 0.05 * i
  double precision_at_20 = 0.0;
  double auc = 0.0;

  int frames() const { return static_cast<int>(center_errors.size()); }
};

/// One-pass evaluation. Frame 0 is the given initialization and is not scored.
/// Throws std::invalid_argument on a length mismatch or a sequence with
/// fewer than two frames.
EvalResult evaluate_ope(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt);

/// Success threshold of sample i.
double success_threshold(int i);

struct RunSummary {
  std::string name;
  EvalResult eval;
  /// Update iterations summed over tracked frames (frame 0 excluded).
  int update_iterations = 0;
  int update_events = 0;
  unsigned long long conv_passes = 0;
  int frames = 0;  // total frames including frame 0
};

struct ComparisonRow {
  std::string name;
  double precision_at_20 = 0.0;
  double auc = 0.0;
  double iterations_per_frame = 0.0;
  double conv_passes_per_frame = 0.0;
};

/// Needs at least two runs.
std::vector<ComparisonRow> compare_runs(std::span<const RunSummary> runs);

void write_comparison(std::ostream& os, std::span<const ComparisonRow> rows);

/// "threshold value" lines, one curve after the other, with a summary header.
void write_curves(std::ostream& os, const EvalResult& r);

}  // namespace fdt
