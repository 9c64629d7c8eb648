#include "fdt/eval.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace fdt {

double success_threshold(int i) { return i / 20.0; }  // exact at 1.0, unlike 0.05 * 20

EvalResult evaluate_ope(std::span<const BoundingBox> pred, std::span<const BoundingBox> gt) {
  if (pred.size() != gt.size())
    throw std::invalid_argument("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                                std::to_string(gt.size()));
  if (pred.size() < 2) throw std::invalid_argument("evaluation needs at least two frames");

  EvalResult r;
  for (std::size_t i = 1; i < pred.size(); ++i) {
    r.center_errors.push_back(center_error(pred[i], gt[i]));
    r.overlaps.push_back(iou(pred[i], gt[i]));
  }
  const double n = static_cast<double>(r.center_errors.size());

  r.precision.assign(kPrecisionThresholds, 0.0);
  for (int t = 0; t < kPrecisionThresholds; ++t) {
    int hit = 0;
    for (double e : r.center_errors) hit += e <= t;
    r.precision[static_cast<std::size_t>(t)] = hit / n;
  }
  r.success.assign(kSuccessThresholds, 0.0);
  for (int i = 0; i < kSuccessThresholds; ++i) {
    const double thr = success_threshold(i);
    int hit = 0;
    for (double o : r.overlaps) hit += o > thr;
    r.success[static_cast<std::size_t>(i)] = hit / n;
  }
  r.precision_at_20 = r.precision[20];
  double sum = 0.0;
  for (double s : r.success) sum += s;
  r.auc = sum / kSuccessThresholds;
  return r;
}

std::vector<ComparisonRow> compare_runs(std::span<const RunSummary> runs) {
  if (runs.size() < 2) throw std::invalid_argument("comparison needs at least two runs");
  std::vector<ComparisonRow> rows;
  for (const auto& run : runs) {
    ComparisonRow row;
    row.name = run.name;
    row.precision_at_20 = run.eval.precision_at_20;
    row.auc = run.eval.auc;
    const int tracked = run.frames > 1 ? run.frames - 1 : 1;
    row.iterations_per_frame = static_cast<double>(run.update_iterations) / tracked;
    row.conv_passes_per_frame = run.frames > 0 ? static_cast<double>(run.conv_passes) / run.frames : 0.0;
    rows.push_back(row);
  }
  return rows;
}

void write_comparison(std::ostream& os, std::span<const ComparisonRow> rows) {
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %8s %12s %12s\n", "config", "prec@20", "AUC", "iters/frame",
                "convs/frame");
  os << line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-16s %10.4f %8.4f %12.3f %12.3f\n", r.name.c_str(), r.precision_at_20, r.auc,
                  r.iterations_per_frame, r.conv_passes_per_frame);
    os << line;
  }
}

void write_curves(std::ostream& os, const EvalResult& r) {
  char line[64];
  std::snprintf(line, sizeof line, "# frames %d\n", r.frames());
  os << line;
  std::snprintf(line, sizeof line, "# precision@20 %.6f\n", r.precision_at_20);
  os << line;
  std::snprintf(line, sizeof line, "# auc %.6f\n", r.auc);
  os << line << "# precision (threshold px, fraction)\n";
  for (std::size_t t = 0; t < r.precision.size(); ++t) {
    std::snprintf(line, sizeof line, "%zu %.6f\n", t, r.precision[t]);
    os << line;
  }
  os << "# success (threshold IoU, fraction)\n";
  for (std::size_t i = 0; i < r.success.size(); ++i) {
    std::snprintf(line, sizeof line, "%.2f %.6f\n", success_threshold(static_cast<int>(i)), r.success[i]);
    os << line;
  }
}

}  // namespace fdt
