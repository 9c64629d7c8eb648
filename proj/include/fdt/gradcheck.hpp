#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fdt/tensor.hpp"

namespace fdt {

struct GradCheckConfig {
  std::uint64_t seed = 1;
  int instances = 20;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Coordinates probed per checked tensor and instance (all when smaller).
  int probes = 48;
};

struct ComponentReport {
  std::string name;
  int instances = 0;
  /// Instances redrawn because an input sat too close to a non-differentiable point.
  int redrawn = 0;
  long long probes = 0;
  double worst_error = 0.0;
  bool passed = false;
};

struct GradCheckReport {
  std::vector<ComponentReport> components;
  double seconds = 0.0;

  bool passed() const;
};

/// |a - n| / max(|a|, |n|, 1e-3).
double gradient_error(double analytic, double numeric);

/// Worst gradient_error of the central difference of `f` against `analytic`
/// over the probed coordinates of `x`. `x` is restored afterwards.
double check_tensor_gradient(const std::function<double()>& f, Tensor<double>& x, const Tensor<double>& analytic,
                             double step, int probes, std::uint64_t seed, long long* probe_count = nullptr);

/// Every layer kernel, softmax cross-entropy, RoIAlign, RoIPool and an
/// end-to-end pass through a small network.
GradCheckReport run_gradcheck(const GradCheckConfig& cfg = {});

}  // namespace fdt
