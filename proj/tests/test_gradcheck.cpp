#include <doctest.h>

#include <cmath>

#include "fdt/gradcheck.hpp"

using namespace fdt;

TEST_CASE("every component passes the finite-difference check") {
  GradCheckConfig cfg;
  cfg.instances = 6;
  const GradCheckReport r = run_gradcheck(cfg);
  CHECK(r.passed());
  CHECK(r.components.size() >= 9);
  for (const auto& c : r.components) {
    INFO(c.name);
    CHECK(c.passed);
    CHECK(c.instances == 6);
    CHECK(c.probes > 0);
    CHECK(c.worst_error < cfg.tolerance);
  }
}

TEST_CASE("the checker catches a wrong gradient") {
  Tensor<double> x({3}, std::vector<double>{0.5, -1.0, 2.0});
  auto f = [&] { return x[0] * x[0] + 3 * x[1] + std::sin(x[2]); };
  const Tensor<double> right({3}, std::vector<double>{1.0, 3.0, std::cos(2.0)});
  CHECK(check_tensor_gradient(f, x, right, 1e-5, 10, 1) < 1e-8);
  CHECK(x[0] == 0.5);

  Tensor<double> wrong = right;
  wrong[2] *= 1.01;
  CHECK(check_tensor_gradient(f, x, wrong, 1e-5, 10, 1) > 1e-3);
}

TEST_CASE("relative error uses a floor for tiny gradients") {
  CHECK(gradient_error(1.0, 1.0) == 0.0);
  CHECK(gradient_error(2.0, 1.0) == doctest::Approx(0.5));
  CHECK(gradient_error(1e-9, 0.0) == doctest::Approx(1e-6));
}
