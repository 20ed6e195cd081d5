#include <doctest.h>

#include <cmath>
#include <limits>

#include "bordernet/nn/adam.hpp"
#include "bordernet/nn/layers.hpp"

using namespace bordernet::nn;

namespace {

Parameter<double> scalar(double value, double grad, bool trainable = true) {
  return {"p", Tensor<double>({1}, value), Tensor<double>({1}, grad), trainable};
}

}  // namespace

TEST_CASE("zero gradient leaves parameters unchanged") {
  Parameter<double> p{"w", Tensor<double>({3}, std::vector<double>{1, -2, 3}), Tensor<double>({3}, 0.0)};
  Adam<double> opt({&p});
  for (int i = 0; i < 5; ++i) opt.step();
  CHECK(p.value.values() == std::vector<double>{1, -2, 3});
  CHECK(opt.step_count() == 5);
}

TEST_CASE("first step moves by lr against the gradient sign") {
  for (double g : {3.0, -0.25, 1e-3}) {
    Parameter<double> p = scalar(0.5, g);
    Adam<double> opt({&p});
    opt.step();
    const double expected = 0.5 - 1e-3 * (g > 0 ? 1.0 : -1.0);
    CHECK(p.value[0] == doctest::Approx(expected).epsilon(1e-7));
  }
}

TEST_CASE("matches the bias-corrected update over several steps") {
  Parameter<double> p = scalar(1.0, 0.0);
  Adam<double> opt({&p});
  double m = 0, v = 0, x = 1.0;
  for (int t = 1; t <= 10; ++t) {
    const double g = std::sin(t) + 0.1 * x;
    p.grad[0] = g;
    opt.step();
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    CHECK(p.value[0] == doctest::Approx(x).epsilon(1e-12));
  }
  CHECK(opt.moments()[0].m[0] == doctest::Approx(m));
  CHECK(opt.moments()[0].v[0] == doctest::Approx(v));
}

TEST_CASE("custom configuration") {
  Parameter<double> p = scalar(0.0, 2.0);
  Adam<double> opt({&p}, AdamConfig{.lr = 0.1});
  opt.step();
  CHECK(p.value[0] == doctest::Approx(-0.1));
}

TEST_CASE("non-finite gradient aborts the step without mutation") {
  Parameter<double> a = scalar(1.0, 0.5);
  Parameter<double> b{"bad", Tensor<double>({2}, 2.0), Tensor<double>({2}, std::vector<double>{0.1, 0.0})};
  Adam<double> opt({&a, &b});
  opt.step();
  const double a1 = a.value[0];
  const auto b1 = b.value.values();
  const auto moments = opt.moments();
  b.grad[1] = std::numeric_limits<double>::quiet_NaN();
  try {
    opt.step();
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    const std::string msg = e.what();
    CHECK(msg.find("bad") != std::string::npos);
  }
  CHECK(a.value[0] == a1);
  CHECK(b.value.values() == b1);
  CHECK(opt.step_count() == 1);
  CHECK(opt.moments()[0].m == moments[0].m);
  CHECK(opt.moments()[1].v == moments[1].v);

  b.grad[1] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(opt.step(), std::runtime_error);
}

TEST_CASE("frozen parameters are rejected") {
  Parameter<double> frozen = scalar(1.0, 1.0, false);
  CHECK_THROWS(Adam<double>({&frozen}));
}

TEST_CASE("float instantiation") {
  Parameter<float> p{"f", Tensor<float>({1}, 1.0f), Tensor<float>({1}, -1.0f)};
  Adam<float> opt({&p});
  opt.step();
  CHECK(p.value[0] == doctest::Approx(1.001f));
}
