#include <doctest.h>

#include <algorithm>
#include <cstdlib>
#include <numeric>

#include "bordernet/filters.hpp"
#include "bordernet/nn/layers.hpp"

using namespace bordernet;
using filters::Orientation;

namespace {

nn::Conv2d<double> bank_conv() {
  nn::Conv2d<double> conv(1, 4, 7, 1, 3, false);
  auto& w = conv.weight().value.values();
  w.clear();
  for (const auto& k : filters::bank()) {
    const auto n = k.normalized();
    w.insert(w.end(), n.begin(), n.end());
  }
  conv.bias().value.fill(0.0);
  return conv;
}

bool member(Orientation o, int r, int c) {
  switch (o) {
    case Orientation::horizontal: return std::abs(r - 3) <= 1;
    case Orientation::vertical: return std::abs(c - 3) <= 1;
    case Orientation::diag_main: return std::abs(r - c) <= 1;
    case Orientation::diag_anti: return std::abs(r + c - 6) <= 1;
  }
  return false;
}

}  // namespace

TEST_CASE("kernels match their membership predicates") {
  for (Orientation o : filters::kBankOrder) {
    const auto k = filters::make_filter(o);
    CHECK(k.size() == 7);
    CHECK(k.band_width() == 3);
    for (int r = 0; r < 7; ++r) {
      for (int c = 0; c < 7; ++c) {
        CHECK(k.at(r, c) == (member(o, r, c) ? 1.0 : 0.0));
        CHECK(filters::FilterKernel::in_band(o, 7, 3, r, c) == member(o, r, c));
      }
    }
  }
}

TEST_CASE("kernel sums") {
  const auto sum = [](const filters::FilterKernel& k) {
    return std::accumulate(k.weights().begin(), k.weights().end(), 0.0);
  };
  CHECK(sum(filters::make_filter(Orientation::horizontal)) == 21.0);
  CHECK(sum(filters::make_filter(Orientation::vertical)) == 21.0);
  CHECK(sum(filters::make_filter(Orientation::diag_main)) == 19.0);
  CHECK(sum(filters::make_filter(Orientation::diag_anti)) == 19.0);
  CHECK(filters::make_filter(Orientation::diag_main).ones() == 19);
  for (const auto& k : filters::bank()) {
    const auto n = k.normalized();
    CHECK(std::accumulate(n.begin(), n.end(), 0.0) == doctest::Approx(1.0));
  }
}

TEST_CASE("bank order and symmetries") {
  const auto b = filters::bank();
  REQUIRE(b.size() == 4);
  for (std::size_t i = 0; i < 4; ++i) CHECK(b[i].orientation() == filters::kBankOrder[i]);
  const auto& h = b[0];
  const auto& v = b[1];
  const auto& dm = b[2];
  const auto& da = b[3];
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 7; ++c) {
      CHECK(v.at(r, c) == h.at(c, r));
      CHECK(da.at(r, c) == dm.at(r, 6 - c));
      for (const auto& k : b) CHECK(k.at(r, c) == k.at(6 - r, 6 - c));
    }
  }
}

TEST_CASE("constructor validation") {
  CHECK_THROWS(filters::FilterKernel(Orientation::horizontal, 6, 3));
  CHECK_THROWS(filters::FilterKernel(Orientation::horizontal, 7, 2));
  CHECK_THROWS(filters::FilterKernel(Orientation::horizontal, 7, 7));
  CHECK_THROWS(filters::FilterKernel(Orientation::horizontal, 7, 9));
  CHECK_THROWS(filters::FilterKernel(Orientation::horizontal, -1, 1));
  const auto wide = filters::make_filter(Orientation::vertical, 9, 5);
  CHECK(wide.ones() == 45);
}

TEST_CASE("normalized bank preserves constant images in the interior") {
  auto conv = bank_conv();
  nn::Tensor<double> x({1, 1, 20, 20}, 0.37);
  const auto y = conv.infer(x);
  REQUIRE(y.shape() == nn::Shape{1, 4, 20, 20});
  for (std::size_t ch = 0; ch < 4; ++ch) {
    for (std::size_t r = 3; r < 17; ++r) {
      for (std::size_t c = 3; c < 17; ++c) CHECK(y[(ch * 20 + r) * 20 + c] == doctest::Approx(0.37));
    }
  }
  // Zero padding dims the corners.
  CHECK(y[0] < 0.37);
}

TEST_CASE("oriented bars select the matching channel") {
  auto conv = bank_conv();
  for (std::size_t o = 0; o < 4; ++o) {
    nn::Tensor<double> x({1, 1, 21, 21}, 0.0);
    for (int r = 0; r < 21; ++r) {
      for (int c = 0; c < 21; ++c) {
        bool on = false;
        switch (filters::kBankOrder[o]) {
          case Orientation::horizontal: on = r == 10; break;
          case Orientation::vertical: on = c == 10; break;
          case Orientation::diag_main: on = r == c; break;
          case Orientation::diag_anti: on = r + c == 20; break;
        }
        if (on) x[r * 21 + c] = 1.0;
      }
    }
    const auto y = conv.infer(x);
    double response[4];
    for (std::size_t ch = 0; ch < 4; ++ch) response[ch] = y[(ch * 21 + 10) * 21 + 10];
    const auto best = std::max_element(response, response + 4) - response;
    CHECK(static_cast<std::size_t>(best) == o);
  }
}

TEST_CASE("csv dump") {
  const auto csv = filters::make_filter(Orientation::horizontal).to_csv();
  CHECK(csv.rfind("0,0,0,0,0,0,0\n0,0,0,0,0,0,0\n1,1,1,1,1,1,1\n", 0) == 0);
  CHECK(filters::to_string(Orientation::diag_anti) == "diag_anti");
}
