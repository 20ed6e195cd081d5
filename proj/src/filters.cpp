#include "bordernet/filters.hpp"

#include <algorithm>
#include <cstdlib>
#include <sstream>
#include <stdexcept>

namespace bordernet::filters {

std::string to_string(Orientation o) {
  switch (o) {
    case Orientation::horizontal:
      return "horizontal";
    case Orientation::vertical:
      return "vertical";
    case Orientation::diag_main:
      return "diag_main";
    case Orientation::diag_anti:
      return "diag_anti";
  }
  return "unknown";
}

bool FilterKernel::in_band(Orientation o, int size, int band_width, int r, int c) {
  const int half = (band_width - 1) / 2;
  const int centre = (size - 1) / 2;
  switch (o) {
    case Orientation::horizontal:
      return std::abs(r - centre) <= half;
    case Orientation::vertical:
      return std::abs(c - centre) <= half;
    case Orientation::diag_main:
      return std::abs(r - c) <= half;
    case Orientation::diag_anti:
      return std::abs(r + c - (size - 1)) <= half;
  }
  return false;
}

FilterKernel::FilterKernel(Orientation orientation, int size, int band_width)
    : orientation_(orientation), size_(size), band_width_(band_width) {
  if (size <= 0 || size % 2 == 0) throw std::invalid_argument("filter size must be odd and positive");
  if (band_width <= 0 || band_width % 2 == 0) {
    throw std::invalid_argument("filter band width must be odd and positive");
  }
  if (band_width >= size) throw std::invalid_argument("filter band width must be < size");
  weights_.resize(static_cast<std::size_t>(size * size));
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      weights_[static_cast<std::size_t>(r * size + c)] =
          in_band(orientation, size, band_width, r, c) ? 1.0 : 0.0;
    }
  }
}

int FilterKernel::ones() const {
  return static_cast<int>(std::count(weights_.begin(), weights_.end(), 1.0));
}

std::vector<double> FilterKernel::normalized() const {
  const double n = ones();
  std::vector<double> out = weights_;
  for (double& v : out) v /= n;
  return out;
}

std::string FilterKernel::to_csv() const {
  std::ostringstream os;
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) os << (c ? "," : "") << at(r, c);
    os << '\n';
  }
  return os.str();
}

FilterKernel make_filter(Orientation orientation, int size, int band_width) {
  return FilterKernel(orientation, size, band_width);
}

std::vector<FilterKernel> bank() {
  std::vector<FilterKernel> out;
  for (Orientation o : kBankOrder) out.push_back(make_filter(o));
  return out;
}

}  // namespace bordernet::filters
