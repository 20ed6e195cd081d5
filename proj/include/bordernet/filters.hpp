#pragma once

// Fixed oriented binary kernels used as BorderNet's front end.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace bordernet::filters {

enum class Orientation { horizontal, vertical, diag_main, diag_anti };

inline constexpr std::array<Orientation, 4> kBankOrder = {
    Orientation::horizontal, Orientation::vertical, Orientation::diag_main, Orientation::diag_anti};

std::string to_string(Orientation o);

/// size x size kernel whose ones form a centred band of odd `band_width`.
class FilterKernel {
 public:
  FilterKernel(Orientation orientation, int size, int band_width);

  Orientation orientation() const { return orientation_; }
  int size() const { return size_; }
  int band_width() const { return band_width_; }

  /// Binary weights, row-major.
  const std::vector<double>& weights() const { return weights_; }
  double at(int r, int c) const { return weights_[static_cast<std::size_t>(r * size_ + c)]; }

  /// Weights divided by their 1-count, so the kernel sums to 1.
  std::vector<double> normalized() const;

  int ones() const;

  /// Closed-form band membership; the weights are built from this.
  static bool in_band(Orientation o, int size, int band_width, int r, int c);

  std::string to_csv() const;

 private:
  Orientation orientation_;
  int size_;
  int band_width_;
  std::vector<double> weights_;
};

inline constexpr int kDefaultSize = 7;
inline constexpr int kDefaultBandWidth = 3;

FilterKernel make_filter(Orientation orientation, int size = kDefaultSize,
                         int band_width = kDefaultBandWidth);

/// [horizontal, vertical, diag_main, diag_anti] at 7x7 with band width 3.
std::vector<FilterKernel> bank();

}  // namespace bordernet::filters
