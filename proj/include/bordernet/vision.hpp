#pragma once

// Discrete images, gradients, orientation maps and occlusion masks.
//
// Axis convention throughout: x is the column index (increasing rightward),
// y is the row index (increasing downward).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace bordernet::vision {

enum class RangeTag { raw, normalized };

/// Row-major grey-level raster. Raw images hold byte values 0..255,
/// normalized images hold values in [0, 1].
struct ImageGrid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;
  RangeTag range = RangeTag::raw;

  ImageGrid() = default;
  ImageGrid(std::size_t h, std::size_t w, RangeTag tag, double fill = 0.0);

  static ImageGrid from_bytes(std::size_t h, std::size_t w, std::span<const std::uint8_t> bytes);

  double& at(std::size_t r, std::size_t c) { return pixels[r * width + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels[r * width + c]; }

  /// Raw-range pixels rounded and clamped back to bytes.
  std::vector<std::uint8_t> to_bytes() const;
};

/// pixel / 255; rejects images that are already normalized.
ImageGrid normalize(const ImageGrid& raw);

struct GradientField {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> ix;
  std::vector<double> iy;
};

/// Central differences in the interior, one-sided differences on the border.
/// A dimension of extent 1 has zero derivative along it.
GradientField gradient(const ImageGrid& img);

/// Z(theta) I = -sin(theta) I_x + cos(theta) I_y, pixelwise.
std::vector<double> apply_z(const ImageGrid& img, double theta);
std::vector<double> apply_z(const GradientField& grad, double theta);

inline constexpr double kDefaultGradientEpsilon = 1e-6;
inline constexpr int kDefaultOrientationBins = 360;

struct OrientationMap {
  static constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> theta;     // in [0, 2pi), NaN where undefined
  std::vector<double> grad_mag;

  bool defined(std::size_t r, std::size_t c) const;
};

/// Per pixel with |grad I| >= gradient_epsilon, the bin angle 2 pi k / n_bins
/// maximizing Z(theta) I; the smallest angle wins ties (scores equal to
/// within 1e-12 |grad I|). Other pixels are
/// undefined. Throws std::invalid_argument for n_bins < 4.
OrientationMap orientation_map(const ImageGrid& img, int n_bins = kDefaultOrientationBins,
                               double gradient_epsilon = kDefaultGradientEpsilon);

enum class OcclusionKind { stripes, grid };

struct OcclusionSpec {
  OcclusionKind kind = OcclusionKind::stripes;
  int w = 1;  // stripe width, pixels
  int s = 1;  // inter-stripe spacing, pixels
  int phase = 0;  // anti-diagonal offset, stripes only

  void validate() const;
};

std::string to_string(OcclusionKind kind);
OcclusionKind parse_occlusion_kind(const std::string& text);

/// Parses "stripes,3,3" / "grid,2,4".
OcclusionSpec parse_occlusion(const std::string& text);

struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> occluded;  // 1 where occluded

  std::size_t count() const;
  bool at(std::size_t r, std::size_t c) const { return occluded[r * width + c] != 0; }
};

/// Anti-diagonal stripes: (r, c) occluded iff ((r + c + phase) mod (w + s)) < w.
Mask stripe_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec);

/// Axis-aligned grid: occluded iff (r mod (w + s)) < w or (c mod (w + s)) < w.
Mask grid_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec);

Mask make_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec);

/// Sets occluded pixels of a raw image to 0.
ImageGrid occlude(const ImageGrid& raw, const OcclusionSpec& spec);

/// In-place variant over a contiguous run of row-major byte images.
void occlude_bytes(std::span<std::uint8_t> images, std::size_t height, std::size_t width,
                   const Mask& mask);

/// Binary (P5) or ASCII (P2) greymap with maxval <= 255.
ImageGrid read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const ImageGrid& img);

/// H lines of W comma-separated angles, "nan" where undefined.
std::string orientation_csv(const OrientationMap& map);

}  // namespace bordernet::vision
