#pragma once

// IDX containers and the MNIST-family datasets built on them.
//
// Image files: big-endian u32 magic 0x00000803, u32 count, u32 rows, u32 cols,
// then count*rows*cols unsigned bytes, row-major.
// Label files: big-endian u32 magic 0x00000801, u32 count, then count bytes.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bordernet/vision.hpp"

namespace bordernet::data {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

class IdxError : public std::runtime_error {
 public:
  enum class Kind { io, bad_magic, truncated, dimension_mismatch };

  IdxError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_idx_images(const IdxImages& images);
std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels);

IdxImages load_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

inline constexpr std::size_t kSide = 28;
inline constexpr int kClasses = 10;

/// Raw (byte-range) labelled images; all 28x28, labels in [0, 10).
struct LabeledSet {
  std::string name;
  std::size_t rows = kSide;
  std::size_t cols = kSide;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return labels.size(); }
  std::span<const std::uint8_t> raw(std::size_t i) const;
  vision::ImageGrid image(std::size_t i) const;

  /// First n samples (all of them if n == 0 or n >= size()).
  LabeledSet head(std::size_t n) const;

  /// Throws IdxError(dimension_mismatch) when the invariants do not hold.
  void validate() const;
};

/// Pixels scaled to [0, 1], ready for the network.
struct NormalizedSet {
  std::string name;
  std::size_t rows = kSide;
  std::size_t cols = kSide;
  std::vector<float> pixels;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
};

struct DatasetSplit {
  LabeledSet train;
  LabeledSet test;
};

/// Names accepted by load_dataset.
const std::vector<std::string>& dataset_names();

/// Expected IDX file names for a dataset, in train-images, train-labels,
/// test-images, test-labels order.
std::vector<std::string> dataset_files(const std::string& name);

/// Loads `<dir>/<name>/` (falling back to `<dir>/`). EMNIST rasters are
/// transposed on load. Missing files are reported by expected name.
DatasetSplit load_dataset(const std::string& name, const std::filesystem::path& dir);

/// Builds a LabeledSet from IDX parts; counts and dimensions must agree.
LabeledSet make_labeled_set(std::string name, IdxImages images, std::vector<std::uint8_t> labels);

/// Swaps rows and columns of every image in place.
void transpose_images(LabeledSet& set);

NormalizedSet normalize(const LabeledSet& set);

/// Copy with every image blacked out under the occlusion mask.
LabeledSet occlude(const LabeledSet& set, const vision::OcclusionSpec& spec);

IdxImages to_idx(const LabeledSet& set);

}  // namespace bordernet::data
