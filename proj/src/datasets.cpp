#include "bordernet/datasets.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace bordernet::data {
namespace {

std::uint32_t read_be32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

void append_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << std::setw(8) << std::setfill('0') << v;
  return os.str();
}

void check_magic(std::span<const std::uint8_t> bytes, std::uint32_t expected, const char* what) {
  if (bytes.size() < 4) {
    throw IdxError(IdxError::Kind::truncated, std::string("IDX ") + what + ": header truncated (" +
                                                  std::to_string(bytes.size()) + " bytes)");
  }
  const std::uint32_t magic = read_be32(bytes, 0);
  if (magic != expected) {
    throw IdxError(IdxError::Kind::bad_magic, std::string("IDX ") + what + ": bad magic " +
                                                  hex32(magic) + " (expected " + hex32(expected) +
                                                  ")");
  }
}

}  // namespace

IdxImages parse_idx_images(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxImagesMagic, "images");
  if (bytes.size() < 16) {
    throw IdxError(IdxError::Kind::truncated,
                   "IDX images: header truncated (" + std::to_string(bytes.size()) + " of 16 bytes)");
  }
  IdxImages out;
  out.count = read_be32(bytes, 4);
  out.rows = read_be32(bytes, 8);
  out.cols = read_be32(bytes, 12);
  const std::uint64_t payload = std::uint64_t{out.count} * out.rows * out.cols;
  const std::uint64_t available = bytes.size() - 16;
  if (available < payload) {
    throw IdxError(IdxError::Kind::truncated,
                   "IDX images: truncated payload, header declares " + std::to_string(out.count) +
                       "x" + std::to_string(out.rows) + "x" + std::to_string(out.cols) + " = " +
                       std::to_string(payload) + " bytes but only " + std::to_string(available) +
                       " follow");
  }
  if (available > payload) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   "IDX images: " + std::to_string(available - payload) +
                       " trailing bytes beyond the declared dimensions");
  }
  out.pixels.assign(bytes.begin() + 16, bytes.end());
  return out;
}

std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> bytes) {
  check_magic(bytes, kIdxLabelsMagic, "labels");
  if (bytes.size() < 8) {
    throw IdxError(IdxError::Kind::truncated,
                   "IDX labels: header truncated (" + std::to_string(bytes.size()) + " of 8 bytes)");
  }
  const std::uint32_t count = read_be32(bytes, 4);
  const std::uint64_t available = bytes.size() - 8;
  if (available < count) {
    throw IdxError(IdxError::Kind::truncated, "IDX labels: truncated payload, header declares " +
                                                  std::to_string(count) + " labels but only " +
                                                  std::to_string(available) + " follow");
  }
  if (available > count) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   "IDX labels: " + std::to_string(available - count) +
                       " trailing bytes beyond the declared count");
  }
  return {bytes.begin() + 8, bytes.end()};
}

std::vector<std::uint8_t> encode_idx_images(const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   "IDX images: pixel buffer does not match the declared dimensions");
  }
  std::vector<std::uint8_t> out;
  out.reserve(16 + images.pixels.size());
  append_be32(out, kIdxImagesMagic);
  append_be32(out, images.count);
  append_be32(out, images.rows);
  append_be32(out, images.cols);
  out.insert(out.end(), images.pixels.begin(), images.pixels.end());
  return out;
}

std::vector<std::uint8_t> encode_idx_labels(std::span<const std::uint8_t> labels) {
  std::vector<std::uint8_t> out;
  out.reserve(8 + labels.size());
  append_be32(out, kIdxLabelsMagic);
  append_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.insert(out.end(), labels.begin(), labels.end());
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IdxError(IdxError::Kind::io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IdxError(IdxError::Kind::io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IdxError(IdxError::Kind::io, "short write to " + path.string());
}

IdxImages load_idx_images(const std::filesystem::path& path) {
  try {
    return parse_idx_images(read_file(path));
  } catch (const IdxError& e) {
    if (e.kind() == IdxError::Kind::io) throw;
    throw IdxError(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> load_idx_labels(const std::filesystem::path& path) {
  try {
    return parse_idx_labels(read_file(path));
  } catch (const IdxError& e) {
    if (e.kind() == IdxError::Kind::io) throw;
    throw IdxError(e.kind(), path.string() + ": " + e.what());
  }
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  write_file(path, encode_idx_images(images));
}

void write_idx_labels(const std::filesystem::path& path, std::span<const std::uint8_t> labels) {
  write_file(path, encode_idx_labels(labels));
}

std::span<const std::uint8_t> LabeledSet::raw(std::size_t i) const {
  return std::span<const std::uint8_t>(pixels).subspan(i * rows * cols, rows * cols);
}

vision::ImageGrid LabeledSet::image(std::size_t i) const {
  return vision::ImageGrid::from_bytes(rows, cols, raw(i));
}

LabeledSet LabeledSet::head(std::size_t n) const {
  if (n == 0 || n >= size()) return *this;
  LabeledSet out{name, rows, cols, {}, {}};
  out.pixels.assign(pixels.begin(), pixels.begin() + static_cast<std::ptrdiff_t>(n * rows * cols));
  out.labels.assign(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n));
  return out;
}

void LabeledSet::validate() const {
  const std::string where = name.empty() ? "dataset" : name;
  if (rows != kSide || cols != kSide) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   where + ": images are " + std::to_string(rows) + "x" + std::to_string(cols) +
                       ", expected 28x28");
  }
  if (pixels.size() != labels.size() * rows * cols) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   where + ": " + std::to_string(pixels.size() / (rows * cols)) + " images but " +
                       std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= kClasses) {
      throw IdxError(IdxError::Kind::dimension_mismatch,
                     where + ": label " + std::to_string(labels[i]) + " at index " +
                         std::to_string(i) + " is outside [0, 10)");
    }
  }
}

const std::vector<std::string>& dataset_names() {
  static const std::vector<std::string> names{"mnist", "fashion", "emnist-digits"};
  return names;
}

std::vector<std::string> dataset_files(const std::string& name) {
  if (name == "mnist" || name == "fashion") {
    return {"train-images-idx3-ubyte", "train-labels-idx1-ubyte", "t10k-images-idx3-ubyte",
            "t10k-labels-idx1-ubyte"};
  }
  if (name == "emnist-digits") {
    return {"emnist-digits-train-images-idx3-ubyte", "emnist-digits-train-labels-idx1-ubyte",
            "emnist-digits-test-images-idx3-ubyte", "emnist-digits-test-labels-idx1-ubyte"};
  }
  throw std::invalid_argument("unknown dataset '" + name + "' (expected mnist|fashion|emnist-digits)");
}

LabeledSet make_labeled_set(std::string name, IdxImages images, std::vector<std::uint8_t> labels) {
  if (images.count != labels.size()) {
    throw IdxError(IdxError::Kind::dimension_mismatch,
                   name + ": " + std::to_string(images.count) + " images but " +
                       std::to_string(labels.size()) + " labels");
  }
  LabeledSet set{std::move(name), images.rows, images.cols, std::move(images.pixels),
                 std::move(labels)};
  set.validate();
  return set;
}

void transpose_images(LabeledSet& set) {
  const std::size_t r = set.rows;
  const std::size_t c = set.cols;
  std::vector<std::uint8_t> tmp(r * c);
  for (std::size_t base = 0; base < set.pixels.size(); base += r * c) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) tmp[j * r + i] = set.pixels[base + i * c + j];
    }
    std::copy(tmp.begin(), tmp.end(), set.pixels.begin() + static_cast<std::ptrdiff_t>(base));
  }
  std::swap(set.rows, set.cols);
}

DatasetSplit load_dataset(const std::string& name, const std::filesystem::path& dir) {
  const std::vector<std::string> files = dataset_files(name);
  std::filesystem::path root = dir / name;
  if (!std::filesystem::exists(root / files[0])) root = dir;

  std::vector<std::string> missing;
  for (const auto& f : files) {
    if (!std::filesystem::exists(root / f)) missing.push_back(f);
  }
  if (!missing.empty()) {
    std::string msg = name + ": missing dataset files in " + (dir / name).string() + " or " +
                      dir.string() + ":";
    for (const auto& f : missing) msg += " " + f;
    throw IdxError(IdxError::Kind::io, msg);
  }

  DatasetSplit split{
      make_labeled_set(name + "/train", load_idx_images(root / files[0]),
                       load_idx_labels(root / files[1])),
      make_labeled_set(name + "/test", load_idx_images(root / files[2]),
                       load_idx_labels(root / files[3])),
  };
  if (name == "emnist-digits") {
    transpose_images(split.train);
    transpose_images(split.test);
  }
  return split;
}

NormalizedSet normalize(const LabeledSet& set) {
  NormalizedSet out{set.name, set.rows, set.cols, std::vector<float>(set.pixels.size()), {}};
  std::transform(set.pixels.begin(), set.pixels.end(), out.pixels.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v) / 255.0f; });
  out.labels.assign(set.labels.begin(), set.labels.end());
  return out;
}

LabeledSet occlude(const LabeledSet& set, const vision::OcclusionSpec& spec) {
  LabeledSet out = set;
  vision::occlude_bytes(out.pixels, out.rows, out.cols, vision::make_mask(out.rows, out.cols, spec));
  return out;
}

IdxImages to_idx(const LabeledSet& set) {
  return {static_cast<std::uint32_t>(set.size()), static_cast<std::uint32_t>(set.rows),
          static_cast<std::uint32_t>(set.cols), set.pixels};
}

}  // namespace bordernet::data
