#include "bordernet/vision.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace bordernet::vision {

ImageGrid::ImageGrid(std::size_t h, std::size_t w, RangeTag tag, double fill)
    : height(h), width(w), pixels(h * w, fill), range(tag) {}

ImageGrid ImageGrid::from_bytes(std::size_t h, std::size_t w, std::span<const std::uint8_t> bytes) {
  if (bytes.size() != h * w) {
    throw std::invalid_argument("ImageGrid::from_bytes: expected " + std::to_string(h * w) +
                                " bytes, got " + std::to_string(bytes.size()));
  }
  ImageGrid img(h, w, RangeTag::raw);
  std::copy(bytes.begin(), bytes.end(), img.pixels.begin());
  return img;
}

std::vector<std::uint8_t> ImageGrid::to_bytes() const {
  if (range != RangeTag::raw) throw std::logic_error("ImageGrid::to_bytes: image is normalized");
  std::vector<std::uint8_t> out(pixels.size());
  std::transform(pixels.begin(), pixels.end(), out.begin(), [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  });
  return out;
}

ImageGrid normalize(const ImageGrid& raw) {
  if (raw.range != RangeTag::raw) throw std::logic_error("normalize: image is already normalized");
  ImageGrid out = raw;
  out.range = RangeTag::normalized;
  for (double& v : out.pixels) v /= 255.0;
  return out;
}

GradientField gradient(const ImageGrid& img) {
  const std::size_t h = img.height;
  const std::size_t w = img.width;
  GradientField g{h, w, std::vector<double>(h * w, 0.0), std::vector<double>(h * w, 0.0)};
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      double& gx = g.ix[r * w + c];
      if (w > 1) {
        if (c == 0) {
          gx = img.at(r, 1) - img.at(r, 0);
        } else if (c == w - 1) {
          gx = img.at(r, w - 1) - img.at(r, w - 2);
        } else {
          gx = 0.5 * (img.at(r, c + 1) - img.at(r, c - 1));
        }
      }
      double& gy = g.iy[r * w + c];
      if (h > 1) {
        if (r == 0) {
          gy = img.at(1, c) - img.at(0, c);
        } else if (r == h - 1) {
          gy = img.at(h - 1, c) - img.at(h - 2, c);
        } else {
          gy = 0.5 * (img.at(r + 1, c) - img.at(r - 1, c));
        }
      }
    }
  }
  return g;
}

std::vector<double> apply_z(const GradientField& grad, double theta) {
  const double s = std::sin(theta);
  const double c = std::cos(theta);
  std::vector<double> out(grad.ix.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = -s * grad.ix[i] + c * grad.iy[i];
  return out;
}

std::vector<double> apply_z(const ImageGrid& img, double theta) {
  return apply_z(gradient(img), theta);
}

bool OrientationMap::defined(std::size_t r, std::size_t c) const {
  return !std::isnan(theta[r * width + c]);
}

OrientationMap orientation_map(const ImageGrid& img, int n_bins, double gradient_epsilon) {
  if (n_bins < 4) throw std::invalid_argument("orientation_map: n_bins must be >= 4");
  const GradientField grad = gradient(img);

  std::vector<double> bin_sin(static_cast<std::size_t>(n_bins));
  std::vector<double> bin_cos(static_cast<std::size_t>(n_bins));
  std::vector<double> bin_angle(static_cast<std::size_t>(n_bins));
  for (int k = 0; k < n_bins; ++k) {
    bin_angle[k] = 2.0 * std::numbers::pi * k / n_bins;
    bin_sin[k] = std::sin(bin_angle[k]);
    bin_cos[k] = std::cos(bin_angle[k]);
  }

  OrientationMap map;
  map.height = img.height;
  map.width = img.width;
  map.theta.assign(img.pixels.size(), OrientationMap::kUndefined);
  map.grad_mag.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double gx = grad.ix[i];
    const double gy = grad.iy[i];
    map.grad_mag[i] = std::hypot(gx, gy);
    if (map.grad_mag[i] < gradient_epsilon) continue;
    // Scores within rounding of each other count as ties.
    const double tie = 1e-12 * map.grad_mag[i];
    int best = 0;
    double best_value = gy;  // bin 0: sin = 0, cos = 1
    for (int k = 1; k < n_bins; ++k) {
      const double value = -bin_sin[k] * gx + bin_cos[k] * gy;
      if (value > best_value + tie) {
        best_value = value;
        best = k;
      }
    }
    map.theta[i] = bin_angle[best];
  }
  return map;
}

void OcclusionSpec::validate() const {
  if (w < 1 || s < 1) {
    throw std::invalid_argument("occlusion: w and s must be >= 1 (got w=" + std::to_string(w) +
                                ", s=" + std::to_string(s) + ")");
  }
  if (phase < 0) throw std::invalid_argument("occlusion: phase must be >= 0");
}

std::string to_string(OcclusionKind kind) {
  return kind == OcclusionKind::stripes ? "stripes" : "grid";
}

OcclusionKind parse_occlusion_kind(const std::string& text) {
  if (text == "stripes") return OcclusionKind::stripes;
  if (text == "grid") return OcclusionKind::grid;
  throw std::invalid_argument("unknown occlusion kind '" + text + "' (expected stripes|grid)");
}

OcclusionSpec parse_occlusion(const std::string& text) {
  std::stringstream ss(text);
  std::string kind;
  std::string w;
  std::string s;
  if (!std::getline(ss, kind, ',') || !std::getline(ss, w, ',') || !std::getline(ss, s, ',')) {
    throw std::invalid_argument("occlusion '" + text + "': expected kind,w,s");
  }
  OcclusionSpec spec{parse_occlusion_kind(kind), std::stoi(w), std::stoi(s)};
  spec.validate();
  return spec;
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(occluded.begin(), occluded.end(), std::uint8_t{1}));
}

Mask stripe_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec) {
  if (spec.kind != OcclusionKind::stripes) throw std::invalid_argument("stripe_mask: kind != stripes");
  spec.validate();
  const std::size_t period = static_cast<std::size_t>(spec.w + spec.s);
  Mask m{height, width, std::vector<std::uint8_t>(height * width, 0)};
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      m.occluded[r * width + c] =
          (r + c + static_cast<std::size_t>(spec.phase)) % period < static_cast<std::size_t>(spec.w);
    }
  }
  return m;
}

Mask grid_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec) {
  if (spec.kind != OcclusionKind::grid) throw std::invalid_argument("grid_mask: kind != grid");
  spec.validate();
  const std::size_t period = static_cast<std::size_t>(spec.w + spec.s);
  const auto w = static_cast<std::size_t>(spec.w);
  Mask m{height, width, std::vector<std::uint8_t>(height * width, 0)};
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      m.occluded[r * width + c] = (r % period < w) || (c % period < w);
    }
  }
  return m;
}

Mask make_mask(std::size_t height, std::size_t width, const OcclusionSpec& spec) {
  return spec.kind == OcclusionKind::stripes ? stripe_mask(height, width, spec)
                                             : grid_mask(height, width, spec);
}

ImageGrid occlude(const ImageGrid& raw, const OcclusionSpec& spec) {
  if (raw.range != RangeTag::raw) {
    throw std::logic_error("occlude: occlusion must be applied before normalization");
  }
  const Mask mask = make_mask(raw.height, raw.width, spec);
  ImageGrid out = raw;
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    if (mask.occluded[i]) out.pixels[i] = 0.0;
  }
  return out;
}

void occlude_bytes(std::span<std::uint8_t> images, std::size_t height, std::size_t width,
                   const Mask& mask) {
  const std::size_t area = height * width;
  if (mask.height != height || mask.width != width) {
    throw std::invalid_argument("occlude_bytes: mask shape does not match images");
  }
  if (area == 0 || images.size() % area != 0) {
    throw std::invalid_argument("occlude_bytes: buffer is not a whole number of images");
  }
  for (std::size_t base = 0; base < images.size(); base += area) {
    for (std::size_t i = 0; i < area; ++i) {
      if (mask.occluded[i]) images[base + i] = 0;
    }
  }
}

namespace {

// Next whitespace-delimited header token, skipping '#' comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  while (in) {
    int ch = in.get();
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) return tok;
      continue;
    }
    if (ch == EOF) break;
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

}  // namespace

ImageGrid read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  const std::string magic = pgm_token(in);
  if (magic != "P5" && magic != "P2") {
    throw std::runtime_error(path.string() + ": not a PGM file (magic '" + magic + "')");
  }
  const std::size_t w = std::stoul(pgm_token(in));
  const std::size_t h = std::stoul(pgm_token(in));
  const int maxval = std::stoi(pgm_token(in));
  if (maxval <= 0 || maxval > 255) {
    throw std::runtime_error(path.string() + ": unsupported maxval " + std::to_string(maxval));
  }
  ImageGrid img(h, w, RangeTag::raw);
  const double scale = 255.0 / maxval;
  if (magic == "P5") {
    std::vector<char> buf(h * w);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size())) {
      throw std::runtime_error(path.string() + ": truncated pixel data");
    }
    for (std::size_t i = 0; i < buf.size(); ++i) {
      img.pixels[i] = static_cast<unsigned char>(buf[i]) * scale;
    }
  } else {
    for (double& v : img.pixels) {
      const std::string tok = pgm_token(in);
      if (tok.empty()) throw std::runtime_error(path.string() + ": truncated pixel data");
      v = std::stoi(tok) * scale;
    }
  }
  return img;
}

void write_pgm(const std::filesystem::path& path, const ImageGrid& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double v : img.pixels) {
    const double byte = img.range == RangeTag::normalized ? v * 255.0 : v;
    out.put(static_cast<char>(std::clamp(std::lround(byte), 0L, 255L)));
  }
}

std::string orientation_csv(const OrientationMap& map) {
  std::ostringstream os;
  os.precision(17);
  for (std::size_t r = 0; r < map.height; ++r) {
    for (std::size_t c = 0; c < map.width; ++c) {
      if (c) os << ',';
      if (map.defined(r, c)) {
        os << map.theta[r * map.width + c];
      } else {
        os << "nan";
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace bordernet::vision
