#include "bordernet/nn/training.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <numeric>
#include <stdexcept>

namespace bordernet::nn {

Tensor<float> batch_tensor(const data::NormalizedSet& set, std::span<const std::size_t> indices) {
  const std::size_t area = set.rows * set.cols;
  Tensor<float> x({indices.size(), 1, set.rows, set.cols});
  float* dst = x.data().data();
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const float* src = set.pixels.data() + indices[k] * area;
    std::copy(src, src + area, dst + k * area);
  }
  return x;
}

void train_in_place(Model& model, const data::NormalizedSet& set, const TrainConfig& config) {
  if (set.size() == 0) throw std::invalid_argument("train: empty dataset");
  if (config.batch == 0) throw std::invalid_argument("train: batch size must be >= 1");
  if (config.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  for (int label : set.labels) {
    if (label < 0 || label >= model.spec().classes) {
      throw std::invalid_argument("train: label " + std::to_string(label) + " out of range");
    }
  }

  Adam<float> optimizer(model.trainable_parameters(), config.adam);
  std::mt19937_64 rng = make_rng(config.shuffle_seed, 0);
  std::vector<std::size_t> order(set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<int> labels;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += config.batch) {
      const std::size_t n = std::min(config.batch, order.size() - first);
      const std::span<const std::size_t> idx(order.data() + first, n);
      labels.resize(n);
      for (std::size_t k = 0; k < n; ++k) labels[k] = set.labels[idx[k]];
      loss_sum += model.loss_and_gradients(batch_tensor(set, idx), labels);
      optimizer.step();
      ++batches;
    }
    if (config.on_epoch) config.on_epoch(epoch, loss_sum / static_cast<double>(batches));
  }
}

Model train(const NetworkSpec& spec, const data::NormalizedSet& set, const TrainConfig& config) {
  Model model(spec);
  train_in_place(model, set, config);
  return model;
}

double evaluate(const Model& model, const data::NormalizedSet& set, std::size_t batch) {
  if (set.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  batch = std::max<std::size_t>(1, batch);
  std::vector<std::size_t> idx;
  std::size_t correct = 0;
  for (std::size_t first = 0; first < set.size(); first += batch) {
    const std::size_t n = std::min(batch, set.size() - first);
    idx.resize(n);
    std::iota(idx.begin(), idx.end(), first);
    const std::vector<int> pred = model.predict(batch_tensor(set, idx));
    for (std::size_t k = 0; k < n; ++k) correct += pred[k] == set.labels[first + k];
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

namespace {

constexpr char kMagic[8] = {'B', 'N', 'E', 'T', 'C', 'K', 'P', 'T'};

template <typename U>
void put_le(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename U>
  U le() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(bytes_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put_le<std::uint32_t>(out, kCheckpointVersion);
  put_le<std::uint32_t>(out, sizeof(float));
  const std::string spec = model.spec().to_json();
  put_le<std::uint64_t>(out, spec.size());
  out.insert(out.end(), spec.begin(), spec.end());
  const auto params = model.parameters();
  put_le<std::uint64_t>(out, params.size());
  for (const Parameter<float>* p : params) {
    put_le<std::uint64_t>(out, p->name.size());
    out.insert(out.end(), p->name.begin(), p->name.end());
    put_le<std::uint64_t>(out, p->value.size());
    for (float v : p->value.values()) put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

Model decode_checkpoint(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.str(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error("checkpoint: bad magic");
  }
  const auto version = in.le<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  if (in.le<std::uint32_t>() != sizeof(float)) throw std::runtime_error("checkpoint: scalar size");
  const auto spec_len = in.le<std::uint64_t>();
  Model model(NetworkSpec::from_json(in.str(spec_len)));

  auto params = model.parameters();
  if (in.le<std::uint64_t>() != params.size()) {
    throw std::runtime_error("checkpoint: parameter count does not match the network spec");
  }
  for (Parameter<float>* p : params) {
    const auto name = in.str(in.le<std::uint64_t>());
    if (name != p->name) throw std::runtime_error("checkpoint: expected tensor '" + p->name + "', found '" + name + "'");
    if (in.le<std::uint64_t>() != p->value.size()) {
      throw std::runtime_error("checkpoint: tensor '" + name + "' has the wrong size");
    }
    for (float& v : p->value.values()) v = std::bit_cast<float>(in.le<std::uint32_t>());
  }
  if (!in.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return model;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
  data::write_file(path, encode_checkpoint(model));
}

Model load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(data::read_file(path));
}

}  // namespace bordernet::nn
