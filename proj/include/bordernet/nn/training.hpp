#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "bordernet/datasets.hpp"
#include "bordernet/nn/adam.hpp"
#include "bordernet/nn/network.hpp"

namespace bordernet::nn {

struct TrainConfig {
  int epochs = 10;
  std::size_t batch = 64;
  /// Seeds the per-epoch shuffle (stream 0 of make_rng). Initialization is
  /// governed separately by NetworkSpec::seed.
  std::uint64_t shuffle_seed = 42;
  AdamConfig adam{};
  /// Called after every epoch with (epoch index, mean training loss).
  std::function<void(int, double)> on_epoch;
};

using Model = Network<float>;

/// Trains a fresh network built from `spec` with ADAM. Deterministic given
/// the spec seed and shuffle seed: fixed shuffle order, fixed init draws and
/// sequential reductions.
Model train(const NetworkSpec& spec, const data::NormalizedSet& set, const TrainConfig& config);

/// Continues training an existing model in place.
void train_in_place(Model& model, const data::NormalizedSet& set, const TrainConfig& config);

/// Fraction of samples whose argmax prediction equals the label.
double evaluate(const Model& model, const data::NormalizedSet& set, std::size_t batch = 500);

/// Gathers the listed samples into an (n, 1, rows, cols) tensor.
Tensor<float> batch_tensor(const data::NormalizedSet& set, std::span<const std::size_t> indices);

/// Versioned binary checkpoint:
///   "BNETCKPT" | u32 version | u32 scalar bytes | u64 spec length | spec JSON
///   | u64 tensor count | per tensor: u64 name length, name, u64 n, n floats
/// Integers and floats are little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_checkpoint(const Model& model);
Model decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

}  // namespace bordernet::nn
