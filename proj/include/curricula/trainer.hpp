#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "curricula/rng.hpp"
#include "curricula/sampling.hpp"

namespace curricula {

enum class Architecture { Linear, OneHidden };

std::string to_string(Architecture arch);
Architecture parse_architecture(std::string_view text);

/// Shape of the reference classifier. Linear maps input_dim -> classes;
/// OneHidden inserts a tanh layer of `hidden` units. Parameters live in one
/// flat vector laid out as w1, b1 [, w2, b2].
struct ModelShape {
  Architecture arch = Architecture::Linear;
  int input_dim = 0;
  int hidden = 0;
  int classes = 12;

  std::size_t param_count() const;
  std::size_t w1_offset() const { return 0; }
  std::size_t b1_offset() const;
  std::size_t w2_offset() const;
  std::size_t b2_offset() const;
  void validate() const;

  bool operator==(const ModelShape&) const = default;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;

  bool operator==(const AdamWConfig&) const = default;
};

struct OptimizerState {
  std::uint64_t step_count = 0;
  std::vector<double> m;
  std::vector<double> v;
  AdamWConfig hp;
};

struct LineageStage {
  std::string strategy;
  int round_index = 0;

  bool operator==(const LineageStage&) const = default;
};

/// Model weights plus optimizer and RNG state; the unit of handoff between
/// curriculum rounds. save/load round-trips byte-identically.
struct ModelCheckpoint {
  static constexpr std::uint16_t kFormatVersion = 1;

  ModelShape shape;
  std::vector<double> params;
  OptimizerState opt;
  Rng::State rng_state{};
  std::uint64_t epochs_trained = 0;
  std::vector<LineageStage> lineage;
};

/// Fresh checkpoint: weights uniform in (-1, 1)/sqrt(fan_in), biases zero,
/// optimizer moments zeroed.
ModelCheckpoint init_model(Architecture arch, int input_dim, std::uint64_t seed,
                           int hidden = 0);

/// Class probabilities (softmax over logits) for one feature vector.
std::vector<double> forward(const ModelShape& shape, const std::vector<double>& params,
                            std::span<const double> features);

struct LossGrad {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean cross-entropy over the batch and its full-parameter gradient.
LossGrad loss_and_grad(const ModelShape& shape, const std::vector<double>& params,
                       std::span<const TrainingSample* const> batch);

/// One decoupled-weight-decay Adam update at learning rate `lr`.
void adamw_step(ModelCheckpoint& ckpt, const std::vector<double>& grad, double lr);

struct TrainResult {
  std::uint64_t iterations = 0;
  std::vector<double> loss_trace;
};

/// Seeded-shuffle epoch training: sequential minibatches (last may be short),
/// one adamw_step per batch. The shuffle of epoch k is a pure function of
/// (seed, checkpoint.epochs_trained), so chunked calls with the same seed
/// continue bit-exactly where a previous call stopped.
TrainResult train_epochs(ModelCheckpoint& ckpt, const SamplePool& pool, int batch_size,
                         double lr, int epochs, std::uint64_t seed);

/// Fraction of samples whose argmax prediction matches the label
/// (argmax ties break toward the smaller class id).
double top1_accuracy(const ModelCheckpoint& ckpt, const SamplePool& pool);

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace curricula
