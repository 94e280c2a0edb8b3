#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ytlc/corpus.hpp"
#include "ytlc/models.hpp"

namespace ytlc {

struct TrainConfig {
  double learning_rate = 1e-4;
  long batch_size = 256;
  long epochs = 25;
  bool class_weighting = true;
  std::uint64_t seed = 0;
  long eval_every = 0;  // extra mid-epoch validation every N steps; 0 = off
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;

  /// Paper presets per Tables 2/4/6; desk presets keep the epoch budgets but
  /// use batch/rate values sized for toy corpora.
  static TrainConfig preset(Variant v, Scale s);

  std::string to_toml() const;
  static TrainConfig from_toml(const std::string& text);
};

/// w_c = N / (6 * n_c); empty classes get weight 0. Throws on all-zero.
std::array<double, 6> compute_class_weights(const std::array<long, 6>& counts);

struct AdamState {
  struct Slot {
    TensorF m, v;
  };
  std::vector<Slot> slots;  // aligned with the trainable params
  long t = 0;

  void init(const nn::ParamRefs<float>& params);
};

class TrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One Adam update over the trainable parameters. Throws TrainError on a
/// non-finite gradient, naming the offending tensor.
void adam_step(const nn::ParamRefs<float>& params, AdamState& state,
               const TrainConfig& cfg);

struct EpochStats {
  long epoch = 0;
  double train_loss = 0;
  double train_accuracy = 0;
  double val_accuracy = 0;
  double val_weighted_f1 = 0;
};

struct TrainHistory {
  std::vector<EpochStats> epochs;
  long best_epoch = -1;  // -1 until the first validation pass
  double best_val_accuracy = 0;
};

/// Full optimization loop: seeded per-epoch shuffle, weighted cross-entropy,
/// Adam, per-epoch validation, best-epoch parameter retention (highest val
/// accuracy, earliest epoch on ties). With an empty validation split the
/// final epoch's parameters are kept.
TrainHistory fit(TextClassifier& clf, const DatasetSplit& splits,
                 const TrainConfig& cfg);

struct CheckpointMeta {
  long epoch = -1;
  double val_accuracy = 0;
  std::uint64_t seed = 0;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "LNSC" container: magic, u32 version, u64 header length, JSON header
/// (config + embedded vocabulary + tensor table + metadata), then raw
/// little-endian f32 payloads in table order.
void save_checkpoint(TextClassifier& clf, const std::string& path,
                     const CheckpointMeta& meta = {});
TextClassifier load_checkpoint(const std::string& path,
                               CheckpointMeta* meta_out = nullptr);

}  // namespace ytlc
