// ibasr/harness/experiment.h
//
// Everything one run needs: data, model, loss weights, decoder, optimizer,
// seeds. Presets:
//
//   baseline  InterCTC transducer without the biasing modules, lambda_ib = 0,
//             transducer-only decoding
//   ib        biasing modules on, IB loss on, transducer-only decoding
//   ib-joint  same training as ib, decoded jointly with the CTC prefix score

#ifndef IBASR_HARNESS_EXPERIMENT_H_
#define IBASR_HARNESS_EXPERIMENT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/decoding/decoding.h"
#include "ibasr/harness/optimizer.h"
#include "ibasr/losses/objectives.h"
#include "ibasr/model/transducer_model.h"

namespace ibasr {

struct OptimizerConfig {
  double base_lr = 1e-3;
  std::size_t warmup = 500;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::size_t batch_size = 16;
  std::size_t epochs = 30;

  AdamConfig adam() const { return {beta1, beta2, eps}; }
  void validate() const;
};

struct ExperimentConfig {
  std::string preset = "ib";
  CorpusConfig data;
  std::uint64_t data_seed = 1;
  ModelConfig model;
  LossWeights loss;
  TrainingBiasOptions train_bias;
  DecodeConfig decode;
  OptimizerConfig optim;
  std::uint64_t seed = 7;
  std::vector<std::size_t> bias_sizes{0, 10, 50, 100};
  // Keep the CB value projections at zero during training.
  bool freeze_cb_values = false;
  std::size_t checkpoint_every = 200;  // steps; 0 disables periodic saves
  std::size_t log_every = 10;

  void validate() const;
};

// Preset names recognized by make_preset.
const std::vector<std::string>& preset_names();

// Applies a preset's model, loss and decoder settings on top of `base`.
// The ib presets keep the configured lambda_ib; ib-joint keeps a nonzero
// configured mu_ctc and otherwise uses the decoder defaults. Throws
// ConfigError for an unknown name.
ExperimentConfig make_preset(const std::string& name, ExperimentConfig base = {});

// Presets sharing trained weights: ib-joint reuses the ib model.
std::string training_preset(const std::string& preset);

}  // namespace ibasr

#endif  // IBASR_HARNESS_EXPERIMENT_H_
