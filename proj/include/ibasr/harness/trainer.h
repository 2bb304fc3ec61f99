// ibasr/harness/trainer.h
//
// Mini-batch training of the contextual transducer. Each step draws one bias
// list shared by the batch, builds transcript and IB targets, evaluates the
// weighted objective averaged over the batch, and applies one Adam update.
// Shuffling and bias sampling use separate seeded streams, so a run is a
// pure function of its configuration and can be resumed exactly from a
// checkpoint.

#ifndef IBASR_HARNESS_TRAINER_H_
#define IBASR_HARNESS_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/harness/experiment.h"
#include "ibasr/harness/optimizer.h"
#include "ibasr/losses/objectives.h"
#include "ibasr/model/checkpoint.h"
#include "ibasr/numerics/graph.h"

namespace ibasr {

struct BatchLoss {
  Var total;             // batch mean of the weighted objective
  LossComponents parts;  // batch means of the individual losses
};

// Objective of one batch sharing `bias.list`. Throws EvaluationError naming
// the loss term when any term is not finite.
BatchLoss batch_loss(Graph& g, std::span<const Utterance> batch,
                     const TrainingBias& bias, const ParameterSet& params,
                     const ModelConfig& model, const LossWeights& weights);

struct StepLog {
  std::size_t step = 0;
  std::size_t epoch = 0;
  double lr = 0.0;
  double total = 0.0;
  LossComponents parts;
};

class Trainer {
 public:
  // Copies the training utterances. The model vocabulary size is taken from
  // the lexicon. Throws ConfigError for an invalid configuration.
  Trainer(ExperimentConfig cfg, std::vector<Utterance> train, const Lexicon& lexicon);

  const ExperimentConfig& config() const { return cfg_; }
  const ParameterSet& params() const { return params_; }
  ParameterSet& mutable_params() { return params_; }
  const std::vector<StepLog>& curve() const { return curve_; }
  std::size_t step_count() const { return opt_.step; }
  std::size_t steps_per_epoch() const;
  std::size_t total_steps() const { return steps_per_epoch() * cfg_.optim.epochs; }
  bool done() const { return opt_.step >= total_steps(); }

  // One optimizer update on the next batch.
  StepLog step();

  // Steps until done() or `max_steps` more updates. Calls `on_step` after
  // every update. When `checkpoint_path` is non-empty a checkpoint is written
  // every checkpoint_every steps and at the end; if a step fails the latest
  // checkpoint is left in place and the error is rethrown with its path.
  void run(std::size_t max_steps = SIZE_MAX,
           const std::function<void(const StepLog&)>& on_step = {},
           const std::filesystem::path& checkpoint_path = {});

  // Complete training state: parameters, optimizer moments, stream
  // positions, loss curve and resolved configuration.
  Checkpoint snapshot() const;
  // Throws DataError if the checkpoint was written under a different
  // configuration. The epoch budget and logging intervals may differ.
  void restore(const Checkpoint& ckpt);

 private:
  void start_epoch();

  ExperimentConfig cfg_;
  std::vector<Utterance> train_;
  Lexicon lexicon_;
  ParameterSet params_;
  OptimState opt_;
  std::set<std::string> frozen_;
  std::mt19937_64 shuffle_rng_;
  std::mt19937_64 bias_rng_;
  std::vector<std::size_t> order_;
  std::size_t cursor_ = 0;
  std::size_t epoch_ = 0;
  std::vector<StepLog> curve_;
};

// Model parameters and resolved configuration stored in a checkpoint.
struct TrainedModel {
  ExperimentConfig config;
  ParameterSet params;
};
TrainedModel load_trained_model(const std::filesystem::path& path);

}  // namespace ibasr

#endif  // IBASR_HARNESS_TRAINER_H_
