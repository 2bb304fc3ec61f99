// ibasr/harness/experiment.cc

#include "ibasr/harness/experiment.h"

#include "ibasr/errors.h"

namespace ibasr {

void OptimizerConfig::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be positive");
  if (warmup == 0) throw ConfigError("warmup must be at least 1 step");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw ConfigError("Adam eps must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be at least 1");
}

void ExperimentConfig::validate() const {
  data.validate();
  model.validate();
  loss.validate();
  decode.validate();
  optim.validate();
  if (train_bias.max_phrases < train_bias.min_phrases || train_bias.max_phrase_words == 0) {
    throw ConfigError("training bias phrase counts are inconsistent");
  }
  if (model.feature_dim != data.feature_dim) {
    throw ConfigError("model feature_dim differs from the corpus feature_dim");
  }
  if (!model.biasing && loss.ib != 0.0) {
    throw ConfigError("the IB loss needs the biasing modules");
  }
  if (freeze_cb_values && !model.biasing) {
    throw ConfigError("freeze_cb_values needs the biasing modules");
  }
}

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"baseline", "ib", "ib-joint"};
  return names;
}

ExperimentConfig make_preset(const std::string& name, ExperimentConfig base) {
  base.preset = name;
  if (name == "baseline") {
    base.model.biasing = false;
    base.loss.ib = 0.0;
    base.decode.mu_ctc = 0.0;
    base.decode.mu_tr = 1.0;
  } else if (name == "ib") {
    base.model.biasing = true;
    base.decode.mu_ctc = 0.0;
    base.decode.mu_tr = 1.0;
  } else if (name == "ib-joint") {
    base.model.biasing = true;
    if (base.decode.mu_ctc == 0.0) {
      base.decode.mu_ctc = DecodeConfig{}.mu_ctc;
      base.decode.mu_tr = DecodeConfig{}.mu_tr;
    }
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  return base;
}

std::string training_preset(const std::string& preset) {
  return preset == "ib-joint" ? "ib" : preset;
}

}  // namespace ibasr
