// ibasr/harness/trainer.cc

#include "ibasr/harness/trainer.h"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ibasr/config_json.h"
#include "ibasr/context/ib_target.h"
#include "ibasr/errors.h"
#include "ibasr/losses/ctc.h"
#include "ibasr/losses/rnnt.h"
#include "ibasr/model/transducer_model.h"
#include "ibasr/numerics/ops.h"

namespace ibasr {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5eedf00d;
constexpr std::uint64_t kBiasStream = 0xb1a5b1a5;

std::string rng_state(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

void set_rng_state(std::mt19937_64& rng, const std::string& s) {
  std::istringstream is(s);
  is >> rng;
  if (!is) throw DataError("corrupt random stream state in checkpoint");
}

void check_finite(Var v, const char* term, const std::string& utt) {
  if (!std::isfinite(v.value().item())) {
    throw EvaluationError(std::string("non-finite ") + term + " loss on utterance " + utt);
  }
}

}  // namespace

BatchLoss batch_loss(Graph& g, std::span<const Utterance> batch,
                     const TrainingBias& bias, const ParameterSet& params,
                     const ModelConfig& model, const LossWeights& weights) {
  if (batch.empty()) throw ContractError("batch_loss: empty batch");
  if (bias.covered.size() != batch.size()) {
    throw DimensionError("batch_loss: one covered-span list per utterance expected");
  }
  const Var ctx = model.biasing ? encode_context(g, bias.list, params, model) : Var{};
  const double inv = 1.0 / static_cast<double>(batch.size());
  BatchLoss out;
  std::vector<Var> totals;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Utterance& u = batch[i];
    const ForwardOutput f = forward(g, u.features, u.transcript, ctx, params, model);
    const Var ctc = ctc_loss(f.ctc_logp, u.transcript);
    check_finite(ctc, "CTC", u.id);
    const Var ic = interctc_loss(f.interctc_logp, u.transcript);
    check_finite(ic, "InterCTC", u.id);
    Var ib = g.constant(Tensor::scalar(0.0));
    if (weights.ib != 0.0) {
      const auto target = ib_target(u.transcript, bias.covered[i]);
      ib = ib_loss(f.ib_logp, target);
      check_finite(ib, "IB", u.id);
    }
    const Var tr = rnnt_loss(f.lattice, u.transcript);
    check_finite(tr, "transducer", u.id);
    totals.push_back(combine_objectives(ctc, ic, ib, tr, weights));
    out.parts.ctc += inv * ctc.value().item();
    out.parts.interctc += inv * ic.value().item();
    out.parts.ib += inv * ib.value().item();
    out.parts.transducer += inv * tr.value().item();
  }
  out.total = scale(sum(concat(totals, 0)), inv);
  return out;
}

Trainer::Trainer(ExperimentConfig cfg, std::vector<Utterance> train, const Lexicon& lexicon)
    : cfg_(std::move(cfg)), train_(std::move(train)), lexicon_(lexicon) {
  cfg_.model.vocab_size = lexicon_.vocab().size();
  cfg_.model.feature_dim = cfg_.data.feature_dim;
  cfg_.validate();
  if (train_.empty()) throw ConfigError("no training utterances");
  params_ = init_model(cfg_.model, cfg_.seed);
  if (cfg_.freeze_cb_values) {
    for (const auto& name : cb_value_parameters(cfg_.model)) {
      params_[name] = Tensor::zeros_like(params_[name]);
      frozen_.insert(name);
    }
  }
  shuffle_rng_.seed(cfg_.seed ^ kShuffleStream);
  bias_rng_.seed(cfg_.seed ^ kBiasStream);
  order_.resize(train_.size());
  start_epoch();
}

std::size_t Trainer::steps_per_epoch() const {
  return (train_.size() + cfg_.optim.batch_size - 1) / cfg_.optim.batch_size;
}

void Trainer::start_epoch() {
  for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = i;
  std::shuffle(order_.begin(), order_.end(), shuffle_rng_);
  cursor_ = 0;
}

StepLog Trainer::step() {
  if (cursor_ >= order_.size()) {
    ++epoch_;
    start_epoch();
  }
  const std::size_t end = std::min(order_.size(), cursor_ + cfg_.optim.batch_size);
  std::vector<Utterance> batch;
  for (std::size_t i = cursor_; i < end; ++i) batch.push_back(train_[order_[i]]);
  cursor_ = end;

  const TrainingBias bias = sample_training_bias(batch, lexicon_, bias_rng_, cfg_.train_bias);
  Graph g;
  const BatchLoss loss = batch_loss(g, batch, bias, params_, cfg_.model, cfg_.loss);
  g.backward(loss.total);
  const double lr = lr_schedule(opt_.step + 1, cfg_.optim.base_lr, cfg_.optim.warmup);
  adam_step(params_, g.parameter_gradients(params_), opt_, lr, cfg_.optim.adam(), frozen_);

  StepLog log{opt_.step, epoch_, lr, loss.total.value().item(), loss.parts};
  curve_.push_back(log);
  return log;
}

void Trainer::run(std::size_t max_steps, const std::function<void(const StepLog&)>& on_step,
                  const std::filesystem::path& checkpoint_path) {
  const bool saving = !checkpoint_path.empty();
  for (std::size_t n = 0; n < max_steps && !done(); ++n) {
    StepLog log;
    try {
      log = step();
    } catch (const EvaluationError& e) {
      if (saving && std::filesystem::exists(checkpoint_path)) {
        throw EvaluationError(std::string(e.what()) + "; last good checkpoint: " +
                              checkpoint_path.string());
      }
      throw;
    }
    if (on_step) on_step(log);
    if (saving && cfg_.checkpoint_every > 0 && log.step % cfg_.checkpoint_every == 0) {
      save_checkpoint(checkpoint_path, snapshot());
    }
  }
  if (saving) save_checkpoint(checkpoint_path, snapshot());
}

Checkpoint Trainer::snapshot() const {
  Checkpoint ck;
  ck.meta["config"] = cfg_;
  ck.meta["step"] = opt_.step;
  ck.meta["epoch"] = epoch_;
  ck.meta["cursor"] = cursor_;
  ck.meta["order"] = order_;
  ck.meta["shuffle_rng"] = rng_state(shuffle_rng_);
  ck.meta["bias_rng"] = rng_state(bias_rng_);
  nlohmann::json curve = nlohmann::json::array();
  for (const auto& s : curve_) {
    curve.push_back({s.step, s.epoch, s.lr, s.total, s.parts.ctc, s.parts.interctc,
                     s.parts.ib, s.parts.transducer});
  }
  ck.meta["curve"] = std::move(curve);
  for (const auto& [name, t] : params_) ck.tensors.emplace("p/" + name, t);
  for (const auto& [name, t] : opt_.m) ck.tensors.emplace("m/" + name, t);
  for (const auto& [name, t] : opt_.v) ck.tensors.emplace("v/" + name, t);
  return ck;
}

void Trainer::restore(const Checkpoint& ck) {
  try {
    ExperimentConfig saved = ck.meta.at("config").get<ExperimentConfig>();
    saved.optim.epochs = cfg_.optim.epochs;
    saved.checkpoint_every = cfg_.checkpoint_every;
    saved.log_every = cfg_.log_every;
    if (nlohmann::json(saved) != nlohmann::json(cfg_)) {
      throw DataError("checkpoint was written with a different configuration");
    }
    ParameterSet params;
    OptimState opt;
    for (const auto& [key, t] : ck.tensors) {
      const std::string name = key.substr(2);
      if (key.rfind("p/", 0) == 0) {
        params.emplace(name, t);
      } else if (key.rfind("m/", 0) == 0) {
        opt.m.emplace(name, t);
      } else if (key.rfind("v/", 0) == 0) {
        opt.v.emplace(name, t);
      }
    }
    if (params.size() != params_.size()) throw DataError("checkpoint parameter set differs");
    for (const auto& [name, t] : params_) {
      auto it = params.find(name);
      if (it == params.end() || it->second.shape() != t.shape()) {
        throw DataError("checkpoint lacks parameter " + name);
      }
    }
    opt.step = ck.meta.at("step").get<std::size_t>();
    std::vector<std::size_t> order = ck.meta.at("order").get<std::vector<std::size_t>>();
    if (order.size() != train_.size()) throw DataError("checkpoint order length differs");
    std::vector<StepLog> curve;
    for (const auto& r : ck.meta.at("curve")) {
      curve.push_back({r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>(),
                       r.at(2).get<double>(), r.at(3).get<double>(),
                       {r.at(4).get<double>(), r.at(5).get<double>(),
                        r.at(6).get<double>(), r.at(7).get<double>()}});
    }
    set_rng_state(shuffle_rng_, ck.meta.at("shuffle_rng").get<std::string>());
    set_rng_state(bias_rng_, ck.meta.at("bias_rng").get<std::string>());
    params_ = std::move(params);
    opt_ = std::move(opt);
    order_ = std::move(order);
    cursor_ = ck.meta.at("cursor").get<std::size_t>();
    epoch_ = ck.meta.at("epoch").get<std::size_t>();
    curve_ = std::move(curve);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed training checkpoint: ") + e.what());
  }
}

TrainedModel load_trained_model(const std::filesystem::path& path) {
  const Checkpoint ck = load_checkpoint(path);
  TrainedModel m;
  try {
    m.config = ck.meta.at("config").get<ExperimentConfig>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError("checkpoint has no usable configuration: " + std::string(e.what()));
  }
  for (const auto& [key, t] : ck.tensors) {
    if (key.rfind("p/", 0) == 0) m.params.emplace(key.substr(2), t);
  }
  if (m.params.empty()) throw DataError("checkpoint holds no model parameters");
  return m;
}

}  // namespace ibasr
