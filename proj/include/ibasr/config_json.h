// ibasr/config_json.h
//
// JSON mappings for every configuration struct. Missing keys keep their
// defaults, so hand-written config files only need the fields they change.

#ifndef IBASR_CONFIG_JSON_H_
#define IBASR_CONFIG_JSON_H_

#include "json.hpp"

#include "ibasr/datagen/bias_list.h"
#include "ibasr/datagen/corpus.h"
#include "ibasr/decoding/decoding.h"
#include "ibasr/harness/experiment.h"
#include "ibasr/losses/objectives.h"
#include "ibasr/model/transducer_model.h"

namespace ibasr {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    CorpusConfig, vocab_words, rare_words, acoustic_units, max_word_tokens,
    frames_per_token, feature_dim, noise, variant_offset, train_utterances,
    test_utterances, min_words, max_words, rare_rate, rare_utterance_fraction,
    max_test_rare)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    ModelConfig, feature_dim, vocab_size, width, layers, heads, ffn, subsample,
    taps, biasing, propagate_fused, cb_heads, cb_output_projection, cb_query_norm,
    ctx_embed, ctx_hidden, ctx_layers, ctx_proj_gain, joiner)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(LossWeights, ae, ic, ib)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(TrainingBiasOptions, min_phrases,
                                                max_phrases, max_phrase_words, l_max)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DecodeConfig, k_beam, mu_ctc, mu_tr,
                                                max_symbols_per_frame)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OptimizerConfig, base_lr, warmup,
                                                beta1, beta2, eps, batch_size, epochs)

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(
    ExperimentConfig, preset, data, data_seed, model, loss, train_bias, decode,
    optim, seed, bias_sizes, freeze_cb_values, checkpoint_every, log_every)

}  // namespace ibasr

#endif  // IBASR_CONFIG_JSON_H_
