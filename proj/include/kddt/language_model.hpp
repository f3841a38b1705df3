#pragma once

#include <cstdint>
#include <vector>

#include "kddt/features.hpp"
#include "kddt/lstm.hpp"
#include "kddt/optimizer.hpp"
#include "kddt/packet_data.hpp"
#include "kddt/param_store.hpp"

namespace kddt {

struct LMConfig {
    int vocab_size = 260;
    int embed_dim = 64;
    int hidden_dim = 64;
    int context_len = 32;
    float lr = 1e-3f;
    int batch_size = 12;
    int epochs = 3;
    float weight_decay = 0.01f;
};

// One next-token training sample: a fixed-length window and the token that
// follows it. Windows never cross packet boundaries.
struct LMSample {
    std::vector<int> ctx;
    int tgt = 0;
};

// Embedding -> bi-directional LSTM (directions summed) -> mean pool ->
// projection -> softmax over the vocabulary.
class LMModel {
public:
    LMModel(LMConfig cfg, std::uint64_t seed);

    const LMConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }

    // Probability vector over the vocabulary for a context of length L.
    TensorPtr forward(const std::vector<int>& ctx) const;
    // Pre-softmax logits (training path).
    TensorPtr forward_logits(const std::vector<int>& ctx) const;
    // Summed bi-LSTM hidden states for an arbitrary token sequence, [n x H].
    TensorPtr hidden_states(const std::vector<int>& ids) const;

private:
    LMConfig cfg_;
    ParameterStore params_;
};

// Sliding stride-1 windows confined to each packet's unpadded tokens.
std::vector<LMSample> make_lm_samples(const std::vector<TokenizedPacket>& packets,
                                      int context_len);

struct LmTrainResult {
    std::vector<float> batch_losses;
    std::vector<float> epoch_losses;
};

LmTrainResult lm_train(LMModel& model, const std::vector<TokenizedPacket>& corpus,
                       std::uint64_t seed);

// exp(-(1/n) sum log P(w_i | preceding window)); probabilities clamped at 1e-12.
double lm_perplexity(const LMModel& model, const std::vector<TokenizedPacket>& heldout);
double perplexity_from_probs(const std::vector<double>& probs);

// Per-token features of a tokenized packet, [l_pkt x hidden]. Rows at and
// past true_len are zero; the model is frozen (no gradients flow into it).
TensorPtr lm_extract_features(const LMModel& model, const TokenizedPacket& tp);

class LmFeatureExtractor : public FeatureExtractor {
public:
    explicit LmFeatureExtractor(const LMModel& model) : model_(model) {}
    int feature_dim() const override { return model_.config().hidden_dim; }
    TensorPtr features(const TokenizedPacket& tp) const override;
    std::vector<float> pooled(const TokenizedPacket& tp) const override;

private:
    const LMModel& model_;
};

}  // namespace kddt
