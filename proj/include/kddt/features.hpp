#pragma once

#include <memory>
#include <vector>

#include "kddt/packet_data.hpp"
#include "kddt/tensor.hpp"

namespace kddt {

// Frozen per-packet feature source consumed by the encoder stacks. Both the
// pretrained language model and the static-embedding ablation implement it.
class FeatureExtractor {
public:
    virtual ~FeatureExtractor() = default;
    virtual int feature_dim() const = 0;
    // Per-token features, [l_pkt x dim]; rows at and past true_len are zero.
    virtual TensorPtr features(const TokenizedPacket& tp) const = 0;
    // Mean over the non-PAD positions.
    virtual std::vector<float> pooled(const TokenizedPacket& tp) const = 0;
};

// Frozen random projection table standing in for a pretrained text embedding:
// each token id maps to a fixed random vector, no context mixing.
class StaticEmbedExtractor : public FeatureExtractor {
public:
    StaticEmbedExtractor(int vocab_size, int dim, std::uint64_t seed);

    int feature_dim() const override { return dim_; }
    TensorPtr features(const TokenizedPacket& tp) const override;
    std::vector<float> pooled(const TokenizedPacket& tp) const override;

private:
    int vocab_size_;
    int dim_;
    std::vector<float> table_;
};

// Tokens plus cached pooled features for a whole dataset; built once per
// (dataset, extractor) pair and shared across training epochs.
struct PacketFeatures {
    std::vector<TokenizedPacket> tokens;
    std::vector<std::vector<float>> pooled;
    std::vector<int> labels;  // -1 when absent
    std::vector<std::uint64_t> timestamps;
    int feature_dim = 0;
    int l_pkt = 0;

    std::size_t size() const { return tokens.size(); }
};

PacketFeatures prepare_features(const LabeledDataset& ds, const Vocabulary& vocab,
                                const FeatureExtractor& fx, int l_pkt);

}  // namespace kddt
