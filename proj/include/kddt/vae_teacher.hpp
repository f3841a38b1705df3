#pragma once

#include <cstdint>
#include <vector>

#include "kddt/features.hpp"
#include "kddt/latent_codec.hpp"
#include "kddt/packet_data.hpp"

namespace kddt {

struct VaeConfig {
    int latent_dim = 32;
    int decoder_hidden = 32;
    int conv_channels = 6;
    int conv_kernel = 3;
    float lr = 1e-3f;
    int batch_size = 12;
    int epochs = 5;
    float weight_decay = 0.01f;
};

struct VaeEncoding {
    TensorPtr mu;
    TensorPtr sigma;
    std::vector<float> epsilon;
    TensorPtr h;  // mu + epsilon * sigma
};

struct VaeDecoding {
    TensorPtr hidden;  // pre-projection decoder state, [out_ch x l_pkt]
    TensorPtr x_hat;   // [l_pkt x vocab], rows sum to 1
};

struct VaeLoss {
    TensorPtr kl;
    TensorPtr mll;
    TensorPtr total;  // kl + mll
};

// Packet autoencoder pretrained on out-of-domain traffic; its encoder serves
// as the distillation teacher.
class VaeTeacher {
public:
    VaeTeacher(VaeConfig cfg, int feature_dim, int l_pkt, int vocab_size, std::uint64_t seed);

    const VaeConfig& config() const { return cfg_; }
    ParameterStore& params() { return params_; }
    const ParameterStore& params() const { return params_; }
    int l_pkt() const { return l_pkt_; }
    int vocab_size() const { return vocab_size_; }
    int feature_dim() const { return feature_dim_; }

    VaeEncoding encode_pooled(const std::vector<float>& pooled,
                              const std::vector<float>& epsilon) const;
    VaeDecoding decode(const TensorPtr& h) const;
    TensorPtr decode_logits(const TensorPtr& h, int n_rows) const;

    // Deterministic soft target for distillation: the encoding at epsilon = 0.
    std::vector<float> soft_target(const std::vector<float>& pooled) const;

private:
    VaeConfig cfg_;
    int feature_dim_;
    int l_pkt_;
    int vocab_size_;
    ParameterStore params_;
};

VaeEncoding vae_encode(const VaeTeacher& vae, const FeatureExtractor& fx,
                       const TokenizedPacket& tp, const std::vector<float>& epsilon);

// kl + summed per-position cross entropy over the packet's non-PAD rows.
VaeLoss vae_loss(const VaeEncoding& enc, const VaeDecoding& dec, const TokenizedPacket& tp);

struct VaePretrainResult {
    std::vector<float> batch_losses;
    std::vector<float> epoch_losses;
};

VaePretrainResult vae_pretrain(VaeTeacher& vae, const PacketFeatures& corpus, std::uint64_t seed);

// Fraction of non-PAD positions whose argmax reconstruction matches the input.
double vae_reconstruction_accuracy(const VaeTeacher& vae, const PacketFeatures& corpus);

}  // namespace kddt
