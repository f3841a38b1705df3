#pragma once

#include <string>
#include <vector>

#include "kddt/ops.hpp"
#include "kddt/param_store.hpp"

namespace kddt {

// Gaussian packet encoder: pooled features -> relu(linear) for the mean,
// sigmoid(linear) for the deviation, then the reparameterized sample
// h = mu + eps * sigma. Shared by the teacher and the twin's encoder.
struct GaussianEncoderParams {
    TensorPtr w_mu, b_mu;
    TensorPtr w_sigma, b_sigma;

    int latent_dim() const { return w_mu ? w_mu->dim(0) : 0; }
};

GaussianEncoderParams make_gaussian_encoder(ParameterStore& store, const std::string& prefix,
                                            int feature_dim, int latent_dim, Rng& rng);
GaussianEncoderParams gaussian_encoder_from(const ParameterStore& store,
                                            const std::string& prefix);

struct GaussianEncoding {
    TensorPtr mu;
    TensorPtr sigma;  // in (0,1), floored at 1e-6
    TensorPtr h;
    std::vector<float> epsilon;
};

GaussianEncoding gaussian_encode(const TensorPtr& pooled_features,
                                 const GaussianEncoderParams& p,
                                 const std::vector<float>& epsilon);

// Sequence decoder: latent -> linear to (l_pkt x channels) -> conv ->
// length-preserving maxpool -> per-position projection to the vocabulary.
struct SeqDecoderParams {
    TensorPtr w_lin, b_lin;    // [(l_pkt*channels) x latent], position-major rows
    TensorPtr conv_k, conv_b;  // [out_ch x channels x k]
    TensorPtr w_proj, b_proj;  // [vocab x out_ch]
    int l_pkt = 0;
    int channels = 0;

    int vocab_size() const { return w_proj ? w_proj->dim(0) : 0; }
};

SeqDecoderParams make_seq_decoder(ParameterStore& store, const std::string& prefix,
                                  int latent_dim, int hidden_channels, int out_channels,
                                  int kernel, int l_pkt, int vocab_size, Rng& rng);
SeqDecoderParams seq_decoder_from(const ParameterStore& store, const std::string& prefix,
                                  int l_pkt, int channels);

// Logits for positions [0, n_rows); identical to the first n_rows rows of the
// full-length decode, computing only what those rows need.
TensorPtr seq_decode_logits(const TensorPtr& h, const SeqDecoderParams& p, int n_rows);

// Pre-projection decoder state for the full packet, [out_ch x l_pkt].
TensorPtr seq_decode_hidden(const TensorPtr& h, const SeqDecoderParams& p);

}  // namespace kddt
