#include "kddt/latent_codec.hpp"

#include <stdexcept>

namespace kddt {

using namespace ops;

GaussianEncoderParams make_gaussian_encoder(ParameterStore& store, const std::string& prefix,
                                            int feature_dim, int latent_dim, Rng& rng) {
    GaussianEncoderParams p;
    p.w_mu = store.add_weight(prefix + "/w_mu", {latent_dim, feature_dim}, feature_dim, rng);
    p.b_mu = store.add_bias(prefix + "/b_mu", {latent_dim});
    p.w_sigma = store.add_weight(prefix + "/w_sigma", {latent_dim, feature_dim}, feature_dim, rng);
    p.b_sigma = store.add_bias(prefix + "/b_sigma", {latent_dim});
    return p;
}

GaussianEncoderParams gaussian_encoder_from(const ParameterStore& store,
                                            const std::string& prefix) {
    GaussianEncoderParams p;
    p.w_mu = store.get(prefix + "/w_mu");
    p.b_mu = store.get(prefix + "/b_mu");
    p.w_sigma = store.get(prefix + "/w_sigma");
    p.b_sigma = store.get(prefix + "/b_sigma");
    return p;
}

GaussianEncoding gaussian_encode(const TensorPtr& pooled_features,
                                 const GaussianEncoderParams& p,
                                 const std::vector<float>& epsilon) {
    GaussianEncoding enc;
    enc.mu = relu(linear(pooled_features, p.w_mu, p.b_mu));
    // sigmoid keeps sigma inside (0,1); the floor keeps the KL term defined
    // when the pre-activation saturates at float32
    enc.sigma = clamp_min(sigmoid(linear(pooled_features, p.w_sigma, p.b_sigma)), 1e-6f);
    enc.h = reparameterize(enc.mu, enc.sigma, epsilon);
    enc.epsilon = epsilon;
    return enc;
}

SeqDecoderParams make_seq_decoder(ParameterStore& store, const std::string& prefix,
                                  int latent_dim, int hidden_channels, int out_channels,
                                  int kernel, int l_pkt, int vocab_size, Rng& rng) {
    SeqDecoderParams p;
    p.l_pkt = l_pkt;
    p.channels = hidden_channels;
    p.w_lin =
        store.add_weight(prefix + "/w_lin", {l_pkt * hidden_channels, latent_dim}, latent_dim, rng);
    p.b_lin = store.add_bias(prefix + "/b_lin", {l_pkt * hidden_channels});
    p.conv_k = store.add_weight(prefix + "/conv_k", {out_channels, hidden_channels, kernel},
                                hidden_channels * kernel, rng);
    p.conv_b = store.add_bias(prefix + "/conv_b", {out_channels});
    p.w_proj = store.add_weight(prefix + "/w_proj", {vocab_size, out_channels}, out_channels, rng);
    p.b_proj = store.add_bias(prefix + "/b_proj", {vocab_size});
    return p;
}

SeqDecoderParams seq_decoder_from(const ParameterStore& store, const std::string& prefix,
                                  int l_pkt, int channels) {
    SeqDecoderParams p;
    p.l_pkt = l_pkt;
    p.channels = channels;
    p.w_lin = store.get(prefix + "/w_lin");
    p.b_lin = store.get(prefix + "/b_lin");
    p.conv_k = store.get(prefix + "/conv_k");
    p.conv_b = store.get(prefix + "/conv_b");
    p.w_proj = store.get(prefix + "/w_proj");
    p.b_proj = store.get(prefix + "/b_proj");
    return p;
}

TensorPtr seq_decode_logits(const TensorPtr& h, const SeqDecoderParams& p, int n_rows) {
    int L = p.l_pkt, C = p.channels;
    if (n_rows < 1 || n_rows > L) {
        throw std::invalid_argument("seq_decode: row count " + std::to_string(n_rows) +
                                    " outside [1, " + std::to_string(L) + "]");
    }
    // Positions [0, n_rows) of the pooled output need conv columns up to
    // n_rows (window 2) which in turn need linear columns up to n_rows + 1.
    int lin_rows = std::min(n_rows + 2, L);
    int conv_keep = std::min(n_rows + 1, L);
    auto lin = reshape(linear_prefix(h, p.w_lin, p.b_lin, lin_rows * C), {lin_rows, C});
    auto conv_in = transpose2d(lin);                 // [C x lin_rows]
    auto conv_out = conv1d(conv_in, p.conv_k, p.conv_b);
    TensorPtr pooled;
    if (conv_keep == L && n_rows == L) {
        pooled = maxpool1d(conv_out, 2, 1, /*pad_right_zero=*/true);
    } else {
        pooled = maxpool1d(slice_cols_prefix(conv_out, conv_keep), 2, 1);
    }
    auto per_pos = transpose2d(pooled);  // [n_rows x out_ch]
    return linear_rows(per_pos, p.w_proj, p.b_proj);
}

TensorPtr seq_decode_hidden(const TensorPtr& h, const SeqDecoderParams& p) {
    auto lin = reshape(linear(h, p.w_lin, p.b_lin), {p.l_pkt, p.channels});
    auto conv_out = conv1d(transpose2d(lin), p.conv_k, p.conv_b);
    return maxpool1d(conv_out, 2, 1, /*pad_right_zero=*/true);
}

}  // namespace kddt
