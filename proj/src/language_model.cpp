#include "kddt/language_model.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kddt/ops.hpp"

namespace kddt {

using namespace ops;

LMModel::LMModel(LMConfig cfg, std::uint64_t seed) : cfg_(cfg) {
    if (cfg_.vocab_size < 2 || cfg_.embed_dim < 1 || cfg_.hidden_dim < 1 ||
        cfg_.context_len < 1) {
        throw std::invalid_argument("lm: config sizes must be positive");
    }
    Rng rng(seed);
    params_.add_weight("lm/embed", {cfg_.vocab_size, cfg_.embed_dim}, cfg_.embed_dim, rng);
    make_lstm_params(params_, "lm/fwd", cfg_.embed_dim, cfg_.hidden_dim, rng);
    make_lstm_params(params_, "lm/bwd", cfg_.embed_dim, cfg_.hidden_dim, rng);
    params_.add_weight("lm/proj/w", {cfg_.vocab_size, cfg_.hidden_dim}, cfg_.hidden_dim, rng);
    params_.add_bias("lm/proj/b", {cfg_.vocab_size});
}

TensorPtr LMModel::hidden_states(const std::vector<int>& ids) const {
    if (ids.empty()) throw std::invalid_argument("lm: empty token sequence");
    auto emb = embedding_lookup(ids, params_.get("lm/embed"));
    return bilstm_forward(emb, lstm_params_from(params_, "lm/fwd"),
                          lstm_params_from(params_, "lm/bwd"));
}

TensorPtr LMModel::forward_logits(const std::vector<int>& ctx) const {
    if (static_cast<int>(ctx.size()) != cfg_.context_len) {
        throw std::invalid_argument("lm: context length " + std::to_string(ctx.size()) +
                                    " does not match configured " +
                                    std::to_string(cfg_.context_len));
    }
    auto hseq = hidden_states(ctx);
    auto pooled = mean_pool_rows(hseq, cfg_.context_len);
    return linear(pooled, params_.get("lm/proj/w"), params_.get("lm/proj/b"));
}

TensorPtr LMModel::forward(const std::vector<int>& ctx) const {
    return softmax(forward_logits(ctx));
}

std::vector<LMSample> make_lm_samples(const std::vector<TokenizedPacket>& packets,
                                      int context_len) {
    std::vector<LMSample> samples;
    for (const auto& tp : packets) {
        for (int t = context_len; t < tp.true_len; ++t) {
            LMSample s;
            s.ctx.assign(tp.ids.begin() + (t - context_len), tp.ids.begin() + t);
            s.tgt = tp.ids[t];
            samples.push_back(std::move(s));
        }
    }
    return samples;
}

LmTrainResult lm_train(LMModel& model, const std::vector<TokenizedPacket>& corpus,
                       std::uint64_t seed) {
    const LMConfig& cfg = model.config();
    auto samples = make_lm_samples(corpus, cfg.context_len);
    if (samples.empty()) {
        throw std::invalid_argument(
            "lm_train: corpus yields no training windows (packets shorter than context+1?)");
    }
    Rng rng(seed);
    AdamW opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay});
    LmTrainResult result;
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += cfg.batch_size) {
            std::size_t end = std::min(order.size(), at + cfg.batch_size);
            std::vector<TensorPtr> losses;
            losses.reserve(end - at);
            for (std::size_t i = at; i < end; ++i) {
                const auto& s = samples[order[i]];
                losses.push_back(cross_entropy_logits(model.forward_logits(s.ctx), s.tgt));
            }
            auto loss = mean_scalars(losses);
            float lv = loss->value();
            if (!std::isfinite(lv)) {
                throw std::runtime_error("lm_train: non-finite loss at batch " +
                                         std::to_string(result.batch_losses.size()));
            }
            model.params().zero_grads();
            backward(loss);
            opt.step(model.params());
            result.batch_losses.push_back(lv);
            epoch_sum += lv;
            ++batches;
        }
        result.epoch_losses.push_back(static_cast<float>(epoch_sum / std::max<std::size_t>(1, batches)));
    }
    return result;
}

double perplexity_from_probs(const std::vector<double>& probs) {
    if (probs.empty()) throw std::invalid_argument("perplexity: no predictions");
    double acc = 0.0;
    for (double p : probs) acc += std::log(std::max(p, 1e-12));
    return std::exp(-acc / static_cast<double>(probs.size()));
}

double lm_perplexity(const LMModel& model, const std::vector<TokenizedPacket>& heldout) {
    auto samples = make_lm_samples(heldout, model.config().context_len);
    if (samples.empty()) {
        throw std::invalid_argument("lm_perplexity: held-out stream yields no windows");
    }
    NoGradGuard ng;
    std::vector<double> probs;
    probs.reserve(samples.size());
    for (const auto& s : samples) {
        auto z = model.forward(s.ctx);
        probs.push_back(z->data[s.tgt]);
    }
    return perplexity_from_probs(probs);
}

TensorPtr lm_extract_features(const LMModel& model, const TokenizedPacket& tp) {
    NoGradGuard ng;
    int l = static_cast<int>(tp.ids.size());
    auto out = Tensor::zeros({l, model.config().hidden_dim});
    if (tp.true_len > 0) {
        std::vector<int> ids(tp.ids.begin(), tp.ids.begin() + tp.true_len);
        auto h = model.hidden_states(ids);
        std::copy(h->data.begin(), h->data.end(), out->data.begin());
    }
    return out;
}

TensorPtr LmFeatureExtractor::features(const TokenizedPacket& tp) const {
    return lm_extract_features(model_, tp);
}

std::vector<float> LmFeatureExtractor::pooled(const TokenizedPacket& tp) const {
    NoGradGuard ng;
    int H = model_.config().hidden_dim;
    std::vector<float> out(H, 0.0f);
    if (tp.true_len == 0) return out;
    std::vector<int> ids(tp.ids.begin(), tp.ids.begin() + tp.true_len);
    auto h = model_.hidden_states(ids);
    std::vector<double> acc(H, 0.0);
    for (int r = 0; r < tp.true_len; ++r) {
        for (int j = 0; j < H; ++j) acc[j] += h->data[static_cast<std::size_t>(r) * H + j];
    }
    for (int j = 0; j < H; ++j) out[j] = static_cast<float>(acc[j] / tp.true_len);
    return out;
}

}  // namespace kddt
