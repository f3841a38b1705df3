#include "kddt/features.hpp"

#include <stdexcept>

#include "kddt/rng.hpp"

namespace kddt {

StaticEmbedExtractor::StaticEmbedExtractor(int vocab_size, int dim, std::uint64_t seed)
    : vocab_size_(vocab_size), dim_(dim) {
    if (vocab_size < 1 || dim < 1) {
        throw std::invalid_argument("static embedding: vocab and dim must be positive");
    }
    Rng rng(seed);
    table_.resize(static_cast<std::size_t>(vocab_size) * dim);
    for (auto& v : table_) v = rng.uniform(-1.0f, 1.0f);
}

TensorPtr StaticEmbedExtractor::features(const TokenizedPacket& tp) const {
    int l = static_cast<int>(tp.ids.size());
    auto out = Tensor::zeros({l, dim_});
    for (int i = 0; i < tp.true_len; ++i) {
        int id = tp.ids[i];
        if (id < 0 || id >= vocab_size_) {
            throw std::out_of_range("static embedding: token id out of range");
        }
        const float* src = &table_[static_cast<std::size_t>(id) * dim_];
        std::copy(src, src + dim_, &out->data[static_cast<std::size_t>(i) * dim_]);
    }
    return out;
}

std::vector<float> StaticEmbedExtractor::pooled(const TokenizedPacket& tp) const {
    std::vector<double> acc(dim_, 0.0);
    for (int i = 0; i < tp.true_len; ++i) {
        const float* src = &table_[static_cast<std::size_t>(tp.ids[i]) * dim_];
        for (int j = 0; j < dim_; ++j) acc[j] += src[j];
    }
    std::vector<float> out(dim_);
    for (int j = 0; j < dim_; ++j)
        out[j] = static_cast<float>(acc[j] / std::max(1, tp.true_len));
    return out;
}

PacketFeatures prepare_features(const LabeledDataset& ds, const Vocabulary& vocab,
                                const FeatureExtractor& fx, int l_pkt) {
    PacketFeatures out;
    out.feature_dim = fx.feature_dim();
    out.l_pkt = l_pkt;
    out.tokens.reserve(ds.size());
    out.pooled.reserve(ds.size());
    for (const auto& p : ds.packets) {
        out.tokens.push_back(tokenize_packet(p, vocab, l_pkt));
        out.pooled.push_back(fx.pooled(out.tokens.back()));
        out.labels.push_back(p.label.value_or(-1));
        out.timestamps.push_back(p.timestamp_us);
    }
    return out;
}

}  // namespace kddt
