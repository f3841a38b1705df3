#pragma once

#include <map>
#include <string>
#include <vector>

#include "kddt/param_store.hpp"

namespace kddt {

struct AdamWConfig {
    float lr = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float eps = 1e-8f;
    float weight_decay = 0.01f;
};

// Decoupled weight decay Adam with bias correction. Moment buffers are keyed
// by parameter name and zero-initialized on first use.
class AdamW {
public:
    explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

    // One update over every parameter in the store; every parameter must have
    // an accumulated gradient. Gradients are zeroed afterwards.
    void step(ParameterStore& store);

    long long step_count() const { return step_; }
    const AdamWConfig& config() const { return cfg_; }

private:
    AdamWConfig cfg_;
    long long step_ = 0;
    std::map<std::string, std::vector<float>> m_;
    std::map<std::string, std::vector<float>> v_;
};

}  // namespace kddt
