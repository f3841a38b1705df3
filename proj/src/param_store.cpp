#include "kddt/param_store.hpp"

#include <cmath>
#include <stdexcept>

namespace kddt {

TensorPtr ParameterStore::add(const std::string& name, TensorPtr t) {
    if (entries_.count(name)) {
        throw std::invalid_argument("parameter '" + name + "' already registered");
    }
    t->requires_grad = true;
    entries_[name] = t;
    return t;
}

const TensorPtr& ParameterStore::get(const std::string& name) const {
    auto it = entries_.find(name);
    if (it == entries_.end()) {
        throw std::out_of_range("parameter '" + name + "' not found");
    }
    return it->second;
}

TensorPtr ParameterStore::add_weight(const std::string& name, std::vector<int> shape, int fan_in,
                                     Rng& rng) {
    if (fan_in < 1) throw std::invalid_argument("add_weight: fan_in must be positive");
    auto t = Tensor::zeros(std::move(shape), true);
    float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    for (auto& v : t->data) v = rng.uniform(-bound, bound);
    return add(name, t);
}

TensorPtr ParameterStore::add_bias(const std::string& name, std::vector<int> shape) {
    return add(name, Tensor::zeros(std::move(shape), true));
}

void ParameterStore::zero_grads() {
    for (auto& [name, t] : entries_) {
        t->ensure_grad();
        t->zero_grad();
    }
}

std::vector<std::string> ParameterStore::names() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [name, t] : entries_) out.push_back(name);
    return out;
}

void ParameterStore::adopt(const ParameterStore& other) {
    for (const auto& [name, t] : other) add(name, t);
}

}  // namespace kddt
