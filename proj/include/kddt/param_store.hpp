#pragma once

#include <map>
#include <string>
#include <vector>

#include "kddt/rng.hpp"
#include "kddt/tensor.hpp"

namespace kddt {

// Named parameter tensors with deterministic (lexicographic) iteration order.
class ParameterStore {
public:
    TensorPtr add(const std::string& name, TensorPtr t);
    const TensorPtr& get(const std::string& name) const;
    bool has(const std::string& name) const { return entries_.count(name) != 0; }
    std::size_t size() const { return entries_.size(); }

    // Weight initialized uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)).
    TensorPtr add_weight(const std::string& name, std::vector<int> shape, int fan_in, Rng& rng);
    // Bias initialized to zeros.
    TensorPtr add_bias(const std::string& name, std::vector<int> shape);

    void zero_grads();
    std::vector<std::string> names() const;

    auto begin() const { return entries_.begin(); }
    auto end() const { return entries_.end(); }
    auto begin() { return entries_.begin(); }
    auto end() { return entries_.end(); }

    // Merge another store under this one (names must not collide).
    void adopt(const ParameterStore& other);

private:
    std::map<std::string, TensorPtr> entries_;
};

}  // namespace kddt
