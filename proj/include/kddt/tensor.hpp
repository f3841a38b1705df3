#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace kddt {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

std::size_t numel(const std::vector<int>& shape);

// Dense float32 array with an optional gradient buffer and reverse-mode
// graph edges. Ops in ops.hpp create nodes; backward() runs the tape.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<float> data;
    std::vector<float> grad;  // same length as data once ensure_grad() ran
    bool requires_grad = false;

    std::vector<TensorPtr> parents;
    std::function<void()> backward_fn;

    Tensor() = default;
    Tensor(std::vector<int> shape_in, bool req_grad);

    static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr from_data(std::vector<int> shape, std::vector<float> values,
                               bool requires_grad = false);
    static TensorPtr scalar(float v, bool requires_grad = false);

    std::size_t size() const { return data.size(); }
    int dim(std::size_t i) const;
    float value() const;  // scalar tensors only

    void ensure_grad();
    void zero_grad();
    bool has_grad() const { return grad.size() == data.size() && !data.empty(); }
    bool all_finite() const;
};

// Reverse pass from a scalar root: seeds d(root)=1 and runs every
// backward_fn in reverse topological order.
void backward(const TensorPtr& root);

// While alive, ops run in inference mode: no parents, no backward_fn.
class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

bool grad_enabled();

std::string shape_str(const std::vector<int>& shape);

}  // namespace kddt
