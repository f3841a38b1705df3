#include "kddt/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace kddt {

namespace {
thread_local bool g_grad_enabled = true;
}

std::size_t numel(const std::vector<int>& shape) {
    std::size_t n = 1;
    for (int e : shape) {
        if (e < 0) throw std::invalid_argument("tensor extent must be non-negative");
        n *= static_cast<std::size_t>(e);
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_in, bool req_grad)
    : shape(std::move(shape_in)), data(numel(shape), 0.0f), requires_grad(req_grad) {}

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), requires_grad);
}

TensorPtr Tensor::from_data(std::vector<int> shape, std::vector<float> values,
                            bool requires_grad) {
    if (numel(shape) != values.size()) {
        throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                    " does not match shape " + shape_str(shape));
    }
    auto t = std::make_shared<Tensor>(std::move(shape), requires_grad);
    t->data = std::move(values);
    return t;
}

TensorPtr Tensor::scalar(float v, bool requires_grad) {
    return from_data({1}, {v}, requires_grad);
}

int Tensor::dim(std::size_t i) const {
    if (i >= shape.size()) throw std::out_of_range("tensor dim index out of range");
    return shape[i];
}

float Tensor::value() const {
    if (data.size() != 1) {
        throw std::logic_error("value() called on non-scalar tensor of shape " + shape_str(shape));
    }
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
}

bool Tensor::all_finite() const {
    for (float v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void backward(const TensorPtr& root) {
    if (!root) throw std::invalid_argument("backward on null tensor");
    if (root->size() != 1) {
        throw std::invalid_argument("backward requires a scalar root, got shape " +
                                    shape_str(root->shape));
    }

    // Iterative post-order DFS; nodes visited once.
    std::vector<Tensor*> order;
    std::unordered_set<Tensor*> seen;
    struct Frame {
        Tensor* node;
        std::size_t next_child;
    };
    std::vector<Frame> stack;
    stack.push_back({root.get(), 0});
    seen.insert(root.get());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_child < f.node->parents.size()) {
            Tensor* child = f.node->parents[f.next_child].get();
            ++f.next_child;
            if (seen.insert(child).second) stack.push_back({child, 0});
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    root->ensure_grad();
    root->grad[0] = 1.0f;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        Tensor* node = *it;
        if (node->backward_fn && node->requires_grad) node->backward_fn();
    }
}

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

bool grad_enabled() { return g_grad_enabled; }

std::string shape_str(const std::vector<int>& shape) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

}  // namespace kddt
