#include "kddt/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace kddt {

void AdamW::step(ParameterStore& store) {
    for (const auto& [name, p] : store) {
        if (!p->has_grad()) {
            throw std::logic_error("adamw: parameter '" + name +
                                   "' has no gradient; run backward before stepping");
        }
    }
    ++step_;
    double bc1 = 1.0 - std::pow(static_cast<double>(cfg_.beta1), static_cast<double>(step_));
    double bc2 = 1.0 - std::pow(static_cast<double>(cfg_.beta2), static_cast<double>(step_));
    for (auto& [name, p] : store) {
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.size() != p->size()) m.assign(p->size(), 0.0f);
        if (v.size() != p->size()) v.assign(p->size(), 0.0f);
        for (std::size_t i = 0; i < p->size(); ++i) {
            float g = p->grad[i];
            m[i] = cfg_.beta1 * m[i] + (1.0f - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0f - cfg_.beta2) * g * g;
            float mhat = static_cast<float>(m[i] / bc1);
            float vhat = static_cast<float>(v[i] / bc2);
            p->data[i] -= cfg_.lr * cfg_.weight_decay * p->data[i];
            p->data[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
        }
        p->zero_grad();
    }
}

}  // namespace kddt
