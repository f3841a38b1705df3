#include "kddt/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kddt/tensor.hpp"

namespace kddt {

float GradCheckReport::worst() const {
    float w = 0.0f;
    for (const auto& e : entries) w = std::max(w, e.max_rel_err);
    return w;
}

std::vector<std::string> GradCheckReport::failures() const {
    std::vector<std::string> out;
    for (const auto& e : entries) {
        if (e.max_rel_err > tol) out.push_back(e.name);
    }
    return out;
}

GradCheckReport gradcheck(const std::function<TensorPtr()>& forward, ParameterStore& store,
                          float tol, float h) {
    store.zero_grads();
    TensorPtr loss = forward();
    backward(loss);

    std::map<std::string, std::vector<float>> analytic;
    for (const auto& [name, p] : store) analytic[name] = p->grad;
    store.zero_grads();

    GradCheckReport report;
    report.tol = tol;
    for (auto& [name, p] : store) {
        const auto& a = analytic[name];
        float max_abs_diff = 0.0f;
        float scale = 0.0f;
        NoGradGuard ng;  // finite-difference evaluations need no graph
        for (std::size_t i = 0; i < p->size(); ++i) {
            float orig = p->data[i];
            p->data[i] = orig + h;
            float fplus = forward()->value();
            p->data[i] = orig - h;
            float fminus = forward()->value();
            p->data[i] = orig;
            float fd = (fplus - fminus) / (2.0f * h);
            max_abs_diff = std::max(max_abs_diff, std::abs(a[i] - fd));
            scale = std::max({scale, std::abs(a[i]), std::abs(fd)});
        }
        GradCheckEntry entry;
        entry.name = name;
        entry.grad_scale = scale;
        entry.max_rel_err = scale > 0.0f ? max_abs_diff / scale : max_abs_diff;
        report.entries.push_back(entry);
    }
    return report;
}

}  // namespace kddt
