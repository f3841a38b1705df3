#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kddt/param_store.hpp"

namespace kddt {

struct GradCheckEntry {
    std::string name;
    // max_i |analytic_i - fd_i| / max_i max(|analytic_i|, |fd_i|), i.e. the
    // worst element error relative to the parameter's gradient scale.
    float max_rel_err = 0.0f;
    float grad_scale = 0.0f;
};

struct GradCheckReport {
    std::vector<GradCheckEntry> entries;
    float tol = 0.0f;

    float worst() const;
    bool all_ok() const { return worst() <= tol; }
    std::vector<std::string> failures() const;
};

// Compares analytic gradients of a deterministic scalar forward against
// central finite differences over every element of every parameter.
// The forward must rebuild its graph from the store's current values on each
// call (noise, if any, fixed by the caller).
GradCheckReport gradcheck(const std::function<TensorPtr()>& forward, ParameterStore& store,
                          float tol, float h = 1e-3f);

}  // namespace kddt
