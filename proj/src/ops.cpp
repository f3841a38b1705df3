#include "kddt/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace kddt::ops {

namespace {

TensorPtr make_node(std::vector<int> shape, std::vector<TensorPtr> parents) {
    bool rg = false;
    if (grad_enabled()) {
        for (const auto& p : parents) {
            if (p && p->requires_grad) {
                rg = true;
                break;
            }
        }
    }
    auto out = Tensor::zeros(std::move(shape), rg);
    if (rg) out->parents = std::move(parents);
    return out;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                                    shape_str(a->shape) + " vs " + shape_str(b->shape));
    }
}

float stable_sigmoid(float x) {
    if (x >= 0.0f) {
        float e = std::exp(-x);
        return 1.0f / (1.0f + e);
    }
    float e = std::exp(x);
    return e / (1.0f + e);
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    auto out = make_node(a->shape, {a, b});
    for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] + b->data[i];
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pa = a, pb = b;
        out->backward_fn = [self, pa, pb]() {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < pa->size(); ++i) pa->grad[i] += self->grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < pb->size(); ++i) pb->grad[i] += self->grad[i];
            }
        };
    }
    return out;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    auto out = make_node(a->shape, {a, b});
    for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = a->data[i] * b->data[i];
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pa = a, pb = b;
        out->backward_fn = [self, pa, pb]() {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (std::size_t i = 0; i < pa->size(); ++i)
                    pa->grad[i] += self->grad[i] * pb->data[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (std::size_t i = 0; i < pb->size(); ++i)
                    pb->grad[i] += self->grad[i] * pa->data[i];
            }
        };
    }
    return out;
}

TensorPtr scale(const TensorPtr& a, float c) {
    auto out = make_node(a->shape, {a});
    for (std::size_t i = 0; i < a->size(); ++i) out->data[i] = c * a->data[i];
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pa = a;
        out->backward_fn = [self, pa, c]() {
            pa->ensure_grad();
            for (std::size_t i = 0; i < pa->size(); ++i) pa->grad[i] += c * self->grad[i];
        };
    }
    return out;
}

TensorPtr activation(const TensorPtr& x, Activation kind) {
    auto out = make_node(x->shape, {x});
    switch (kind) {
        case Activation::Relu:
            for (std::size_t i = 0; i < x->size(); ++i)
                out->data[i] = x->data[i] > 0.0f ? x->data[i] : 0.0f;
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = stable_sigmoid(x->data[i]);
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = std::tanh(x->data[i]);
            break;
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, kind]() {
            px->ensure_grad();
            switch (kind) {
                case Activation::Relu:
                    for (std::size_t i = 0; i < px->size(); ++i)
                        if (px->data[i] > 0.0f) px->grad[i] += self->grad[i];
                    break;
                case Activation::Sigmoid:
                    for (std::size_t i = 0; i < px->size(); ++i) {
                        float y = self->data[i];
                        px->grad[i] += self->grad[i] * y * (1.0f - y);
                    }
                    break;
                case Activation::Tanh:
                    for (std::size_t i = 0; i < px->size(); ++i) {
                        float y = self->data[i];
                        px->grad[i] += self->grad[i] * (1.0f - y * y);
                    }
                    break;
            }
        };
    }
    return out;
}

TensorPtr relu(const TensorPtr& x) { return activation(x, Activation::Relu); }
TensorPtr sigmoid(const TensorPtr& x) { return activation(x, Activation::Sigmoid); }
TensorPtr tanh_act(const TensorPtr& x) { return activation(x, Activation::Tanh); }

TensorPtr clamp_min(const TensorPtr& x, float lo) {
    auto out = make_node(x->shape, {x});
    for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = std::max(x->data[i], lo);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, lo]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < px->size(); ++i)
                if (px->data[i] > lo) px->grad[i] += self->grad[i];
        };
    }
    return out;
}

TensorPtr affine_elem(const TensorPtr& x, float a, float b) {
    auto out = make_node(x->shape, {x});
    for (std::size_t i = 0; i < x->size(); ++i) out->data[i] = a * x->data[i] + b;
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, a]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < px->size(); ++i) px->grad[i] += a * self->grad[i];
        };
    }
    return out;
}

TensorPtr slice1d(const TensorPtr& x, int start, int len) {
    require(x->shape.size() == 1, "slice1d: expects a 1-D tensor");
    require(start >= 0 && len >= 0 && start + len <= x->dim(0), "slice1d: range out of bounds");
    auto out = make_node({len}, {x});
    std::copy(x->data.begin() + start, x->data.begin() + start + len, out->data.begin());
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, start, len]() {
            px->ensure_grad();
            for (int i = 0; i < len; ++i) px->grad[start + i] += self->grad[i];
        };
    }
    return out;
}

TensorPtr concat1d(const TensorPtr& a, const TensorPtr& b) {
    require(a->shape.size() == 1 && b->shape.size() == 1, "concat1d: expects 1-D tensors");
    int na = a->dim(0), nb = b->dim(0);
    auto out = make_node({na + nb}, {a, b});
    std::copy(a->data.begin(), a->data.end(), out->data.begin());
    std::copy(b->data.begin(), b->data.end(), out->data.begin() + na);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pa = a, pb = b;
        out->backward_fn = [self, pa, pb, na, nb]() {
            if (pa->requires_grad) {
                pa->ensure_grad();
                for (int i = 0; i < na; ++i) pa->grad[i] += self->grad[i];
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int i = 0; i < nb; ++i) pb->grad[i] += self->grad[na + i];
            }
        };
    }
    return out;
}

TensorPtr transpose2d(const TensorPtr& x) {
    require(x->shape.size() == 2, "transpose2d: expects a 2-D tensor");
    int r = x->dim(0), c = x->dim(1);
    auto out = make_node({c, r}, {x});
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) out->data[j * r + i] = x->data[i * c + j];
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, r, c]() {
            px->ensure_grad();
            for (int i = 0; i < r; ++i)
                for (int j = 0; j < c; ++j) px->grad[i * c + j] += self->grad[j * r + i];
        };
    }
    return out;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
    require(numel(shape) == x->size(), "reshape: element count mismatch");
    auto out = make_node(std::move(shape), {x});
    out->data = x->data;
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < px->size(); ++i) px->grad[i] += self->grad[i];
        };
    }
    return out;
}

TensorPtr row(const TensorPtr& X, int r) {
    require(X->shape.size() == 2, "row: expects a 2-D tensor");
    int R = X->dim(0), d = X->dim(1);
    require(r >= 0 && r < R, "row: index out of range");
    auto out = make_node({d}, {X});
    std::copy(&X->data[static_cast<std::size_t>(r) * d],
              &X->data[static_cast<std::size_t>(r) * d] + d, out->data.begin());
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X;
        out->backward_fn = [self, pX, r, d]() {
            pX->ensure_grad();
            float* g = &pX->grad[static_cast<std::size_t>(r) * d];
            for (int j = 0; j < d; ++j) g[j] += self->grad[j];
        };
    }
    return out;
}

TensorPtr stack_rows(const std::vector<TensorPtr>& rows) {
    require(!rows.empty(), "stack_rows: empty row list");
    int d = static_cast<int>(rows[0]->size());
    for (const auto& r : rows)
        require(r->shape.size() == 1 && static_cast<int>(r->size()) == d,
                "stack_rows: rows must be 1-D with equal length");
    int R = static_cast<int>(rows.size());
    auto out = make_node({R, d}, std::vector<TensorPtr>(rows.begin(), rows.end()));
    for (int r = 0; r < R; ++r)
        std::copy(rows[r]->data.begin(), rows[r]->data.end(),
                  &out->data[static_cast<std::size_t>(r) * d]);
    if (out->requires_grad) {
        Tensor* self = out.get();
        std::vector<TensorPtr> ps = rows;
        out->backward_fn = [self, ps, d]() {
            for (std::size_t r = 0; r < ps.size(); ++r) {
                if (!ps[r]->requires_grad) continue;
                ps[r]->ensure_grad();
                const float* g = &self->grad[r * d];
                for (int j = 0; j < d; ++j) ps[r]->grad[j] += g[j];
            }
        };
    }
    return out;
}

TensorPtr slice_cols_prefix(const TensorPtr& X, int len) {
    require(X->shape.size() == 2, "slice_cols_prefix: expects a 2-D tensor");
    int R = X->dim(0), C = X->dim(1);
    require(len >= 1 && len <= C, "slice_cols_prefix: length out of range");
    auto out = make_node({R, len}, {X});
    for (int r = 0; r < R; ++r)
        std::copy(&X->data[static_cast<std::size_t>(r) * C],
                  &X->data[static_cast<std::size_t>(r) * C] + len,
                  &out->data[static_cast<std::size_t>(r) * len]);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X;
        out->backward_fn = [self, pX, R, C, len]() {
            pX->ensure_grad();
            for (int r = 0; r < R; ++r) {
                const float* g = &self->grad[static_cast<std::size_t>(r) * len];
                float* gx = &pX->grad[static_cast<std::size_t>(r) * C];
                for (int j = 0; j < len; ++j) gx[j] += g[j];
            }
        };
    }
    return out;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b) {
    require(W->shape.size() == 2, "linear: weight W must be 2-D, got " + shape_str(W->shape));
    return linear_prefix(x, W, b, W->dim(0));
}

TensorPtr linear_prefix(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b, int rows) {
    require(W->shape.size() == 2, "linear: weight W must be 2-D, got " + shape_str(W->shape));
    int m = W->dim(0), n = W->dim(1);
    require(rows >= 0 && rows <= m, "linear: row prefix out of range");
    if (static_cast<int>(x->size()) != n) {
        throw std::invalid_argument("linear: input x has " + std::to_string(x->size()) +
                                    " elements, weight W expects " + std::to_string(n));
    }
    if (static_cast<int>(b->size()) != m) {
        throw std::invalid_argument("linear: bias b has " + std::to_string(b->size()) +
                                    " elements, weight W produces " + std::to_string(m));
    }
    auto out = make_node({rows}, {x, W, b});
    for (int i = 0; i < rows; ++i) {
        const float* wrow = &W->data[static_cast<std::size_t>(i) * n];
        float acc = b->data[i];
        for (int j = 0; j < n; ++j) acc += wrow[j] * x->data[j];
        out->data[i] = acc;
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x, pW = W, pb = b;
        out->backward_fn = [self, px, pW, pb, rows, n]() {
            if (px->requires_grad) {
                px->ensure_grad();
                for (int i = 0; i < rows; ++i) {
                    float g = self->grad[i];
                    const float* wrow = &pW->data[static_cast<std::size_t>(i) * n];
                    for (int j = 0; j < n; ++j) px->grad[j] += g * wrow[j];
                }
            }
            if (pW->requires_grad) {
                pW->ensure_grad();
                for (int i = 0; i < rows; ++i) {
                    float g = self->grad[i];
                    float* gw = &pW->grad[static_cast<std::size_t>(i) * n];
                    for (int j = 0; j < n; ++j) gw[j] += g * px->data[j];
                }
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                for (int i = 0; i < rows; ++i) pb->grad[i] += self->grad[i];
            }
        };
    }
    return out;
}

TensorPtr linear_rows(const TensorPtr& X, const TensorPtr& W, const TensorPtr& b) {
    require(X->shape.size() == 2, "linear_rows: input X must be 2-D");
    require(W->shape.size() == 2, "linear_rows: weight W must be 2-D");
    int R = X->dim(0), k = X->dim(1);
    int m = W->dim(0);
    require(W->dim(1) == k, "linear_rows: weight W expects " + std::to_string(W->dim(1)) +
                                " inputs, rows have " + std::to_string(k));
    require(static_cast<int>(b->size()) == m, "linear_rows: bias length mismatch");
    auto out = make_node({R, m}, {X, W, b});
    for (int r = 0; r < R; ++r) {
        const float* xr = &X->data[static_cast<std::size_t>(r) * k];
        float* yr = &out->data[static_cast<std::size_t>(r) * m];
        for (int i = 0; i < m; ++i) {
            const float* wrow = &W->data[static_cast<std::size_t>(i) * k];
            float acc = b->data[i];
            for (int j = 0; j < k; ++j) acc += wrow[j] * xr[j];
            yr[i] = acc;
        }
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X, pW = W, pb = b;
        out->backward_fn = [self, pX, pW, pb, R, k, m]() {
            if (pX->requires_grad) pX->ensure_grad();
            if (pW->requires_grad) pW->ensure_grad();
            if (pb->requires_grad) pb->ensure_grad();
            for (int r = 0; r < R; ++r) {
                const float* gy = &self->grad[static_cast<std::size_t>(r) * m];
                const float* xr = &pX->data[static_cast<std::size_t>(r) * k];
                for (int i = 0; i < m; ++i) {
                    float g = gy[i];
                    if (g == 0.0f) continue;
                    const float* wrow = &pW->data[static_cast<std::size_t>(i) * k];
                    if (pX->requires_grad) {
                        float* gx = &pX->grad[static_cast<std::size_t>(r) * k];
                        for (int j = 0; j < k; ++j) gx[j] += g * wrow[j];
                    }
                    if (pW->requires_grad) {
                        float* gw = &pW->grad[static_cast<std::size_t>(i) * k];
                        for (int j = 0; j < k; ++j) gw[j] += g * xr[j];
                    }
                    if (pb->requires_grad) pb->grad[i] += g;
                }
            }
        };
    }
    return out;
}

TensorPtr affine2(const TensorPtr& x1, const TensorPtr& W1, const TensorPtr& x2,
                  const TensorPtr& W2, const TensorPtr& b) {
    require(W1->shape.size() == 2 && W2->shape.size() == 2, "affine2: weights must be 2-D");
    int m = W1->dim(0), n1 = W1->dim(1), n2 = W2->dim(1);
    require(W2->dim(0) == m, "affine2: weight output sizes disagree");
    require(static_cast<int>(x1->size()) == n1, "affine2: first input size mismatch");
    require(static_cast<int>(x2->size()) == n2, "affine2: second input size mismatch");
    require(static_cast<int>(b->size()) == m, "affine2: bias size mismatch");
    auto out = make_node({m}, {x1, W1, x2, W2, b});
    for (int i = 0; i < m; ++i) {
        const float* w1 = &W1->data[static_cast<std::size_t>(i) * n1];
        const float* w2 = &W2->data[static_cast<std::size_t>(i) * n2];
        float acc = b->data[i];
        for (int j = 0; j < n1; ++j) acc += w1[j] * x1->data[j];
        for (int j = 0; j < n2; ++j) acc += w2[j] * x2->data[j];
        out->data[i] = acc;
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px1 = x1, pW1 = W1, px2 = x2, pW2 = W2, pb = b;
        out->backward_fn = [self, px1, pW1, px2, pW2, pb, m, n1, n2]() {
            if (px1->requires_grad) px1->ensure_grad();
            if (pW1->requires_grad) pW1->ensure_grad();
            if (px2->requires_grad) px2->ensure_grad();
            if (pW2->requires_grad) pW2->ensure_grad();
            if (pb->requires_grad) pb->ensure_grad();
            for (int i = 0; i < m; ++i) {
                float g = self->grad[i];
                if (g == 0.0f) continue;
                const float* w1 = &pW1->data[static_cast<std::size_t>(i) * n1];
                const float* w2 = &pW2->data[static_cast<std::size_t>(i) * n2];
                if (px1->requires_grad)
                    for (int j = 0; j < n1; ++j) px1->grad[j] += g * w1[j];
                if (pW1->requires_grad) {
                    float* gw = &pW1->grad[static_cast<std::size_t>(i) * n1];
                    for (int j = 0; j < n1; ++j) gw[j] += g * px1->data[j];
                }
                if (px2->requires_grad)
                    for (int j = 0; j < n2; ++j) px2->grad[j] += g * w2[j];
                if (pW2->requires_grad) {
                    float* gw = &pW2->grad[static_cast<std::size_t>(i) * n2];
                    for (int j = 0; j < n2; ++j) gw[j] += g * px2->data[j];
                }
                if (pb->requires_grad) pb->grad[i] += g;
            }
        };
    }
    return out;
}

TensorPtr embedding_lookup(const std::vector<int>& ids, const TensorPtr& E) {
    require(E->shape.size() == 2, "embedding_lookup: table must be 2-D");
    int V = E->dim(0), d = E->dim(1);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || ids[i] >= V) {
            throw std::out_of_range("embedding_lookup: token id " + std::to_string(ids[i]) +
                                    " at position " + std::to_string(i) +
                                    " outside vocabulary of size " + std::to_string(V));
        }
    }
    int len = static_cast<int>(ids.size());
    auto out = make_node({len, d}, {E});
    for (int i = 0; i < len; ++i) {
        const float* row = &E->data[static_cast<std::size_t>(ids[i]) * d];
        std::copy(row, row + d, &out->data[static_cast<std::size_t>(i) * d]);
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pE = E;
        std::vector<int> ids_copy = ids;
        out->backward_fn = [self, pE, ids_copy, d]() {
            pE->ensure_grad();
            for (std::size_t i = 0; i < ids_copy.size(); ++i) {
                float* grow = &pE->grad[static_cast<std::size_t>(ids_copy[i]) * d];
                const float* g = &self->grad[i * d];
                for (int j = 0; j < d; ++j) grow[j] += g[j];
            }
        };
    }
    return out;
}

TensorPtr conv1d(const TensorPtr& x, const TensorPtr& K, const TensorPtr& b) {
    require(x->shape.size() == 2, "conv1d: input must be [channels x length]");
    require(K->shape.size() == 3, "conv1d: kernels must be [out x in x k]");
    int cin = x->dim(0), L = x->dim(1);
    int cout = K->dim(0), kin = K->dim(1), k = K->dim(2);
    require(kin == cin, "conv1d: kernel expects " + std::to_string(kin) + " input channels, got " +
                            std::to_string(cin));
    if (k % 2 == 0) {
        throw std::invalid_argument("conv1d: kernel size " + std::to_string(k) +
                                    " must be odd for same-padding");
    }
    require(static_cast<int>(b->size()) == cout, "conv1d: bias length mismatch");
    int pad = k / 2;
    auto out = make_node({cout, L}, {x, K, b});
    for (int co = 0; co < cout; ++co) {
        float* yrow = &out->data[static_cast<std::size_t>(co) * L];
        for (int p = 0; p < L; ++p) yrow[p] = b->data[co];
        for (int ci = 0; ci < cin; ++ci) {
            const float* xrow = &x->data[static_cast<std::size_t>(ci) * L];
            const float* krow = &K->data[(static_cast<std::size_t>(co) * cin + ci) * k];
            for (int t = 0; t < k; ++t) {
                float kv = krow[t];
                int off = t - pad;
                int lo = std::max(0, -off), hi = std::min(L, L - off);
                for (int p = lo; p < hi; ++p) yrow[p] += kv * xrow[p + off];
            }
        }
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x, pK = K, pb = b;
        out->backward_fn = [self, px, pK, pb, cin, cout, L, k, pad]() {
            if (px->requires_grad) px->ensure_grad();
            if (pK->requires_grad) pK->ensure_grad();
            if (pb->requires_grad) pb->ensure_grad();
            for (int co = 0; co < cout; ++co) {
                const float* gy = &self->grad[static_cast<std::size_t>(co) * L];
                if (pb->requires_grad) {
                    float acc = 0.0f;
                    for (int p = 0; p < L; ++p) acc += gy[p];
                    pb->grad[co] += acc;
                }
                for (int ci = 0; ci < cin; ++ci) {
                    const float* xrow = &px->data[static_cast<std::size_t>(ci) * L];
                    const float* krow = &pK->data[(static_cast<std::size_t>(co) * cin + ci) * k];
                    float* gk = pK->requires_grad
                                    ? &pK->grad[(static_cast<std::size_t>(co) * cin + ci) * k]
                                    : nullptr;
                    float* gx = px->requires_grad ? &px->grad[static_cast<std::size_t>(ci) * L]
                                                  : nullptr;
                    for (int t = 0; t < k; ++t) {
                        int off = t - pad;
                        int lo = std::max(0, -off), hi = std::min(L, L - off);
                        if (gk) {
                            float acc = 0.0f;
                            for (int p = lo; p < hi; ++p) acc += gy[p] * xrow[p + off];
                            gk[t] += acc;
                        }
                        if (gx) {
                            float kv = krow[t];
                            for (int p = lo; p < hi; ++p) gx[p + off] += gy[p] * kv;
                        }
                    }
                }
            }
        };
    }
    return out;
}

TensorPtr maxpool1d(const TensorPtr& x, int window, int stride, bool pad_right_zero) {
    require(x->shape.size() == 2, "maxpool1d: input must be [channels x length]");
    require(window >= 1 && stride >= 1, "maxpool1d: window and stride must be >= 1");
    if (pad_right_zero) require(stride == 1, "maxpool1d: right zero-padding assumes stride 1");
    int C = x->dim(0), L = x->dim(1);
    int Lin = L + (pad_right_zero ? 1 : 0);
    int Lout = (Lin - window) / stride + 1;
    if (Lin < window || Lout < 1) {
        throw std::invalid_argument("maxpool1d: window " + std::to_string(window) +
                                    " with stride " + std::to_string(stride) +
                                    " yields no output on length " + std::to_string(L));
    }
    auto out = make_node({C, Lout}, {x});
    std::vector<int> argmax(static_cast<std::size_t>(C) * Lout, -1);  // -1 = virtual zero column
    for (int c = 0; c < C; ++c) {
        const float* xrow = &x->data[static_cast<std::size_t>(c) * L];
        for (int p = 0; p < Lout; ++p) {
            int start = p * stride;
            float best = 0.0f;
            int best_idx = -1;
            bool first = true;
            for (int t = 0; t < window; ++t) {
                int idx = start + t;
                float v = idx < L ? xrow[idx] : 0.0f;  // virtual zero at position L
                if (first || v > best) {
                    best = v;
                    best_idx = idx < L ? idx : -1;
                    first = false;
                }
            }
            out->data[static_cast<std::size_t>(c) * Lout + p] = best;
            argmax[static_cast<std::size_t>(c) * Lout + p] = best_idx;
        }
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, argmax, C, L, Lout]() {
            px->ensure_grad();
            for (int c = 0; c < C; ++c) {
                for (int p = 0; p < Lout; ++p) {
                    int idx = argmax[static_cast<std::size_t>(c) * Lout + p];
                    if (idx >= 0)
                        px->grad[static_cast<std::size_t>(c) * L + idx] +=
                            self->grad[static_cast<std::size_t>(c) * Lout + p];
                }
            }
        };
    }
    return out;
}

TensorPtr mean_pool_rows(const TensorPtr& X, int n_rows) {
    require(X->shape.size() == 2, "mean_pool_rows: input must be 2-D");
    int R = X->dim(0), d = X->dim(1);
    require(n_rows >= 1 && n_rows <= R, "mean_pool_rows: row count out of range");
    auto out = make_node({d}, {X});
    for (int j = 0; j < d; ++j) {
        double acc = 0.0;
        for (int r = 0; r < n_rows; ++r) acc += X->data[static_cast<std::size_t>(r) * d + j];
        out->data[j] = static_cast<float>(acc / n_rows);
    }
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X;
        out->backward_fn = [self, pX, n_rows, d]() {
            pX->ensure_grad();
            float inv = 1.0f / static_cast<float>(n_rows);
            for (int r = 0; r < n_rows; ++r) {
                float* gx = &pX->grad[static_cast<std::size_t>(r) * d];
                for (int j = 0; j < d; ++j) gx[j] += self->grad[j] * inv;
            }
        };
    }
    return out;
}

namespace {

// Writes softmax of src[0..n) into dst, stabilized by max-subtraction.
void softmax_row(const float* src, float* dst, int n) {
    float mx = src[0];
    for (int i = 1; i < n; ++i) mx = std::max(mx, src[i]);
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        float e = std::exp(src[i] - mx);
        dst[i] = e;
        sum += e;
    }
    float inv = static_cast<float>(1.0 / sum);
    for (int i = 0; i < n; ++i) dst[i] *= inv;
}

}  // namespace

TensorPtr softmax(const TensorPtr& x) {
    require(x->size() >= 1, "softmax: input must be non-empty");
    auto out = make_node(x->shape, {x});
    softmax_row(x->data.data(), out->data.data(), static_cast<int>(x->size()));
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px]() {
            px->ensure_grad();
            int n = static_cast<int>(px->size());
            double dot = 0.0;
            for (int i = 0; i < n; ++i) dot += static_cast<double>(self->grad[i]) * self->data[i];
            for (int i = 0; i < n; ++i)
                px->grad[i] += self->data[i] * (self->grad[i] - static_cast<float>(dot));
        };
    }
    return out;
}

TensorPtr softmax_rows(const TensorPtr& X) {
    require(X->shape.size() == 2, "softmax_rows: input must be 2-D");
    int R = X->dim(0), V = X->dim(1);
    auto out = make_node(X->shape, {X});
    for (int r = 0; r < R; ++r)
        softmax_row(&X->data[static_cast<std::size_t>(r) * V],
                    &out->data[static_cast<std::size_t>(r) * V], V);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X;
        out->backward_fn = [self, pX, R, V]() {
            pX->ensure_grad();
            for (int r = 0; r < R; ++r) {
                const float* z = &self->data[static_cast<std::size_t>(r) * V];
                const float* g = &self->grad[static_cast<std::size_t>(r) * V];
                float* gx = &pX->grad[static_cast<std::size_t>(r) * V];
                double dot = 0.0;
                for (int i = 0; i < V; ++i) dot += static_cast<double>(g[i]) * z[i];
                for (int i = 0; i < V; ++i) gx[i] += z[i] * (g[i] - static_cast<float>(dot));
            }
        };
    }
    return out;
}

TensorPtr cross_entropy(const TensorPtr& z, int target) {
    int n = static_cast<int>(z->size());
    require(target >= 0 && target < n, "cross_entropy: target index out of range");
    auto out = make_node({1}, {z});
    float zt = std::max(z->data[target], kLogClamp);
    out->data[0] = -std::log(zt);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pz = z;
        out->backward_fn = [self, pz, target, zt]() {
            pz->ensure_grad();
            pz->grad[target] += self->grad[0] * (-1.0f / zt);
        };
    }
    return out;
}

TensorPtr cross_entropy_logits(const TensorPtr& x, int target) {
    int n = static_cast<int>(x->size());
    require(target >= 0 && target < n, "cross_entropy_logits: target index out of range");
    auto out = make_node({1}, {x});
    std::vector<float> z(n);
    softmax_row(x->data.data(), z.data(), n);
    float zt = std::max(z[target], kLogClamp);
    out->data[0] = -std::log(zt);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px, z, target]() {
            px->ensure_grad();
            float g = self->grad[0];
            int n = static_cast<int>(px->size());
            for (int i = 0; i < n; ++i)
                px->grad[i] += g * (z[i] - (i == target ? 1.0f : 0.0f));
        };
    }
    return out;
}

TensorPtr cross_entropy_logit_rows(const TensorPtr& X, const std::vector<int>& targets) {
    require(X->shape.size() == 2, "cross_entropy_logit_rows: logits must be 2-D");
    int R = X->dim(0), V = X->dim(1);
    require(static_cast<int>(targets.size()) == R,
            "cross_entropy_logit_rows: one target per row required");
    for (int t : targets) require(t >= 0 && t < V, "cross_entropy_logit_rows: target out of range");
    auto out = make_node({1}, {X});
    std::vector<float> Z(static_cast<std::size_t>(R) * V);
    double total = 0.0;
    for (int r = 0; r < R; ++r) {
        softmax_row(&X->data[static_cast<std::size_t>(r) * V],
                    &Z[static_cast<std::size_t>(r) * V], V);
        total -= std::log(std::max(Z[static_cast<std::size_t>(r) * V + targets[r]], kLogClamp));
    }
    out->data[0] = static_cast<float>(total);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pX = X;
        std::vector<int> tg = targets;
        out->backward_fn = [self, pX, Z = std::move(Z), tg, R, V]() {
            pX->ensure_grad();
            float g = self->grad[0];
            for (int r = 0; r < R; ++r) {
                const float* zr = &Z[static_cast<std::size_t>(r) * V];
                float* gx = &pX->grad[static_cast<std::size_t>(r) * V];
                for (int i = 0; i < V; ++i) gx[i] += g * zr[i];
                gx[tg[r]] -= g;
            }
        };
    }
    return out;
}

TensorPtr gaussian_kl(const TensorPtr& mu, const TensorPtr& sigma) {
    require_same_shape(mu, sigma, "gaussian_kl");
    int k = static_cast<int>(mu->size());
    for (int i = 0; i < k; ++i) {
        if (!(sigma->data[i] > 0.0f)) {
            throw std::domain_error("gaussian_kl: sigma[" + std::to_string(i) +
                                    "] = " + std::to_string(sigma->data[i]) +
                                    " must be positive");
        }
    }
    auto out = make_node({1}, {mu, sigma});
    double acc = 0.0;
    for (int i = 0; i < k; ++i) {
        double m = mu->data[i], s = sigma->data[i];
        double s2 = std::max(s * s, static_cast<double>(kLogClamp));
        acc += 1.0 + std::log(s2) - m * m - s * s;
    }
    out->data[0] = static_cast<float>(-0.5 * acc);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pm = mu, ps = sigma;
        out->backward_fn = [self, pm, ps, k]() {
            float g = self->grad[0];
            if (pm->requires_grad) {
                pm->ensure_grad();
                for (int i = 0; i < k; ++i) pm->grad[i] += g * pm->data[i];
            }
            if (ps->requires_grad) {
                ps->ensure_grad();
                for (int i = 0; i < k; ++i) {
                    float s = ps->data[i];
                    float dlog = (s * s >= kLogClamp) ? 1.0f / s : 0.0f;
                    ps->grad[i] += g * (s - dlog);
                }
            }
        };
    }
    return out;
}

TensorPtr reparameterize(const TensorPtr& mu, const TensorPtr& sigma,
                         const std::vector<float>& epsilon) {
    require_same_shape(mu, sigma, "reparameterize");
    require(epsilon.size() == mu->size(), "reparameterize: epsilon length mismatch");
    auto out = make_node(mu->shape, {mu, sigma});
    for (std::size_t i = 0; i < mu->size(); ++i)
        out->data[i] = mu->data[i] + epsilon[i] * sigma->data[i];
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pm = mu, ps = sigma;
        std::vector<float> eps = epsilon;
        out->backward_fn = [self, pm, ps, eps]() {
            if (pm->requires_grad) {
                pm->ensure_grad();
                for (std::size_t i = 0; i < pm->size(); ++i) pm->grad[i] += self->grad[i];
            }
            if (ps->requires_grad) {
                ps->ensure_grad();
                for (std::size_t i = 0; i < ps->size(); ++i)
                    ps->grad[i] += self->grad[i] * eps[i];
            }
        };
    }
    return out;
}

TensorPtr cosine_similarity(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "cosine_similarity");
    int k = static_cast<int>(a->size());
    double dot = 0.0, na2 = 0.0, nb2 = 0.0;
    for (int i = 0; i < k; ++i) {
        dot += static_cast<double>(a->data[i]) * b->data[i];
        na2 += static_cast<double>(a->data[i]) * a->data[i];
        nb2 += static_cast<double>(b->data[i]) * b->data[i];
    }
    double na = std::sqrt(na2) + kNormGuard;
    double nb = std::sqrt(nb2) + kNormGuard;
    double s_raw = dot / (na * nb);
    double s = std::clamp(s_raw, -1.0, 1.0);
    auto out = make_node({1}, {a, b});
    out->data[0] = static_cast<float>(s);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr pa = a, pb = b;
        bool clamped = s_raw != s;
        out->backward_fn = [self, pa, pb, na, nb, s, clamped, k]() {
            if (clamped) return;
            float g = self->grad[0];
            double inv_ab = 1.0 / (na * nb);
            if (pa->requires_grad) {
                pa->ensure_grad();
                double inv_a2 = 1.0 / (na * na);
                for (int i = 0; i < k; ++i)
                    pa->grad[i] += g * static_cast<float>(pb->data[i] * inv_ab -
                                                          s * pa->data[i] * inv_a2);
            }
            if (pb->requires_grad) {
                pb->ensure_grad();
                double inv_b2 = 1.0 / (nb * nb);
                for (int i = 0; i < k; ++i)
                    pb->grad[i] += g * static_cast<float>(pa->data[i] * inv_ab -
                                                          s * pb->data[i] * inv_b2);
            }
        };
    }
    return out;
}

namespace {

TensorPtr reduce_scalars(const std::vector<TensorPtr>& xs, bool mean) {
    require(!xs.empty(), "scalar reduction: empty list");
    double acc = 0.0;
    for (const auto& x : xs) {
        require(x->size() == 1, "scalar reduction: inputs must be scalars");
        acc += x->data[0];
    }
    auto out = make_node({1}, xs);
    out->data[0] = static_cast<float>(mean ? acc / static_cast<double>(xs.size()) : acc);
    if (out->requires_grad) {
        Tensor* self = out.get();
        std::vector<TensorPtr> ps = xs;
        out->backward_fn = [self, ps, mean]() {
            float g = self->grad[0];
            if (mean) g /= static_cast<float>(ps.size());
            for (const auto& p : ps) {
                if (p->requires_grad) {
                    p->ensure_grad();
                    p->grad[0] += g;
                }
            }
        };
    }
    return out;
}

}  // namespace

TensorPtr mean_scalars(const std::vector<TensorPtr>& xs) { return reduce_scalars(xs, true); }
TensorPtr sum_scalars(const std::vector<TensorPtr>& xs) { return reduce_scalars(xs, false); }

TensorPtr sum_all(const TensorPtr& x) {
    auto out = make_node({1}, {x});
    double acc = 0.0;
    for (float v : x->data) acc += v;
    out->data[0] = static_cast<float>(acc);
    if (out->requires_grad) {
        Tensor* self = out.get();
        TensorPtr px = x;
        out->backward_fn = [self, px]() {
            px->ensure_grad();
            for (std::size_t i = 0; i < px->size(); ++i) px->grad[i] += self->grad[0];
        };
    }
    return out;
}

}  // namespace kddt::ops
