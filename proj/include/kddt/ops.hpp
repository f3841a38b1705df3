#pragma once

#include <cstdint>
#include <vector>

#include "kddt/tensor.hpp"

namespace kddt::ops {

// Elementwise
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr scale(const TensorPtr& a, float c);

enum class Activation { Relu, Sigmoid, Tanh };
TensorPtr activation(const TensorPtr& x, Activation kind);
TensorPtr relu(const TensorPtr& x);
TensorPtr sigmoid(const TensorPtr& x);
TensorPtr tanh_act(const TensorPtr& x);
// max(x, lo) elementwise; gradient passes only where x > lo.
TensorPtr clamp_min(const TensorPtr& x, float lo);
// a*x + b elementwise with constant a, b.
TensorPtr affine_elem(const TensorPtr& x, float a, float b);

// Shape plumbing
TensorPtr slice1d(const TensorPtr& x, int start, int len);
TensorPtr concat1d(const TensorPtr& a, const TensorPtr& b);
TensorPtr transpose2d(const TensorPtr& x);
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);
// Row r of X [R x d] as a 1-D tensor.
TensorPtr row(const TensorPtr& X, int r);
// Stack equal-length 1-D tensors into [R x d].
TensorPtr stack_rows(const std::vector<TensorPtr>& rows);
// First `len` columns of X [R x C] as [R x len].
TensorPtr slice_cols_prefix(const TensorPtr& X, int len);

// y = Wx + b with W [m x n], x [n], b [m].
TensorPtr linear(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b);
// First `rows` outputs of Wx + b only; gradients touch only those rows of W, b.
TensorPtr linear_prefix(const TensorPtr& x, const TensorPtr& W, const TensorPtr& b, int rows);
// Row-wise affine: X [R x k], W [m x k], b [m] -> [R x m].
TensorPtr linear_rows(const TensorPtr& X, const TensorPtr& W, const TensorPtr& b);
// Fused two-input affine W1 x1 + W2 x2 + b (LSTM gate pre-activation).
TensorPtr affine2(const TensorPtr& x1, const TensorPtr& W1, const TensorPtr& x2,
                  const TensorPtr& W2, const TensorPtr& b);

// Rows of E indexed by ids; backward scatters into the looked-up rows only.
TensorPtr embedding_lookup(const std::vector<int>& ids, const TensorPtr& E);

// Cross-correlation with zero same-padding, odd kernel, stride 1.
// x [Cin x L], K [Cout x Cin x k], b [Cout] -> [Cout x L].
TensorPtr conv1d(const TensorPtr& x, const TensorPtr& K, const TensorPtr& b);

// x [C x L] -> [C x L'], L' = floor((L - window)/stride) + 1, or L' = L when
// pad_right_zero and stride 1 (one zero column appended on the right).
// Ties route the gradient to the first maximal index.
TensorPtr maxpool1d(const TensorPtr& x, int window, int stride, bool pad_right_zero = false);

// Mean over the first n_rows rows of X [R x d] -> [d].
TensorPtr mean_pool_rows(const TensorPtr& X, int n_rows);

TensorPtr softmax(const TensorPtr& x);
TensorPtr softmax_rows(const TensorPtr& X);

// -log z[target] with the log argument clamped at 1e-12; z holds probabilities.
TensorPtr cross_entropy(const TensorPtr& z, int target);
// Fused softmax + cross-entropy on raw logits; backward is softmax(x) - onehot.
TensorPtr cross_entropy_logits(const TensorPtr& x, int target);
// Sum of fused per-row cross-entropies over logits [R x V] and R targets.
TensorPtr cross_entropy_logit_rows(const TensorPtr& X, const std::vector<int>& targets);

// KL(N(mu, sigma^2) || N(0,1)) summed over dimensions.
TensorPtr gaussian_kl(const TensorPtr& mu, const TensorPtr& sigma);

// mu + epsilon * sigma elementwise; no gradient into epsilon.
TensorPtr reparameterize(const TensorPtr& mu, const TensorPtr& sigma,
                         const std::vector<float>& epsilon);

// a.b / (|a| |b|), each norm guarded with +1e-12, result clamped to [-1, 1].
TensorPtr cosine_similarity(const TensorPtr& a, const TensorPtr& b);

// Mean / sum of scalar losses.
TensorPtr mean_scalars(const std::vector<TensorPtr>& xs);
TensorPtr sum_scalars(const std::vector<TensorPtr>& xs);
// Scalar sum of every element.
TensorPtr sum_all(const TensorPtr& x);

constexpr float kLogClamp = 1e-12f;
constexpr float kNormGuard = 1e-12f;

}  // namespace kddt::ops
