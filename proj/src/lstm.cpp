#include "kddt/lstm.hpp"

#include <stdexcept>

namespace kddt {

using namespace ops;

LstmParams make_lstm_params(ParameterStore& store, const std::string& prefix, int input_dim,
                            int hidden_dim, Rng& rng) {
    LstmParams p;
    p.w_ih = store.add_weight(prefix + "/w_ih", {4 * hidden_dim, input_dim}, input_dim, rng);
    p.w_hh = store.add_weight(prefix + "/w_hh", {4 * hidden_dim, hidden_dim}, hidden_dim, rng);
    p.b = store.add_bias(prefix + "/b", {4 * hidden_dim});
    return p;
}

LstmParams lstm_params_from(const ParameterStore& store, const std::string& prefix) {
    LstmParams p;
    p.w_ih = store.get(prefix + "/w_ih");
    p.w_hh = store.get(prefix + "/w_hh");
    p.b = store.get(prefix + "/b");
    return p;
}

LstmState lstm_zero_state(int hidden_dim) {
    return {Tensor::zeros({hidden_dim}), Tensor::zeros({hidden_dim})};
}

LstmState lstm_cell(const TensorPtr& x, const LstmState& prev, const LstmParams& p) {
    int H = p.hidden_dim();
    TensorPtr gates = affine2(x, p.w_ih, prev.h, p.w_hh, p.b);
    TensorPtr i = sigmoid(slice1d(gates, 0, H));
    TensorPtr f = sigmoid(slice1d(gates, H, H));
    TensorPtr g = tanh_act(slice1d(gates, 2 * H, H));
    TensorPtr o = sigmoid(slice1d(gates, 3 * H, H));
    TensorPtr c = add(mul(f, prev.c), mul(i, g));
    TensorPtr h = mul(o, tanh_act(c));
    return {h, c};
}

LstmSequenceOutput lstm_forward(const TensorPtr& x_seq, const LstmParams& params,
                                const LstmState& initial) {
    if (x_seq->shape.size() != 2) {
        throw std::invalid_argument("lstm_forward: input sequence must be [L x D], got " +
                                    shape_str(x_seq->shape));
    }
    int L = x_seq->dim(0);
    if (L < 1) throw std::invalid_argument("lstm_forward: sequence must have at least one step");
    LstmState state = initial;
    std::vector<TensorPtr> hs;
    hs.reserve(L);
    for (int t = 0; t < L; ++t) {
        state = lstm_cell(row(x_seq, t), state, params);
        hs.push_back(state.h);
    }
    return {stack_rows(hs), state};
}

TensorPtr bilstm_forward(const TensorPtr& x_seq, const LstmParams& fwd, const LstmParams& bwd) {
    if (fwd.hidden_dim() != bwd.hidden_dim()) {
        throw std::invalid_argument("bilstm_forward: direction hidden sizes disagree (" +
                                    std::to_string(fwd.hidden_dim()) + " vs " +
                                    std::to_string(bwd.hidden_dim()) + ")");
    }
    int L = x_seq->dim(0);
    int H = fwd.hidden_dim();

    LstmState state = lstm_zero_state(H);
    std::vector<TensorPtr> fwd_h(L);
    for (int t = 0; t < L; ++t) {
        state = lstm_cell(row(x_seq, t), state, fwd);
        fwd_h[t] = state.h;
    }
    state = lstm_zero_state(H);
    std::vector<TensorPtr> out(L);
    for (int t = L - 1; t >= 0; --t) {
        state = lstm_cell(row(x_seq, t), state, bwd);
        out[t] = add(fwd_h[t], state.h);
    }
    return stack_rows(out);
}

}  // namespace kddt
