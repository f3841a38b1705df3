#pragma once

#include <string>
#include <vector>

#include "kddt/ops.hpp"
#include "kddt/param_store.hpp"

namespace kddt {

// Gate packing order in the fused weight matrices: input, forget, cell, output.
struct LstmParams {
    TensorPtr w_ih;  // [4H x D]
    TensorPtr w_hh;  // [4H x H]
    TensorPtr b;     // [4H]

    int hidden_dim() const { return w_hh ? w_hh->dim(1) : 0; }
    int input_dim() const { return w_ih ? w_ih->dim(1) : 0; }
};

struct LstmState {
    TensorPtr h;
    TensorPtr c;
};

LstmParams make_lstm_params(ParameterStore& store, const std::string& prefix, int input_dim,
                            int hidden_dim, Rng& rng);
LstmParams lstm_params_from(const ParameterStore& store, const std::string& prefix);

LstmState lstm_zero_state(int hidden_dim);

// One recurrence step: sigmoid input/forget/output gates, tanh candidate.
LstmState lstm_cell(const TensorPtr& x, const LstmState& prev, const LstmParams& p);

struct LstmSequenceOutput {
    TensorPtr h_seq;  // [L x H]
    LstmState last;
};

// Runs the recurrence over every row of x_seq [L x D] from a given state.
LstmSequenceOutput lstm_forward(const TensorPtr& x_seq, const LstmParams& params,
                                const LstmState& initial);

// Forward pass plus reversed pass with separate parameters; outputs are the
// elementwise sum of the two directions at each position, shape [L x H].
TensorPtr bilstm_forward(const TensorPtr& x_seq, const LstmParams& fwd, const LstmParams& bwd);

}  // namespace kddt
