#pragma once

#include <cstdint>

#include "cpf/tensor.hpp"

namespace cpf {

// Gate parameters of a single LSTM layer with hidden size m and input size n.
// All weight matrices act on the concatenation [h_prev; x] of length m + n.
struct LstmParams {
    int m = 0;
    int n = 0;
    Tensor wf, wi, wo, wc;  // m x (m+n): forget, input, output, candidate
    Tensor bf, bi, bo, bc;  // m x 1
};

// Weights uniform on [-1/sqrt(m+n), +1/sqrt(m+n)], biases zero except the
// forget-gate bias, which starts at 1.
LstmParams init_lstm(int m, int n, std::uint64_t seed);

struct LstmState {
    Tensor h;  // m x K
    Tensor c;  // m x K
};

// One recurrence step for K states held column-wise. h_prev and c_prev are
// m x K, x is n x K; pass K = 1 for the plain single-state cell.
LstmState lstm_step(Graph& g, const LstmParams& p, const Tensor& h_prev, const Tensor& c_prev,
                    const Tensor& x);

}  // namespace cpf
