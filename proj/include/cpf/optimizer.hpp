#pragma once

#include <vector>

#include "cpf/tensor.hpp"

namespace cpf {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> m1;
    std::vector<std::vector<double>> m2;
    long steps = 0;

    void reset(const std::vector<Tensor*>& params);
};

// Scales gradients in place so their global L2 norm is at most max_norm;
// returns the pre-clip norm.
double clip_global_norm(std::vector<Tensor>& grads, double max_norm);

// Bias-corrected adaptive-moment update. Returns false (and leaves params and
// state untouched) when any gradient entry is non-finite.
bool adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg);

}  // namespace cpf
