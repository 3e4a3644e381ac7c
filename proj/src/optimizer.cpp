#include "cpf/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace cpf {

void AdamState::reset(const std::vector<Tensor*>& params) {
    m1.clear();
    m2.clear();
    for (const Tensor* p : params) {
        m1.emplace_back(p->v.size(), 0.0);
        m2.emplace_back(p->v.size(), 0.0);
    }
    steps = 0;
}

double clip_global_norm(std::vector<Tensor>& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& gt : grads)
        for (double gi : gt.v) sq += gi * gi;
    const double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        const double scale = max_norm / norm;
        for (auto& gt : grads)
            for (double& gi : gt.v) gi *= scale;
    }
    return norm;
}

bool adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads,
               AdamState& state, const AdamConfig& cfg) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam_step: params/grads size mismatch");
    if (state.m1.size() != params.size()) state.reset(params);
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (params[i]->v.size() != grads[i].v.size())
            throw std::invalid_argument("adam_step: gradient shape mismatch at parameter " +
                                        std::to_string(i));
        for (double gi : grads[i].v)
            if (!std::isfinite(gi)) return false;
    }

    state.steps += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.steps));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.steps));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& m1 = state.m1[i];
        auto& m2 = state.m2[i];
        auto& pv = params[i]->v;
        const auto& gv = grads[i].v;
        for (std::size_t j = 0; j < pv.size(); ++j) {
            m1[j] = cfg.beta1 * m1[j] + (1.0 - cfg.beta1) * gv[j];
            m2[j] = cfg.beta2 * m2[j] + (1.0 - cfg.beta2) * gv[j] * gv[j];
            const double m1_hat = m1[j] / bc1;
            const double m2_hat = m2[j] / bc2;
            pv[j] -= cfg.lr * m1_hat / (std::sqrt(m2_hat) + cfg.eps);
        }
    }
    return true;
}

}  // namespace cpf
