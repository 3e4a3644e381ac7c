#include "cpf/filter.hpp"

#include <stdexcept>
#include <string>

namespace cpf {

FilterResult filter_sequence(Graph& g, const TransitionFn& transition,
                             const LogDensityFn& log_density, const ResampleFn& resample,
                             ParticleEnsemble init, const std::vector<double>& observations,
                             Rng& rng) {
    if (observations.empty())
        throw std::invalid_argument("filter_sequence: need at least one observation");
    FilterResult res;
    res.trajectory.reserve(observations.size());
    ParticleEnsemble ens = std::move(init);
    for (std::size_t t = 0; t < observations.size(); ++t) {
        try {
            transition(g, ens, static_cast<int>(t), rng);
            Tensor log_w = log_density(g, ens, static_cast<int>(t), observations[t]);
            if (log_w.rows != 1 || log_w.cols != ens.count())
                throw std::invalid_argument("log density returned " + log_w.shape_str() +
                                            ", expected 1x" + std::to_string(ens.count()));
            ens.log_w = log_w;
            ens.norm_w = g.softmax(log_w);
            res.step_logliks.push_back(step_loglik(g, log_w).item());
            ens = resample(g, ens, rng);
        } catch (const std::exception& e) {
            throw std::runtime_error("filter_sequence: step " + std::to_string(t) + ": " +
                                     e.what());
        }
        res.trajectory.push_back(ens);
    }
    res.total_loglik = 0.0;
    for (double l : res.step_logliks) res.total_loglik += l;
    return res;
}

}  // namespace cpf
