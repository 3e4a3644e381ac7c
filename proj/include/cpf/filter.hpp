#pragma once

#include <functional>
#include <vector>

#include "cpf/particle.hpp"

namespace cpf {

// Generic sampling-importance-resampling loop with plug-in densities. Each
// step advances the ensemble, scores it against the observation, records the
// per-step marginal likelihood estimate, and resamples. The total is the
// standard SMC marginal log-likelihood estimator.
struct FilterResult {
    std::vector<ParticleEnsemble> trajectory;  // post-resample ensemble per step
    std::vector<double> step_logliks;
    double total_loglik = 0.0;
};

// Mutates the ensemble in place (states only; weights handled by the loop).
using TransitionFn = std::function<void(Graph&, ParticleEnsemble&, int, Rng&)>;
// Returns the 1 x K row of log p(y_t | particle_k).
using LogDensityFn = std::function<Tensor(Graph&, const ParticleEnsemble&, int, double)>;
using ResampleFn = std::function<ParticleEnsemble(Graph&, const ParticleEnsemble&, Rng&)>;

FilterResult filter_sequence(Graph& g, const TransitionFn& transition,
                             const LogDensityFn& log_density, const ResampleFn& resample,
                             ParticleEnsemble init, const std::vector<double>& observations,
                             Rng& rng);

}  // namespace cpf
