#pragma once

#include <cstdint>
#include <vector>

#include "cpf/lstm.hpp"
#include "cpf/rng.hpp"
#include "cpf/tensor.hpp"

namespace cpf {

// Log-std of the learned transition noise is clamped to this range before
// exponentiation; learned log measurement weights are clamped to
// +/- kLogWeightClamp so every weight stays bounded and finite.
inline constexpr double kLogStdMin = -6.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kLogWeightClamp = 30.0;
inline constexpr int kWeightHiddenSize = 32;

// Weighted particle set. Particles are held column-wise: hidden and cell are
// m x K, one column per particle; log_w holds the K unnormalized log weights
// and norm_w their softmax.
struct ParticleEnsemble {
    Tensor hidden;
    Tensor cell;
    Tensor log_w;
    Tensor norm_w;

    int count() const { return hidden.cols; }
    int dim() const { return hidden.rows; }
    std::vector<double> particle(int k) const;  // hidden column k

    // Zero states, uniform weights.
    static ParticleEnsemble init(Graph& g, int m, int k);
    static ParticleEnsemble from_states(Graph& g, const Tensor& hidden, const Tensor& cell);
};

// Learned heads attached to one CPF-LSTM layer: f_noise maps [h_prev; x] to a
// per-coordinate log standard deviation, f_weight scores a particle against
// the observation through a small tanh MLP, f_out projects a hidden state to
// the predicted scalar (also used to order particles for resampling).
struct CpfHeads {
    int m = 0;
    int n = 0;
    Tensor noise_w, noise_b;           // m x (m+n), m x 1
    Tensor mlp_w1, mlp_b1;             // 32 x (m+1), 32 x 1
    Tensor mlp_w2, mlp_b2;             // 1 x 32, 1 x 1
    Tensor out_w, out_b;               // 1 x m, 1 x 1
};

CpfHeads init_heads(int m, int n, std::uint64_t seed);

// eps = exp(s) * zeta with s = clamp(noise_w [h; x] + noise_b, -6, 2) and
// zeta standard normal. Reparameterized: the gradient flows through s only.
// h_prev is m x K, x is n x K; returns m x K.
Tensor sample_noise(Graph& g, const CpfHeads& heads, const Tensor& h_prev, const Tensor& x,
                    Rng& rng);

// Advances every particle through the LSTM recurrence with the shared input
// x (n x 1, broadcast across particles) and adds transition noise to the
// hidden states when `heads` is non-null. Cell states advance noise-free.
// Weights are carried over untouched.
ParticleEnsemble transition_update(Graph& g, const ParticleEnsemble& ens, const Tensor& x,
                                   const LstmParams& lstm, const CpfHeads* heads, Rng& rng);

// log_w[k] = clamp(f_weight([h_k; y]), -30, 30); norm_w = softmax(log_w).
ParticleEnsemble measurement_update(Graph& g, const ParticleEnsemble& ens, double y,
                                    const CpfHeads& heads);

// log((1/K) sum_k exp(log_w[k])), the per-step marginal likelihood estimate.
Tensor step_loglik(Graph& g, const Tensor& log_w);

// Draws K particles i.i.d. from the weighted empirical distribution and
// resets the weights to uniform. The overload taking explicit uniforms
// supports common-random-number experiments.
ParticleEnsemble multinomial_resample(Graph& g, const ParticleEnsemble& ens, Rng& rng);
ParticleEnsemble multinomial_resample(Graph& g, const ParticleEnsemble& ens,
                                      const std::vector<double>& uniforms);

// Piecewise-linear ECDF mass coefficients for weights already sorted by the
// particle projection: lambda[0] = pi[0]/2, lambda[K] = pi[K-1]/2, and
// lambda[k] = (pi[k-1] + pi[k])/2 in between; sums to 1.
Tensor ecdf_coefficients(Graph& g, const Tensor& sorted_norm_w);

// Resamples by inverting the continuous ECDF approximation. Particles are
// ordered by the scalar projection out_w h + out_b; each uniform picks either
// an endpoint atom (returning that particle exactly) or an interior interval,
// where the full (hidden, cell) state is linearly interpolated between the
// adjacent sorted particles. Gradients flow through the interpolated values
// and the interpolation coefficient; the sort order and interval choices are
// constants of the forward pass. O(K log K).
ParticleEnsemble continuous_resample(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                                     const Tensor& out_b, const std::vector<double>& uniforms);

// Stratified wrapper: u_k = (k - 1 + v_k) / K with v_k uniform on (0, 1).
ParticleEnsemble continuous_resample(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                                     const Tensor& out_b, Rng& rng);

std::vector<double> stratified_uniforms(int k, Rng& rng);

// Upper bound max_k pi_k / 2 on the sup distance between the step ECDF and
// its continuous approximation.
double ecdf_sup_distance(const std::vector<double>& norm_w);

// ŷ = f_out(mean of particle hidden states).
Tensor predict_mean(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                    const Tensor& out_b);

// Point evaluation of the step ECDF and its continuous approximation over
// projections sorted ascending with matching weights. Backs property tests
// and the ecdf-dump CLI output.
double step_ecdf_at(const std::vector<double>& proj_sorted, const std::vector<double>& pi_sorted,
                    double h);
double continuous_ecdf_at(const std::vector<double>& proj_sorted,
                          const std::vector<double>& pi_sorted, double h);

struct EcdfGrid {
    std::vector<double> grid;
    std::vector<double> f_hat;
    std::vector<double> f_tilde;
};

// Evaluates both curves on an evenly spaced grid spanning the projections.
EcdfGrid ecdf_grid(std::vector<double> projections, std::vector<double> weights, int points);

// Checks ensemble invariants (normalized weights sum to one, finite log
// weights); throws std::runtime_error on violation.
void check_ensemble(const ParticleEnsemble& ens);

}  // namespace cpf
