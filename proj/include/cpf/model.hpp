#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cpf/config.hpp"
#include "cpf/particle.hpp"

namespace cpf {

// Dual-stage attention parameters. Input attention scores each driving
// series against the encoder's mean state over the window; temporal
// attention scores each encoder step against the decoder's mean state.
struct AttentionParams {
    Tensor v_in, w_in, u_in;      // 1 x T, T x 2m, T x T
    Tensor v_tmp, w_tmp, u_tmp;   // 1 x m, m x 2p, m x m
    Tensor y_map_w, y_map_b;      // 1 x (m+1), 1 x 1
    Tensor out_wy, out_v, out_bw, out_bv;  // p x (p+m), 1 x p, p x 1, 1 x 1
};

AttentionParams init_attention(int t, int m, int p, std::uint64_t seed);

// Full forecasting model. Which sub-layers exist and whether they carry a
// particle ensemble is decided by the mode: rnn / cpf-rnn use the encoder
// stack alone on raw inputs; the darnn family adds the attention
// encoder-decoder, with cpf-enc / cpf-dec / cpf-darnn swapping the matching
// sub-layer for a CPF-LSTM.
struct ForecastModel {
    ModelMode mode = ModelMode::CpfRnn;
    ResamplerKind resampler = ResamplerKind::Continuous;
    int k = 1, t = 10, m = 16, p = 16, n = 1;

    LstmParams enc;
    CpfHeads enc_heads;
    LstmParams dec;        // darnn modes
    CpfHeads dec_heads;    // darnn modes
    AttentionParams attn;  // darnn modes

    bool is_darnn() const;
    bool cpf_encoder() const;
    bool cpf_decoder() const;
    // Particle count of a sub-layer: K when it runs the particle filter,
    // 1 (deterministic, zero noise) otherwise.
    int enc_particles() const { return cpf_encoder() ? k : 1; }
    int dec_particles() const { return cpf_decoder() ? k : 1; }

    static ForecastModel create(const RunConfig& cfg, int n_drivers);

    // Named registry of the mode's live parameter tensors, in a stable order.
    std::vector<std::pair<std::string, Tensor*>> parameters();

    std::uint64_t checksum() const;  // FNV-1a over parameter bytes
};

// Registers every parameter on the graph (leaves when trainable, constants
// otherwise) and returns a copy whose tensors carry node ids.
ForecastModel bind_model(Graph& g, const ForecastModel& model, bool trainable);

// alpha = softmax over driving series of v_in' tanh(w_in [h; s] + u_in x^k),
// where x^k runs over the rows of the n x T window. Returns a 1 x n row.
Tensor input_attention(Graph& g, const AttentionParams& attn, const Tensor& window,
                       const Tensor& h_mean, const Tensor& s_mean);

struct TemporalAttention {
    Tensor beta;     // 1 x T
    Tensor context;  // m x 1
};

// beta = softmax over encoder steps of v_tmp' tanh(w_tmp [d; s'] + u_tmp h_i);
// context = sum_i beta_i h_i over the m x T matrix of encoder means.
TemporalAttention temporal_attention(Graph& g, const AttentionParams& attn,
                                     const Tensor& enc_means, const Tensor& d_mean,
                                     const Tensor& s_mean);

// y_hat = out_v (out_wy [d; c] + out_bw) + out_bv.
Tensor predict_output(Graph& g, const AttentionParams& attn, const Tensor& d_mean,
                      const Tensor& context);

struct EncodeResult {
    Tensor means;  // m x T matrix of per-step mean hidden states
    ParticleEnsemble ensemble;
    std::vector<Tensor> step_log_w;  // CPF encoder only
};

struct DecodeResult {
    Tensor d_mean;   // p x 1
    Tensor context;  // m x 1
    ParticleEnsemble ensemble;
};

// Attention encoder over the window. Measurement updates and resampling run
// against the observed history y_1..y_{T-1}; the final step advances by
// transition only, so the recorded state at T never sees the label.
EncodeResult encode(Graph& g, const ForecastModel& bound, const SeriesWindow& w, Rng& rng);

// Teacher-forced attention decoder over y_1..y_{T-1}.
DecodeResult decode(Graph& g, const ForecastModel& bound, const Tensor& enc_means,
                    const SeriesWindow& w, Rng& rng);

struct WindowForward {
    Tensor y_hat;                    // 1 x 1
    std::vector<Tensor> step_log_w;  // per-step 1 x K unnormalized log weights (cpf-rnn)
};

// Unrolls the bound model over one window. The prediction is always computed
// from transition-updated (pre-measurement) states at the final step.
WindowForward forward_window(Graph& g, const ForecastModel& bound, const SeriesWindow& w,
                             Rng& rng);

// Flat parameter vector helpers (sweep experiments, gradient utilities).
std::vector<double> flatten_parameters(ForecastModel& model);
void set_parameters(ForecastModel& model, const std::vector<double>& flat);

}  // namespace cpf
