#include "cpf/model.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cpf {

namespace {

Tensor uniform_mat(Rng& rng, int r, int c) {
    Tensor t(r, c);
    const double bound = 1.0 / std::sqrt(static_cast<double>(c));
    for (auto& x : t.v) x = rng.uniform(-bound, bound);
    return t;
}

}  // namespace

AttentionParams init_attention(int t, int m, int p, std::uint64_t seed) {
    if (t < 2 || m < 1 || p < 1) throw std::invalid_argument("init_attention: bad sizes");
    Rng rng(seed);
    AttentionParams a;
    a.v_in = uniform_mat(rng, 1, t);
    a.w_in = uniform_mat(rng, t, 2 * m);
    a.u_in = uniform_mat(rng, t, t);
    a.v_tmp = uniform_mat(rng, 1, m);
    a.w_tmp = uniform_mat(rng, m, 2 * p);
    a.u_tmp = uniform_mat(rng, m, m);
    a.y_map_w = uniform_mat(rng, 1, m + 1);
    a.y_map_b = Tensor::zeros(1, 1);
    a.out_wy = uniform_mat(rng, p, p + m);
    a.out_v = uniform_mat(rng, 1, p);
    a.out_bw = Tensor::zeros(p, 1);
    a.out_bv = Tensor::zeros(1, 1);
    return a;
}

bool ForecastModel::is_darnn() const {
    return mode == ModelMode::Darnn || mode == ModelMode::CpfEnc || mode == ModelMode::CpfDec ||
           mode == ModelMode::CpfDarnn;
}

bool ForecastModel::cpf_encoder() const {
    return mode == ModelMode::CpfRnn || mode == ModelMode::CpfEnc || mode == ModelMode::CpfDarnn;
}

bool ForecastModel::cpf_decoder() const {
    return mode == ModelMode::CpfDec || mode == ModelMode::CpfDarnn;
}

ForecastModel ForecastModel::create(const RunConfig& cfg, int n_drivers) {
    cfg.validate();
    if (n_drivers < 1) throw std::invalid_argument("ForecastModel: need at least one driver");
    if (cfg.n > 0 && cfg.n != n_drivers)
        throw std::invalid_argument("ForecastModel: config n=" + std::to_string(cfg.n) +
                                    " but data has " + std::to_string(n_drivers) + " drivers");
    ForecastModel model;
    model.mode = cfg.model;
    model.resampler = cfg.resampler;
    model.k = cfg.k;
    model.t = cfg.t;
    model.m = cfg.m;
    model.p = cfg.p;
    model.n = n_drivers;

    Rng seeds(cfg.seed);
    model.enc = init_lstm(cfg.m, n_drivers, seeds.raw());
    model.enc_heads = init_heads(cfg.m, n_drivers, seeds.raw());
    if (model.is_darnn()) {
        model.dec = init_lstm(cfg.p, 1, seeds.raw());
        model.dec_heads = init_heads(cfg.p, 1, seeds.raw());
        model.attn = init_attention(cfg.t, cfg.m, cfg.p, seeds.raw());
    }
    return model;
}

std::vector<std::pair<std::string, Tensor*>> ForecastModel::parameters() {
    std::vector<std::pair<std::string, Tensor*>> out;
    auto add = [&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); };

    add("enc.wf", enc.wf);
    add("enc.wi", enc.wi);
    add("enc.wo", enc.wo);
    add("enc.wc", enc.wc);
    add("enc.bf", enc.bf);
    add("enc.bi", enc.bi);
    add("enc.bo", enc.bo);
    add("enc.bc", enc.bc);

    if (cpf_encoder()) {
        add("enc_heads.noise_w", enc_heads.noise_w);
        add("enc_heads.noise_b", enc_heads.noise_b);
        add("enc_heads.mlp_w1", enc_heads.mlp_w1);
        add("enc_heads.mlp_b1", enc_heads.mlp_b1);
        add("enc_heads.mlp_w2", enc_heads.mlp_w2);
        add("enc_heads.mlp_b2", enc_heads.mlp_b2);
    }
    if (!is_darnn()) {
        // rnn / cpf-rnn predict through the encoder output head; it also
        // orders particles for continuous resampling.
        add("enc_heads.out_w", enc_heads.out_w);
        add("enc_heads.out_b", enc_heads.out_b);
    } else if (cpf_encoder()) {
        add("enc_heads.out_w", enc_heads.out_w);
        add("enc_heads.out_b", enc_heads.out_b);
    }

    if (is_darnn()) {
        add("dec.wf", dec.wf);
        add("dec.wi", dec.wi);
        add("dec.wo", dec.wo);
        add("dec.wc", dec.wc);
        add("dec.bf", dec.bf);
        add("dec.bi", dec.bi);
        add("dec.bo", dec.bo);
        add("dec.bc", dec.bc);
        if (cpf_decoder()) {
            add("dec_heads.noise_w", dec_heads.noise_w);
            add("dec_heads.noise_b", dec_heads.noise_b);
            add("dec_heads.mlp_w1", dec_heads.mlp_w1);
            add("dec_heads.mlp_b1", dec_heads.mlp_b1);
            add("dec_heads.mlp_w2", dec_heads.mlp_w2);
            add("dec_heads.mlp_b2", dec_heads.mlp_b2);
            add("dec_heads.out_w", dec_heads.out_w);
            add("dec_heads.out_b", dec_heads.out_b);
        }
        add("attn.v_in", attn.v_in);
        add("attn.w_in", attn.w_in);
        add("attn.u_in", attn.u_in);
        add("attn.v_tmp", attn.v_tmp);
        add("attn.w_tmp", attn.w_tmp);
        add("attn.u_tmp", attn.u_tmp);
        add("attn.y_map_w", attn.y_map_w);
        add("attn.y_map_b", attn.y_map_b);
        add("attn.out_wy", attn.out_wy);
        add("attn.out_v", attn.out_v);
        add("attn.out_bw", attn.out_bw);
        add("attn.out_bv", attn.out_bv);
    }
    return out;
}

std::uint64_t ForecastModel::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](const Tensor& t) {
        for (double d : t.v) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(d));
            std::memcpy(&bits, &d, sizeof(bits));
            for (int b = 0; b < 8; ++b) {
                h ^= (bits >> (8 * b)) & 0xFF;
                h *= 1099511628211ULL;
            }
        }
    };
    auto self = const_cast<ForecastModel*>(this);
    for (auto& [name, t] : self->parameters()) {
        (void)name;
        mix(*t);
    }
    return h;
}

ForecastModel bind_model(Graph& g, const ForecastModel& model, bool trainable) {
    ForecastModel bound = model;
    for (auto& [name, t] : bound.parameters()) {
        (void)name;
        *t = trainable ? g.leaf(*t) : g.constant(*t);
    }
    return bound;
}

Tensor input_attention(Graph& g, const AttentionParams& attn, const Tensor& window,
                       const Tensor& h_mean, const Tensor& s_mean) {
    // window rows are driving series; scores want one column per series.
    Tensor wt(window.cols, window.rows);
    for (int r = 0; r < window.rows; ++r)
        for (int c = 0; c < window.cols; ++c) wt.at(c, r) = window.at(r, c);
    const Tensor query = g.matmul(attn.w_in, g.vstack({h_mean, s_mean}));  // T x 1
    const Tensor scores =
        g.matmul(attn.v_in, g.tanh(g.add_cols(g.matmul(attn.u_in, g.constant(wt)), query)));
    return g.softmax(scores);  // 1 x n
}

TemporalAttention temporal_attention(Graph& g, const AttentionParams& attn,
                                     const Tensor& enc_means, const Tensor& d_mean,
                                     const Tensor& s_mean) {
    const Tensor query = g.matmul(attn.w_tmp, g.vstack({d_mean, s_mean}));  // m x 1
    const Tensor scores =
        g.matmul(attn.v_tmp, g.tanh(g.add_cols(g.matmul(attn.u_tmp, enc_means), query)));
    TemporalAttention out;
    out.beta = g.softmax(scores);  // 1 x T
    out.context = g.matmul(enc_means, g.reshape(out.beta, enc_means.cols, 1));
    return out;
}

Tensor predict_output(Graph& g, const AttentionParams& attn, const Tensor& d_mean,
                      const Tensor& context) {
    const Tensor inner = g.add(g.matmul(attn.out_wy, g.vstack({d_mean, context})), attn.out_bw);
    return g.add(g.matmul(attn.out_v, inner), attn.out_bv);
}

namespace {

ParticleEnsemble resample_ensemble(Graph& g, const ForecastModel& bound,
                                   const ParticleEnsemble& ens, const CpfHeads& heads, Rng& rng) {
    if (bound.resampler == ResamplerKind::Multinomial)
        return multinomial_resample(g, ens, rng);
    return continuous_resample(g, ens, heads.out_w, heads.out_b, rng);
}

}  // namespace

EncodeResult encode(Graph& g, const ForecastModel& bound, const SeriesWindow& w, Rng& rng) {
    const int t_len = w.drivers.cols;
    if (t_len != bound.t)
        throw std::invalid_argument("encode: window length " + std::to_string(t_len) +
                                    " does not match model T=" + std::to_string(bound.t));
    const bool cpf = bound.cpf_encoder();
    EncodeResult res;
    ParticleEnsemble ens = ParticleEnsemble::init(g, bound.m, bound.enc_particles());
    std::vector<Tensor> means;
    means.reserve(t_len);
    for (int t = 0; t < t_len; ++t) {
        const Tensor h_mean = g.mean_cols(ens.hidden);
        const Tensor s_mean = g.mean_cols(ens.cell);
        const Tensor alpha = input_attention(g, bound.attn, w.drivers, h_mean, s_mean);
        Tensor x_col(bound.n, 1);
        for (int r = 0; r < bound.n; ++r) x_col.at(r, 0) = w.drivers.at(r, t);
        const Tensor x_scaled =
            g.mul(g.reshape(alpha, bound.n, 1), g.constant(x_col));
        ens = transition_update(g, ens, x_scaled, bound.enc, cpf ? &bound.enc_heads : nullptr,
                                rng);
        if (cpf && t < t_len - 1) {
            ens = measurement_update(g, ens, w.y_history[t], bound.enc_heads);
            res.step_log_w.push_back(ens.log_w);
            ens = resample_ensemble(g, bound, ens, bound.enc_heads, rng);
        }
        means.push_back(g.mean_cols(ens.hidden));
    }
    res.means = g.hstack(means);
    res.ensemble = std::move(ens);
    return res;
}

DecodeResult decode(Graph& g, const ForecastModel& bound, const Tensor& enc_means,
                    const SeriesWindow& w, Rng& rng) {
    const int t_len = bound.t;
    const bool cpf = bound.cpf_decoder();
    ParticleEnsemble ens = ParticleEnsemble::init(g, bound.p, bound.dec_particles());
    for (int i = 0; i + 1 < t_len; ++i) {
        const Tensor d_mean = g.mean_cols(ens.hidden);
        const Tensor s_mean = g.mean_cols(ens.cell);
        TemporalAttention ta = temporal_attention(g, bound.attn, enc_means, d_mean, s_mean);
        const Tensor y_and_c =
            g.vstack({g.constant(Tensor::scalar(w.y_history[i])), ta.context});
        const Tensor y_dec = g.add(g.matmul(bound.attn.y_map_w, y_and_c), bound.attn.y_map_b);
        ens = transition_update(g, ens, y_dec, bound.dec, cpf ? &bound.dec_heads : nullptr, rng);
        if (cpf && i + 1 < t_len - 1) {
            // The state now sits at time i+2; weight it against the matching
            // observed history point, never the label.
            ens = measurement_update(g, ens, w.y_history[i + 1], bound.dec_heads);
            ens = resample_ensemble(g, bound, ens, bound.dec_heads, rng);
        }
    }
    DecodeResult res;
    res.d_mean = g.mean_cols(ens.hidden);
    TemporalAttention final_ta =
        temporal_attention(g, bound.attn, enc_means, res.d_mean, g.mean_cols(ens.cell));
    res.context = final_ta.context;
    res.ensemble = std::move(ens);
    return res;
}

WindowForward forward_window(Graph& g, const ForecastModel& bound, const SeriesWindow& w,
                             Rng& rng) {
    WindowForward out;
    if (bound.is_darnn()) {
        EncodeResult enc = encode(g, bound, w, rng);
        DecodeResult dec = decode(g, bound, enc.means, w, rng);
        out.y_hat = predict_output(g, bound.attn, dec.d_mean, dec.context);
        return out;
    }

    const int t_len = w.drivers.cols;
    if (t_len != bound.t)
        throw std::invalid_argument("forward_window: window length " + std::to_string(t_len) +
                                    " does not match model T=" + std::to_string(bound.t));
    const bool cpf = bound.cpf_encoder();
    ParticleEnsemble ens = ParticleEnsemble::init(g, bound.m, bound.enc_particles());
    for (int t = 0; t < t_len; ++t) {
        Tensor x_col(bound.n, 1);
        for (int r = 0; r < bound.n; ++r) x_col.at(r, 0) = w.drivers.at(r, t);
        ens = transition_update(g, ens, g.constant(x_col), bound.enc,
                                cpf ? &bound.enc_heads : nullptr, rng);
        if (t == t_len - 1)
            out.y_hat = predict_mean(g, ens, bound.enc_heads.out_w, bound.enc_heads.out_b);
        if (cpf) {
            const double y_obs = t < t_len - 1 ? w.y_history[t] : w.y_label;
            ens = measurement_update(g, ens, y_obs, bound.enc_heads);
            out.step_log_w.push_back(ens.log_w);
            if (t < t_len - 1) ens = resample_ensemble(g, bound, ens, bound.enc_heads, rng);
        }
    }
    return out;
}

std::vector<double> flatten_parameters(ForecastModel& model) {
    std::vector<double> flat;
    for (auto& [name, t] : model.parameters()) {
        (void)name;
        flat.insert(flat.end(), t->v.begin(), t->v.end());
    }
    return flat;
}

void set_parameters(ForecastModel& model, const std::vector<double>& flat) {
    std::size_t pos = 0;
    for (auto& [name, t] : model.parameters()) {
        (void)name;
        if (pos + t->v.size() > flat.size())
            throw std::invalid_argument("set_parameters: flat vector too short");
        std::copy(flat.begin() + pos, flat.begin() + pos + t->v.size(), t->v.begin());
        pos += t->v.size();
    }
    if (pos != flat.size())
        throw std::invalid_argument("set_parameters: flat vector has extra values");
}

}  // namespace cpf
