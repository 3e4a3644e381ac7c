#include "cpf/particle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cpf {

std::vector<double> ParticleEnsemble::particle(int k) const {
    std::vector<double> out(hidden.rows);
    for (int r = 0; r < hidden.rows; ++r) out[r] = hidden.at(r, k);
    return out;
}

ParticleEnsemble ParticleEnsemble::init(Graph& g, int m, int k) {
    if (m < 1 || k < 1) throw std::invalid_argument("ParticleEnsemble::init: m, K must be >= 1");
    return from_states(g, Tensor::zeros(m, k), Tensor::zeros(m, k));
}

ParticleEnsemble ParticleEnsemble::from_states(Graph& g, const Tensor& hidden,
                                               const Tensor& cell) {
    if (hidden.rows != cell.rows || hidden.cols != cell.cols)
        throw std::invalid_argument("ParticleEnsemble: hidden " + hidden.shape_str() +
                                    " vs cell " + cell.shape_str());
    const int k = hidden.cols;
    ParticleEnsemble ens;
    ens.hidden = hidden.node >= 0 ? hidden : g.constant(hidden);
    ens.cell = cell.node >= 0 ? cell : g.constant(cell);
    ens.log_w = g.constant(Tensor::full(1, k, -std::log(static_cast<double>(k))));
    ens.norm_w = g.constant(Tensor::full(1, k, 1.0 / k));
    return ens;
}

CpfHeads init_heads(int m, int n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw std::invalid_argument("init_heads: m, n must be >= 1");
    Rng rng(seed);
    auto uniform_mat = [&](int r, int c) {
        Tensor t(r, c);
        const double bound = 1.0 / std::sqrt(static_cast<double>(c));
        for (auto& x : t.v) x = rng.uniform(-bound, bound);
        return t;
    };
    CpfHeads h;
    h.m = m;
    h.n = n;
    h.noise_w = uniform_mat(m, m + n);
    h.noise_b = Tensor::full(m, 1, -2.0);  // start with small transition noise
    h.mlp_w1 = uniform_mat(kWeightHiddenSize, m + 1);
    h.mlp_b1 = Tensor::zeros(kWeightHiddenSize, 1);
    h.mlp_w2 = uniform_mat(1, kWeightHiddenSize);
    h.mlp_b2 = Tensor::zeros(1, 1);
    h.out_w = uniform_mat(1, m);
    h.out_b = Tensor::zeros(1, 1);
    return h;
}

Tensor sample_noise(Graph& g, const CpfHeads& heads, const Tensor& h_prev, const Tensor& x,
                    Rng& rng) {
    const Tensor hx = g.vstack({h_prev, x});
    const Tensor log_std =
        g.clamp(g.add_cols(g.matmul(heads.noise_w, hx), heads.noise_b), kLogStdMin, kLogStdMax);
    Tensor zeta(h_prev.rows, h_prev.cols);
    for (auto& z : zeta.v) z = rng.normal();
    return g.mul(g.exp(log_std), g.constant(zeta));
}

ParticleEnsemble transition_update(Graph& g, const ParticleEnsemble& ens, const Tensor& x,
                                   const LstmParams& lstm, const CpfHeads* heads, Rng& rng) {
    const int k = ens.count();
    Tensor x_cols = x;
    if (x.cols == 1 && k > 1) x_cols = g.tile_cols(x.node >= 0 ? x : g.constant(x), k);
    if (x_cols.cols != k)
        throw std::invalid_argument("transition_update: input " + x.shape_str() + " for K=" +
                                    std::to_string(k));
    LstmState next = lstm_step(g, lstm, ens.hidden, ens.cell, x_cols);
    ParticleEnsemble out;
    out.cell = next.c;
    out.hidden = heads ? g.add(next.h, sample_noise(g, *heads, ens.hidden, x_cols, rng)) : next.h;
    out.log_w = ens.log_w;
    out.norm_w = ens.norm_w;
    return out;
}

ParticleEnsemble measurement_update(Graph& g, const ParticleEnsemble& ens, double y,
                                    const CpfHeads& heads) {
    if (!std::isfinite(y)) throw std::invalid_argument("measurement_update: y is not finite");
    const int k = ens.count();
    const Tensor input = g.vstack({ens.hidden, g.constant(Tensor::full(1, k, y))});
    const Tensor hid = g.tanh(g.add_cols(g.matmul(heads.mlp_w1, input), heads.mlp_b1));
    const Tensor score = g.add_cols(g.matmul(heads.mlp_w2, hid), heads.mlp_b2);
    ParticleEnsemble out = ens;
    out.log_w = g.clamp(score, -kLogWeightClamp, kLogWeightClamp);
    out.norm_w = g.softmax(out.log_w);
    return out;
}

Tensor step_loglik(Graph& g, const Tensor& log_w) {
    return g.scalar_affine(g.logsumexp(log_w), 1.0,
                           -std::log(static_cast<double>(log_w.size())));
}

namespace {

ParticleEnsemble gather_particles(Graph& g, const ParticleEnsemble& ens,
                                  const std::vector<int>& idx) {
    const int k = ens.count();
    ParticleEnsemble out;
    out.hidden = g.gather_cols(ens.hidden, idx);
    out.cell = g.gather_cols(ens.cell, idx);
    out.log_w = g.constant(Tensor::full(1, k, -std::log(static_cast<double>(k))));
    out.norm_w = g.constant(Tensor::full(1, k, 1.0 / k));
    return out;
}

}  // namespace

ParticleEnsemble multinomial_resample(Graph& g, const ParticleEnsemble& ens,
                                      const std::vector<double>& uniforms) {
    const int k = ens.count();
    if (static_cast<int>(uniforms.size()) != k)
        throw std::invalid_argument("multinomial_resample: need K uniforms");
    std::vector<double> cdf(k);
    std::partial_sum(ens.norm_w.v.begin(), ens.norm_w.v.end(), cdf.begin());
    cdf[k - 1] = 1.0;  // guard against rounding at the top
    std::vector<int> idx(k);
    for (int j = 0; j < k; ++j) {
        auto it = std::lower_bound(cdf.begin(), cdf.end(), uniforms[j]);
        idx[j] = static_cast<int>(it - cdf.begin());
    }
    return gather_particles(g, ens, idx);
}

ParticleEnsemble multinomial_resample(Graph& g, const ParticleEnsemble& ens, Rng& rng) {
    std::vector<double> us(ens.count());
    for (auto& u : us) u = rng.uniform_open();
    return multinomial_resample(g, ens, us);
}

Tensor ecdf_coefficients(Graph& g, const Tensor& sorted_norm_w) {
    if (sorted_norm_w.size() == 0)
        throw std::invalid_argument("ecdf_coefficients: empty weight vector");
    if (sorted_norm_w.rows != 1)
        throw std::invalid_argument("ecdf_coefficients: expected a 1xK row, got " +
                                    sorted_norm_w.shape_str());
    const Tensor zero = g.constant(Tensor::scalar(0.0));
    const Tensor left = g.hstack({zero, sorted_norm_w});
    const Tensor right = g.hstack({sorted_norm_w, zero});
    return g.scalar_affine(g.add(left, right), 0.5, 0.0);
}

std::vector<double> stratified_uniforms(int k, Rng& rng) {
    std::vector<double> us(k);
    for (int j = 0; j < k; ++j) us[j] = (j + rng.uniform_open()) / k;
    return us;
}

ParticleEnsemble continuous_resample(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                                     const Tensor& out_b, const std::vector<double>& uniforms) {
    const int k = ens.count();
    if (static_cast<int>(uniforms.size()) != k)
        throw std::invalid_argument("continuous_resample: need K uniforms");
    for (double u : uniforms)
        if (!(u > 0.0 && u < 1.0))
            throw std::invalid_argument("continuous_resample: uniforms must lie strictly in (0,1)");

    // Scalar projection of each particle; only the induced order matters, so
    // this stays off-graph.
    std::vector<double> proj(k, out_b.v[0]);
    for (int j = 0; j < k; ++j)
        for (int r = 0; r < ens.dim(); ++r) proj[j] += out_w.v[r] * ens.hidden.at(r, j);
    for (double s : proj)
        if (!std::isfinite(s))
            throw std::runtime_error("continuous_resample: non-finite particle projection");

    std::vector<int> perm(k);
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return proj[a] < proj[b]; });

    const Tensor pi_sorted = g.gather(ens.norm_w, perm);
    const Tensor lambda = ecdf_coefficients(g, pi_sorted);
    const Tensor cum = g.cumsum(lambda);

    const std::vector<double>& lam = g.node(lambda.node).val;
    const std::vector<double>& c = g.node(cum.node).val;

    // Interval location per uniform: left atom, right atom, or the interior
    // piece j whose cumulative mass covers u.
    std::vector<int> idx_a(k), idx_b(k), idx_cum(k, 0), idx_lam(k, 0);
    std::vector<double> mask(k, 0.0);
    for (int j = 0; j < k; ++j) {
        const double u = uniforms[j];
        if (u <= c[0]) {
            idx_a[j] = idx_b[j] = perm[0];
        } else if (u > c[k - 1]) {
            idx_a[j] = idx_b[j] = perm[k - 1];
        } else {
            auto it = std::lower_bound(c.begin() + 1, c.begin() + k, u);
            const int r = static_cast<int>(it - c.begin());
            if (lam[r] == 0.0) {
                idx_a[j] = idx_b[j] = perm[r - 1];
            } else {
                idx_a[j] = perm[r - 1];
                idx_b[j] = perm[r];
                idx_cum[j] = r - 1;
                idx_lam[j] = r;
                mask[j] = 1.0;
            }
        }
    }

    // gamma = (u - C_{r-1}) / lambda_r on interior draws, 0 elsewhere; the
    // masked denominator avoids dividing by untouched coefficients.
    Tensor ones_minus_mask(1, k);
    for (int j = 0; j < k; ++j) ones_minus_mask.v[j] = 1.0 - mask[j];
    const Tensor mask_row = g.constant(Tensor(1, k, mask));
    const Tensor u_row = g.constant(Tensor(1, k, uniforms));
    const Tensor numer = g.mul(mask_row, g.sub(u_row, g.gather(cum, idx_cum)));
    const Tensor denom = g.add(g.mul(mask_row, g.gather(lambda, idx_lam)),
                               g.constant(ones_minus_mask));
    const Tensor gamma = g.div(numer, denom);

    const Tensor ha = g.gather_cols(ens.hidden, idx_a);
    const Tensor hb = g.gather_cols(ens.hidden, idx_b);
    const Tensor ca = g.gather_cols(ens.cell, idx_a);
    const Tensor cb = g.gather_cols(ens.cell, idx_b);

    ParticleEnsemble out;
    out.hidden = g.add(ha, g.mul_rowvec(g.sub(hb, ha), gamma));
    out.cell = g.add(ca, g.mul_rowvec(g.sub(cb, ca), gamma));
    out.log_w = g.constant(Tensor::full(1, k, -std::log(static_cast<double>(k))));
    out.norm_w = g.constant(Tensor::full(1, k, 1.0 / k));
    return out;
}

ParticleEnsemble continuous_resample(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                                     const Tensor& out_b, Rng& rng) {
    return continuous_resample(g, ens, out_w, out_b, stratified_uniforms(ens.count(), rng));
}

double ecdf_sup_distance(const std::vector<double>& norm_w) {
    if (norm_w.empty()) throw std::invalid_argument("ecdf_sup_distance: empty weights");
    return *std::max_element(norm_w.begin(), norm_w.end()) / 2.0;
}

Tensor predict_mean(Graph& g, const ParticleEnsemble& ens, const Tensor& out_w,
                    const Tensor& out_b) {
    return g.add(g.matmul(out_w, g.mean_cols(ens.hidden)), out_b);
}

double step_ecdf_at(const std::vector<double>& proj_sorted, const std::vector<double>& pi_sorted,
                    double h) {
    double f = 0.0;
    for (std::size_t i = 0; i < proj_sorted.size(); ++i)
        if (proj_sorted[i] <= h) f += pi_sorted[i];
    return f;
}

double continuous_ecdf_at(const std::vector<double>& proj_sorted,
                          const std::vector<double>& pi_sorted, double h) {
    const int k = static_cast<int>(proj_sorted.size());
    if (k == 0) throw std::invalid_argument("continuous_ecdf_at: empty ensemble");
    std::vector<double> lam(k + 1);
    lam[0] = pi_sorted[0] / 2.0;
    lam[k] = pi_sorted[k - 1] / 2.0;
    for (int i = 1; i < k; ++i) lam[i] = (pi_sorted[i - 1] + pi_sorted[i]) / 2.0;

    double f = h >= proj_sorted[0] ? lam[0] : 0.0;
    if (h >= proj_sorted[k - 1]) f += lam[k];
    for (int i = 1; i < k; ++i) {
        const double lo = proj_sorted[i - 1], hi = proj_sorted[i];
        double z;
        if (hi == lo)
            z = h >= lo ? 1.0 : 0.0;  // zero-width piece degenerates to a step
        else
            z = std::min(1.0, std::max(0.0, (h - lo) / (hi - lo)));
        f += lam[i] * z;
    }
    return f;
}

EcdfGrid ecdf_grid(std::vector<double> projections, std::vector<double> weights, int points) {
    if (projections.size() != weights.size() || projections.empty())
        throw std::invalid_argument("ecdf_grid: projections and weights must match and be nonempty");
    if (points < 2) throw std::invalid_argument("ecdf_grid: need at least 2 grid points");
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(wsum - 1.0) > 1e-6)
        throw std::invalid_argument("ecdf_grid: weights must be normalized");

    std::vector<int> perm(projections.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::stable_sort(perm.begin(), perm.end(),
                     [&](int a, int b) { return projections[a] < projections[b]; });
    std::vector<double> ps(projections.size()), ws(projections.size());
    for (std::size_t i = 0; i < perm.size(); ++i) {
        ps[i] = projections[perm[i]];
        ws[i] = weights[perm[i]];
    }

    const double span = std::max(ps.back() - ps.front(), 1e-12);
    const double lo = ps.front() - 0.05 * span;
    const double hi = ps.back() + 0.05 * span;
    EcdfGrid out;
    out.grid.resize(points);
    out.f_hat.resize(points);
    out.f_tilde.resize(points);
    for (int i = 0; i < points; ++i) {
        const double h = lo + (hi - lo) * i / (points - 1);
        out.grid[i] = h;
        out.f_hat[i] = step_ecdf_at(ps, ws, h);
        out.f_tilde[i] = continuous_ecdf_at(ps, ws, h);
    }
    return out;
}

void check_ensemble(const ParticleEnsemble& ens) {
    double sum = std::accumulate(ens.norm_w.v.begin(), ens.norm_w.v.end(), 0.0);
    if (std::abs(sum - 1.0) > 1e-10)
        throw std::runtime_error("ensemble invariant: weights sum to " + std::to_string(sum));
    for (double w : ens.norm_w.v)
        if (w < 0.0) throw std::runtime_error("ensemble invariant: negative weight");
    if (!ens.log_w.all_finite())
        throw std::runtime_error("ensemble invariant: non-finite log weight");
}

}  // namespace cpf
