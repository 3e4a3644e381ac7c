#include "cpf/lstm.hpp"

#include <cmath>

#include "cpf/rng.hpp"

namespace cpf {

LstmParams init_lstm(int m, int n, std::uint64_t seed) {
    if (m < 1 || n < 1) throw std::invalid_argument("init_lstm: m and n must be >= 1");
    Rng rng(seed);
    const double bound = 1.0 / std::sqrt(static_cast<double>(m + n));
    auto weight = [&] {
        Tensor w(m, m + n);
        for (auto& x : w.v) x = rng.uniform(-bound, bound);
        return w;
    };
    LstmParams p;
    p.m = m;
    p.n = n;
    p.wf = weight();
    p.wi = weight();
    p.wo = weight();
    p.wc = weight();
    p.bf = Tensor::full(m, 1, 1.0);
    p.bi = Tensor::zeros(m, 1);
    p.bo = Tensor::zeros(m, 1);
    p.bc = Tensor::zeros(m, 1);
    return p;
}

LstmState lstm_step(Graph& g, const LstmParams& p, const Tensor& h_prev, const Tensor& c_prev,
                    const Tensor& x) {
    if (h_prev.rows != p.m || c_prev.rows != p.m || x.rows != p.n ||
        h_prev.cols != c_prev.cols || h_prev.cols != x.cols)
        throw std::invalid_argument("lstm_step: state/input shapes " + h_prev.shape_str() + ", " +
                                    c_prev.shape_str() + ", " + x.shape_str() +
                                    " do not match m=" + std::to_string(p.m) +
                                    " n=" + std::to_string(p.n));
    const Tensor hx = g.vstack({h_prev, x});
    const Tensor f = g.sigmoid(g.add_cols(g.matmul(p.wf, hx), p.bf));
    const Tensor i = g.sigmoid(g.add_cols(g.matmul(p.wi, hx), p.bi));
    const Tensor o = g.sigmoid(g.add_cols(g.matmul(p.wo, hx), p.bo));
    const Tensor cand = g.tanh(g.add_cols(g.matmul(p.wc, hx), p.bc));
    LstmState out;
    out.c = g.add(g.mul(f, c_prev), g.mul(i, cand));
    out.h = g.mul(o, g.tanh(out.c));
    return out;
}

}  // namespace cpf
