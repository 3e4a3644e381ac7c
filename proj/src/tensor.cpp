#include "cpf/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace cpf {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const EMat>;
using MapM = Eigen::Map<EMat>;

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " + a.shape_str() +
                                " vs " + b.shape_str());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const char* what) {
    throw std::invalid_argument(std::string(op) + ": " + what + ", got " + a.shape_str());
}

}  // namespace

Tensor::Tensor(int r, int c, std::vector<double> data) : rows(r), cols(c), v(std::move(data)) {
    if (static_cast<std::size_t>(r) * c != v.size())
        throw std::invalid_argument("Tensor: " + std::to_string(r) + "x" + std::to_string(c) +
                                    " does not match " + std::to_string(v.size()) + " values");
}

Tensor Tensor::scalar(double x) { return Tensor(1, 1, {x}); }

Tensor Tensor::full(int r, int c, double x) {
    Tensor t(r, c);
    std::fill(t.v.begin(), t.v.end(), x);
    return t;
}

Tensor Tensor::colvec(std::vector<double> data) {
    const int n = static_cast<int>(data.size());
    return Tensor(n, 1, std::move(data));
}

Tensor Tensor::rowvec(std::vector<double> data) {
    const int n = static_cast<int>(data.size());
    return Tensor(1, n, std::move(data));
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
    return t;
}

double Tensor::item() const {
    if (!is_scalar())
        throw std::invalid_argument("Tensor::item: not a scalar, got " + shape_str());
    return v[0];
}

bool Tensor::all_finite() const {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor::shape_str() const {
    return std::to_string(rows) + "x" + std::to_string(cols);
}

int Graph::ensure(const Tensor& t) {
    if (t.node >= 0) {
        if (t.node >= static_cast<int>(nodes_.size()))
            throw std::invalid_argument("Graph: tensor belongs to a different graph");
        return t.node;
    }
    int id = push("const", t.rows, t.cols, t.v, {}, nullptr);
    nodes_[id].needs_grad = false;
    return id;
}

int Graph::push(const char* op, int r, int c, std::vector<double> val, std::vector<int> in,
                std::function<void(Graph&, const Node&)> back) {
    bool needs = false;
    for (int id : in) needs = needs || nodes_[id].needs_grad;
    Node nd;
    nd.op = op;
    nd.rows = r;
    nd.cols = c;
    nd.val = std::move(val);
    nd.in = std::move(in);
    nd.back = std::move(back);
    nd.needs_grad = needs;
    nodes_.push_back(std::move(nd));
    return static_cast<int>(nodes_.size()) - 1;
}

Tensor Graph::wrap(int id) const {
    const Node& nd = nodes_[id];
    Tensor t(nd.rows, nd.cols, nd.val);
    t.node = id;
    return t;
}

std::vector<double>& Graph::grad_buf(int id) {
    Node& nd = nodes_[id];
    if (nd.grad.empty()) nd.grad.assign(nd.val.size(), 0.0);
    return nd.grad;
}

Tensor Graph::leaf(const Tensor& t) {
    int id = push("leaf", t.rows, t.cols, t.v, {}, nullptr);
    return wrap(id);
}

Tensor Graph::constant(const Tensor& t) {
    int id = push("const", t.rows, t.cols, t.v, {}, nullptr);
    nodes_[id].needs_grad = false;
    return wrap(id);
}

Tensor Graph::matmul(const Tensor& a, const Tensor& b) {
    if (a.cols != b.rows) shape_error("matmul", a, b);
    std::vector<double> out(static_cast<std::size_t>(a.rows) * b.cols);
    MapM(out.data(), a.rows, b.cols) =
        MapC(a.v.data(), a.rows, a.cols) * MapC(b.v.data(), b.rows, b.cols);
    const int ar = a.rows, ac = a.cols, bc = b.cols;
    int id = push("matmul", a.rows, b.cols, std::move(out), {ensure(a), ensure(b)},
                  [ar, ac, bc](Graph& g, const Node& nd) {
                      MapC gc(nd.grad.data(), ar, bc);
                      const Node& na = g.nodes_[nd.in[0]];
                      const Node& nb = g.nodes_[nd.in[1]];
                      if (na.needs_grad)
                          MapM(g.grad_buf(nd.in[0]).data(), ar, ac) +=
                              gc * MapC(nb.val.data(), ac, bc).transpose();
                      if (nb.needs_grad)
                          MapM(g.grad_buf(nd.in[1]).data(), ac, bc) +=
                              MapC(na.val.data(), ar, ac).transpose() * gc;
                  });
    return wrap(id);
}

Tensor Graph::add(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) shape_error("add", a, b);
    std::vector<double> out(a.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.v[i] + b.v[i];
    int id = push("add", a.rows, a.cols, std::move(out), {ensure(a), ensure(b)},
                  [](Graph& g, const Node& nd) {
                      for (int k = 0; k < 2; ++k) {
                          if (!g.nodes_[nd.in[k]].needs_grad) continue;
                          auto& gb = g.grad_buf(nd.in[k]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i) gb[i] += nd.grad[i];
                      }
                  });
    return wrap(id);
}

Tensor Graph::sub(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) shape_error("sub", a, b);
    std::vector<double> out(a.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.v[i] - b.v[i];
    int id = push("sub", a.rows, a.cols, std::move(out), {ensure(a), ensure(b)},
                  [](Graph& g, const Node& nd) {
                      if (g.nodes_[nd.in[0]].needs_grad) {
                          auto& ga = g.grad_buf(nd.in[0]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i) ga[i] += nd.grad[i];
                      }
                      if (g.nodes_[nd.in[1]].needs_grad) {
                          auto& gb = g.grad_buf(nd.in[1]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i) gb[i] -= nd.grad[i];
                      }
                  });
    return wrap(id);
}

Tensor Graph::mul(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) shape_error("mul", a, b);
    std::vector<double> out(a.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.v[i] * b.v[i];
    int id = push("mul", a.rows, a.cols, std::move(out), {ensure(a), ensure(b)},
                  [](Graph& g, const Node& nd) {
                      const Node& na = g.nodes_[nd.in[0]];
                      const Node& nb = g.nodes_[nd.in[1]];
                      if (na.needs_grad) {
                          auto& ga = g.grad_buf(nd.in[0]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i)
                              ga[i] += nd.grad[i] * nb.val[i];
                      }
                      if (nb.needs_grad) {
                          auto& gb = g.grad_buf(nd.in[1]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i)
                              gb[i] += nd.grad[i] * na.val[i];
                      }
                  });
    return wrap(id);
}

Tensor Graph::div(const Tensor& a, const Tensor& b) {
    if (a.rows != b.rows || a.cols != b.cols) shape_error("div", a, b);
    std::vector<double> out(a.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.v[i] / b.v[i];
    int id = push("div", a.rows, a.cols, std::move(out), {ensure(a), ensure(b)},
                  [](Graph& g, const Node& nd) {
                      const Node& na = g.nodes_[nd.in[0]];
                      const Node& nb = g.nodes_[nd.in[1]];
                      if (na.needs_grad) {
                          auto& ga = g.grad_buf(nd.in[0]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i)
                              ga[i] += nd.grad[i] / nb.val[i];
                      }
                      if (nb.needs_grad) {
                          auto& gb = g.grad_buf(nd.in[1]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i)
                              gb[i] -= nd.grad[i] * na.val[i] / (nb.val[i] * nb.val[i]);
                      }
                  });
    return wrap(id);
}

Tensor Graph::add_cols(const Tensor& m, const Tensor& colvec) {
    if (colvec.cols != 1 || colvec.rows != m.rows) shape_error("add_cols", m, colvec);
    std::vector<double> out(m.v.size());
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            out[static_cast<std::size_t>(r) * m.cols + c] = m.at(r, c) + colvec.v[r];
    const int rows = m.rows, cols = m.cols;
    int id = push("add_cols", rows, cols, std::move(out), {ensure(m), ensure(colvec)},
                  [rows, cols](Graph& g, const Node& nd) {
                      if (g.nodes_[nd.in[0]].needs_grad) {
                          auto& gm = g.grad_buf(nd.in[0]);
                          for (std::size_t i = 0; i < nd.grad.size(); ++i) gm[i] += nd.grad[i];
                      }
                      if (g.nodes_[nd.in[1]].needs_grad) {
                          auto& gv = g.grad_buf(nd.in[1]);
                          for (int r = 0; r < rows; ++r)
                              for (int c = 0; c < cols; ++c)
                                  gv[r] += nd.grad[static_cast<std::size_t>(r) * cols + c];
                      }
                  });
    return wrap(id);
}

Tensor Graph::mul_rowvec(const Tensor& m, const Tensor& rowvec) {
    if (rowvec.rows != 1 || rowvec.cols != m.cols) shape_error("mul_rowvec", m, rowvec);
    std::vector<double> out(m.v.size());
    for (int r = 0; r < m.rows; ++r)
        for (int c = 0; c < m.cols; ++c)
            out[static_cast<std::size_t>(r) * m.cols + c] = m.at(r, c) * rowvec.v[c];
    const int rows = m.rows, cols = m.cols;
    int id = push("mul_rowvec", rows, cols, std::move(out), {ensure(m), ensure(rowvec)},
                  [rows, cols](Graph& g, const Node& nd) {
                      const Node& nm = g.nodes_[nd.in[0]];
                      const Node& nr = g.nodes_[nd.in[1]];
                      if (nm.needs_grad) {
                          auto& gm = g.grad_buf(nd.in[0]);
                          for (int r = 0; r < rows; ++r)
                              for (int c = 0; c < cols; ++c)
                                  gm[static_cast<std::size_t>(r) * cols + c] +=
                                      nd.grad[static_cast<std::size_t>(r) * cols + c] * nr.val[c];
                      }
                      if (nr.needs_grad) {
                          auto& gr = g.grad_buf(nd.in[1]);
                          for (int r = 0; r < rows; ++r)
                              for (int c = 0; c < cols; ++c)
                                  gr[c] += nd.grad[static_cast<std::size_t>(r) * cols + c] *
                                           nm.val[static_cast<std::size_t>(r) * cols + c];
                      }
                  });
    return wrap(id);
}

Tensor Graph::vstack(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("vstack: no inputs");
    const int cols = parts[0].cols;
    int rows = 0;
    std::vector<int> in;
    std::vector<int> offsets;
    for (const auto& p : parts) {
        if (p.cols != cols) shape_error("vstack", parts[0], p);
        offsets.push_back(rows);
        rows += p.rows;
        in.push_back(ensure(p));
    }
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(rows) * cols);
    for (const auto& p : parts) out.insert(out.end(), p.v.begin(), p.v.end());
    std::vector<int> part_rows;
    for (const auto& p : parts) part_rows.push_back(p.rows);
    int id = push("vstack", rows, cols, std::move(out), std::move(in),
                  [offsets, part_rows, cols](Graph& g, const Node& nd) {
                      for (std::size_t k = 0; k < nd.in.size(); ++k) {
                          if (!g.nodes_[nd.in[k]].needs_grad) continue;
                          auto& gp = g.grad_buf(nd.in[k]);
                          const std::size_t base = static_cast<std::size_t>(offsets[k]) * cols;
                          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += nd.grad[base + i];
                      }
                  });
    return wrap(id);
}

Tensor Graph::hstack(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw std::invalid_argument("hstack: no inputs");
    const int rows = parts[0].rows;
    int cols = 0;
    std::vector<int> in, offsets, part_cols;
    for (const auto& p : parts) {
        if (p.rows != rows) shape_error("hstack", parts[0], p);
        offsets.push_back(cols);
        part_cols.push_back(p.cols);
        cols += p.cols;
        in.push_back(ensure(p));
    }
    std::vector<double> out(static_cast<std::size_t>(rows) * cols);
    for (std::size_t k = 0; k < parts.size(); ++k)
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < parts[k].cols; ++c)
                out[static_cast<std::size_t>(r) * cols + offsets[k] + c] = parts[k].at(r, c);
    int id = push("hstack", rows, cols, std::move(out), std::move(in),
                  [offsets, part_cols, rows, cols](Graph& g, const Node& nd) {
                      for (std::size_t k = 0; k < nd.in.size(); ++k) {
                          if (!g.nodes_[nd.in[k]].needs_grad) continue;
                          auto& gp = g.grad_buf(nd.in[k]);
                          for (int r = 0; r < rows; ++r)
                              for (int c = 0; c < part_cols[k]; ++c)
                                  gp[static_cast<std::size_t>(r) * part_cols[k] + c] +=
                                      nd.grad[static_cast<std::size_t>(r) * cols + offsets[k] + c];
                      }
                  });
    return wrap(id);
}

Tensor Graph::tile_cols(const Tensor& colvec, int count) {
    if (colvec.cols != 1) shape_error("tile_cols", colvec, "expected a column vector");
    if (count < 1) throw std::invalid_argument("tile_cols: count must be positive");
    std::vector<double> out(static_cast<std::size_t>(colvec.rows) * count);
    for (int r = 0; r < colvec.rows; ++r)
        for (int c = 0; c < count; ++c) out[static_cast<std::size_t>(r) * count + c] = colvec.v[r];
    const int rows = colvec.rows;
    int id = push("tile_cols", rows, count, std::move(out), {ensure(colvec)},
                  [rows, count](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gv = g.grad_buf(nd.in[0]);
                      for (int r = 0; r < rows; ++r)
                          for (int c = 0; c < count; ++c)
                              gv[r] += nd.grad[static_cast<std::size_t>(r) * count + c];
                  });
    return wrap(id);
}

Tensor Graph::fill_row(const Tensor& scalar, int count) {
    if (!scalar.is_scalar()) shape_error("fill_row", scalar, "expected a scalar");
    if (count < 1) throw std::invalid_argument("fill_row: count must be positive");
    std::vector<double> out(count, scalar.v[0]);
    int id = push("fill_row", 1, count, std::move(out), {ensure(scalar)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      double s = 0.0;
                      for (double x : nd.grad) s += x;
                      g.grad_buf(nd.in[0])[0] += s;
                  });
    return wrap(id);
}

Tensor Graph::sigmoid(const Tensor& x) {
    std::vector<double> out(x.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-x.v[i]));
    int id = push("sigmoid", x.rows, x.cols, std::move(out), {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i) {
                          const double s = nd.val[i];
                          gx[i] += nd.grad[i] * s * (1.0 - s);
                      }
                  });
    return wrap(id);
}

Tensor Graph::tanh(const Tensor& x) {
    std::vector<double> out(x.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.v[i]);
    int id = push("tanh", x.rows, x.cols, std::move(out), {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i)
                          gx[i] += nd.grad[i] * (1.0 - nd.val[i] * nd.val[i]);
                  });
    return wrap(id);
}

Tensor Graph::exp(const Tensor& x) {
    std::vector<double> out(x.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x.v[i]);
    int id = push("exp", x.rows, x.cols, std::move(out), {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i)
                          gx[i] += nd.grad[i] * nd.val[i];
                  });
    return wrap(id);
}

Tensor Graph::scalar_affine(const Tensor& x, double a, double b) {
    std::vector<double> out(x.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x.v[i] + b;
    int id = push("scalar_affine", x.rows, x.cols, std::move(out), {ensure(x)},
                  [a](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i) gx[i] += nd.grad[i] * a;
                  });
    return wrap(id);
}

Tensor Graph::clamp(const Tensor& x, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("clamp: lo > hi");
    std::vector<double> out(x.v.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(hi, std::max(lo, x.v[i]));
    int id = push("clamp", x.rows, x.cols, std::move(out), {ensure(x)},
                  [lo, hi](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      const Node& nx = g.nodes_[nd.in[0]];
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i)
                          if (nx.val[i] > lo && nx.val[i] < hi) gx[i] += nd.grad[i];
                  });
    return wrap(id);
}

Tensor Graph::softmax(const Tensor& x) {
    if (!x.is_vector()) shape_error("softmax", x, "expected a vector");
    if (x.size() == 0) throw std::invalid_argument("softmax: empty axis");
    const double mx = *std::max_element(x.v.begin(), x.v.end());
    std::vector<double> out(x.v.size());
    double denom = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = std::exp(x.v[i] - mx);
        denom += out[i];
    }
    for (auto& o : out) o /= denom;
    int id = push("softmax", x.rows, x.cols, std::move(out), {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      double dot = 0.0;
                      for (std::size_t i = 0; i < nd.grad.size(); ++i)
                          dot += nd.grad[i] * nd.val[i];
                      for (std::size_t i = 0; i < nd.grad.size(); ++i)
                          gx[i] += nd.val[i] * (nd.grad[i] - dot);
                  });
    return wrap(id);
}

Tensor Graph::logsumexp(const Tensor& x) {
    if (!x.is_vector()) shape_error("logsumexp", x, "expected a vector");
    if (x.size() == 0) throw std::invalid_argument("logsumexp: empty axis");
    const double mx = *std::max_element(x.v.begin(), x.v.end());
    double s = 0.0;
    for (double xi : x.v) s += std::exp(xi - mx);
    const double lse = mx + std::log(s);
    int id = push("logsumexp", 1, 1, {lse}, {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      const Node& nx = g.nodes_[nd.in[0]];
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < gx.size(); ++i)
                          gx[i] += nd.grad[0] * std::exp(nx.val[i] - nd.val[0]);
                  });
    return wrap(id);
}

Tensor Graph::sum_all(const Tensor& x) {
    double s = std::accumulate(x.v.begin(), x.v.end(), 0.0);
    int id = push("sum_all", 1, 1, {s}, {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (auto& gi : gx) gi += nd.grad[0];
                  });
    return wrap(id);
}

Tensor Graph::mean_all(const Tensor& x) {
    if (x.size() == 0) throw std::invalid_argument("mean_all: empty tensor");
    const double inv = 1.0 / x.size();
    double s = std::accumulate(x.v.begin(), x.v.end(), 0.0) * inv;
    int id = push("mean_all", 1, 1, {s}, {ensure(x)},
                  [inv](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (auto& gi : gx) gi += nd.grad[0] * inv;
                  });
    return wrap(id);
}

Tensor Graph::mean_cols(const Tensor& m) {
    if (m.cols == 0) throw std::invalid_argument("mean_cols: empty axis");
    std::vector<double> out(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        for (int c = 0; c < m.cols; ++c) out[r] += m.at(r, c);
        out[r] /= m.cols;
    }
    const int rows = m.rows, cols = m.cols;
    int id = push("mean_cols", rows, 1, std::move(out), {ensure(m)},
                  [rows, cols](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gm = g.grad_buf(nd.in[0]);
                      const double inv = 1.0 / cols;
                      for (int r = 0; r < rows; ++r)
                          for (int c = 0; c < cols; ++c)
                              gm[static_cast<std::size_t>(r) * cols + c] += nd.grad[r] * inv;
                  });
    return wrap(id);
}

Tensor Graph::cumsum(const Tensor& x) {
    if (!x.is_vector()) shape_error("cumsum", x, "expected a vector");
    std::vector<double> out(x.v.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) {
        acc += x.v[i];
        out[i] = acc;
    }
    int id = push("cumsum", x.rows, x.cols, std::move(out), {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      double acc = 0.0;
                      for (std::size_t i = nd.grad.size(); i-- > 0;) {
                          acc += nd.grad[i];
                          gx[i] += acc;
                      }
                  });
    return wrap(id);
}

Tensor Graph::reshape(const Tensor& x, int r, int c) {
    if (r * c != x.size())
        throw std::invalid_argument("reshape: cannot view " + x.shape_str() + " as " +
                                    std::to_string(r) + "x" + std::to_string(c));
    int id = push("reshape", r, c, x.v, {ensure(x)},
                  [](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < nd.grad.size(); ++i) gx[i] += nd.grad[i];
                  });
    return wrap(id);
}

Tensor Graph::gather(const Tensor& x, const std::vector<int>& idx) {
    if (!x.is_vector()) shape_error("gather", x, "expected a vector");
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= x.size())
            throw std::invalid_argument("gather: index " + std::to_string(idx[i]) +
                                        " out of range for " + x.shape_str());
        out[i] = x.v[idx[i]];
    }
    const int n = static_cast<int>(idx.size());
    const int r = x.rows == 1 ? 1 : n;
    const int c = x.rows == 1 ? n : 1;
    int id = push("gather", r, c, std::move(out), {ensure(x)},
                  [idx](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gx = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < idx.size(); ++i) gx[idx[i]] += nd.grad[i];
                  });
    return wrap(id);
}

Tensor Graph::gather_cols(const Tensor& m, const std::vector<int>& idx) {
    std::vector<double> out(static_cast<std::size_t>(m.rows) * idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= m.cols)
            throw std::invalid_argument("gather_cols: index " + std::to_string(idx[i]) +
                                        " out of range for " + m.shape_str());
        for (int r = 0; r < m.rows; ++r) out[r * idx.size() + i] = m.at(r, idx[i]);
    }
    const int rows = m.rows, cols = m.cols;
    int id = push("gather_cols", rows, static_cast<int>(idx.size()), std::move(out), {ensure(m)},
                  [idx, rows, cols](Graph& g, const Node& nd) {
                      if (!g.nodes_[nd.in[0]].needs_grad) return;
                      auto& gm = g.grad_buf(nd.in[0]);
                      for (std::size_t i = 0; i < idx.size(); ++i)
                          for (int r = 0; r < rows; ++r)
                              gm[static_cast<std::size_t>(r) * cols + idx[i]] +=
                                  nd.grad[r * idx.size() + i];
                  });
    return wrap(id);
}

void Graph::backward(const Tensor& seed) {
    if (seed.node < 0 || seed.node >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("backward: seed is not on this graph");
    if (!seed.is_scalar())
        throw std::invalid_argument("backward: seed must be a scalar, got " + seed.shape_str());
    grad_buf(seed.node)[0] = 1.0;
    for (int i = seed.node; i >= 0; --i) {
        Node& nd = nodes_[i];
        if (nd.grad.empty() || !nd.back || !nd.needs_grad) continue;
        nd.back(*this, nd);
    }
}

Tensor Graph::grad(const Tensor& of) const {
    if (of.node < 0 || of.node >= static_cast<int>(nodes_.size()))
        throw std::invalid_argument("grad: tensor is not on this graph");
    const Node& nd = nodes_[of.node];
    Tensor g(nd.rows, nd.cols);
    if (!nd.grad.empty()) g.v = nd.grad;
    return g;
}

GradCheckResult gradcheck(
    const std::function<Tensor(Graph&, const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& point, double step) {
    if (step <= 0.0) throw std::invalid_argument("gradcheck: step must be positive");

    Graph g;
    std::vector<Tensor> leaves;
    leaves.reserve(point.size());
    for (const auto& p : point) leaves.push_back(g.leaf(p));
    Tensor out = fn(g, leaves);
    if (!out.is_scalar())
        throw std::invalid_argument("gradcheck: function output must be a scalar, got " +
                                    out.shape_str());
    g.backward(out);
    std::vector<Tensor> analytic;
    for (const auto& l : leaves) analytic.push_back(g.grad(l));

    auto eval_at = [&](const std::vector<Tensor>& pt) {
        Graph gg;
        std::vector<Tensor> ll;
        for (const auto& p : pt) ll.push_back(gg.leaf(p));
        return fn(gg, ll).item();
    };

    GradCheckResult res;
    std::vector<Tensor> pt = point;
    for (std::size_t li = 0; li < point.size(); ++li) {
        for (int i = 0; i < point[li].size(); ++i) {
            const double orig = pt[li].v[i];
            pt[li].v[i] = orig + step;
            const double fp = eval_at(pt);
            pt[li].v[i] = orig - step;
            const double fm = eval_at(pt);
            pt[li].v[i] = orig;
            if (!std::isfinite(fp) || !std::isfinite(fm))
                throw std::runtime_error("gradcheck: non-finite value at leaf " +
                                         std::to_string(li) + " component " + std::to_string(i));
            const double num = (fp - fm) / (2.0 * step);
            const double ana = analytic[li].v[i];
            const double denom = std::max({std::abs(ana), std::abs(num), 1e-8});
            const double rel = std::abs(ana - num) / denom;
            if (rel > res.max_rel_err) {
                res.max_rel_err = rel;
                res.worst_leaf = static_cast<int>(li);
                res.worst_component = i;
                res.analytic = ana;
                res.numeric = num;
            }
        }
    }
    return res;
}

}  // namespace cpf
