#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace cpf {

// Dense row-major matrix of 64-bit floats. Rank is at most 2: column vectors
// are r x 1, row vectors 1 x c, scalars 1 x 1. `node` is a handle into the
// Graph that produced the tensor (-1 when the tensor lives off-graph).
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;
    int node = -1;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}
    Tensor(int r, int c, std::vector<double> data);

    static Tensor scalar(double x);
    static Tensor zeros(int r, int c) { return Tensor(r, c); }
    static Tensor full(int r, int c, double x);
    static Tensor colvec(std::vector<double> data);
    static Tensor rowvec(std::vector<double> data);
    static Tensor identity(int n);

    int size() const { return rows * cols; }
    bool is_scalar() const { return rows == 1 && cols == 1; }
    bool is_vector() const { return rows == 1 || cols == 1; }
    double item() const;
    double& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<std::size_t>(r) * cols + c]; }
    bool all_finite() const;
    std::string shape_str() const;
};

// Reverse-mode tape. Nodes are appended in execution order, so insertion
// order is a valid topological order and the backward pass is a single
// reverse sweep. A graph is built for one forward/backward evaluation and
// then discarded; tensors returned by ops carry their node id.
class Graph {
  public:
    struct Node {
        const char* op;
        int rows, cols;
        std::vector<double> val;
        std::vector<double> grad;  // sized lazily during backward
        std::vector<int> in;
        std::function<void(Graph&, const Node&)> back;  // empty for leaves
        bool needs_grad = true;
    };

    // Leaf registration. `leaf` participates in differentiation; `constant`
    // is recorded but never accumulates a gradient.
    Tensor leaf(const Tensor& t);
    Tensor constant(const Tensor& t);
    Tensor constant_scalar(double x) { return constant(Tensor::scalar(x)); }

    // Primitives. Shape violations throw std::invalid_argument naming the
    // offending shapes.
    Tensor matmul(const Tensor& a, const Tensor& b);
    Tensor add(const Tensor& a, const Tensor& b);
    Tensor sub(const Tensor& a, const Tensor& b);
    Tensor mul(const Tensor& a, const Tensor& b);
    Tensor div(const Tensor& a, const Tensor& b);
    Tensor add_cols(const Tensor& m, const Tensor& colvec);   // m + colvec per column
    Tensor mul_rowvec(const Tensor& m, const Tensor& rowvec); // column j scaled by rowvec[j]
    Tensor vstack(const std::vector<Tensor>& parts);
    Tensor hstack(const std::vector<Tensor>& parts);
    Tensor tile_cols(const Tensor& colvec, int count);
    Tensor fill_row(const Tensor& scalar, int count);
    Tensor sigmoid(const Tensor& x);
    Tensor tanh(const Tensor& x);
    Tensor exp(const Tensor& x);
    Tensor scalar_affine(const Tensor& x, double a, double b);  // a*x + b
    Tensor clamp(const Tensor& x, double lo, double hi);
    Tensor softmax(const Tensor& x);     // vector only
    Tensor logsumexp(const Tensor& x);   // vector -> scalar, stable
    Tensor sum_all(const Tensor& x);
    Tensor mean_all(const Tensor& x);
    Tensor mean_cols(const Tensor& m);   // r x c -> r x 1, mean across columns
    Tensor cumsum(const Tensor& x);      // vector prefix sums
    Tensor reshape(const Tensor& x, int r, int c);

    // Index selection. Gradients flow into the gathered values (scatter-add);
    // the index sets themselves are constants of the forward pass.
    Tensor gather(const Tensor& x, const std::vector<int>& idx);       // vector
    Tensor gather_cols(const Tensor& m, const std::vector<int>& idx);  // columns

    // Reverse sweep from a scalar seed. After it returns, grad(t) yields
    // d(seed)/d(t) for every tensor recorded on this graph; tensors the seed
    // does not reach report zeros.
    void backward(const Tensor& seed);
    Tensor grad(const Tensor& of) const;

    std::size_t node_count() const { return nodes_.size(); }
    const Node& node(int id) const { return nodes_[id]; }

  private:
    friend struct GraphOps;
    std::vector<Node> nodes_;
    // Inputs that live off-graph (node == -1) are recorded as constants, so
    // ops accept plain tensors; anything that should receive a gradient must
    // be registered through leaf() first.
    int ensure(const Tensor& t);
    int push(const char* op, int r, int c, std::vector<double> val, std::vector<int> in,
             std::function<void(Graph&, const Node&)> back);
    std::vector<double>& grad_buf(int id);
    Tensor wrap(int id) const;
};

struct GradCheckResult {
    double max_rel_err = 0.0;
    int worst_leaf = -1;
    int worst_component = -1;
    double analytic = 0.0;
    double numeric = 0.0;
};

// Compares reverse-mode gradients of a scalar-valued function against central
// finite differences, component by component. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8). The function must be
// deterministic; it receives graph-registered copies of `point` in order.
// A non-finite value at a perturbed point throws, naming the component.
GradCheckResult gradcheck(
    const std::function<Tensor(Graph&, const std::vector<Tensor>&)>& fn,
    const std::vector<Tensor>& point, double step);

}  // namespace cpf
