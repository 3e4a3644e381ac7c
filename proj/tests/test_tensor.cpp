#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cpf/rng.hpp"
#include "cpf/tensor.hpp"

using namespace cpf;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double lo = -2.0, double hi = 2.0) {
    Tensor t(r, c);
    for (auto& x : t.v) x = rng.uniform(lo, hi);
    return t;
}

}  // namespace

TEST_CASE("sigmoid of zero vector is one half") {
    Graph g;
    Tensor out = g.sigmoid(g.constant(Tensor::zeros(4, 1)));
    for (double v : out.v) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("matmul against identity returns the operand") {
    Graph g;
    Rng rng(3);
    Tensor a = random_tensor(rng, 3, 5);
    Tensor out = g.matmul(g.constant(Tensor::identity(3)), g.constant(a));
    for (int i = 0; i < out.size(); ++i) CHECK(out.v[i] == a.v[i]);
}

TEST_CASE("log-sum-exp of (0, 0) is ln 2") {
    Graph g;
    Tensor out = g.logsumexp(g.constant(Tensor::rowvec({0.0, 0.0})));
    CHECK(out.item() == doctest::Approx(std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("matmul rejects mismatched inner dimensions naming the shapes") {
    Graph g;
    Tensor a = Tensor::zeros(3, 4);
    Tensor b = Tensor::zeros(5, 2);
    CHECK_THROWS_WITH_AS(g.matmul(g.constant(a), g.constant(b)),
                         doctest::Contains("3x4"), std::invalid_argument);
}

TEST_CASE("softmax and logsumexp reject empty input") {
    Graph g;
    Tensor empty;
    empty.rows = 1;
    empty.cols = 0;
    CHECK_THROWS_AS(g.softmax(g.constant(empty)), std::invalid_argument);
    CHECK_THROWS_AS(g.logsumexp(g.constant(empty)), std::invalid_argument);
}

TEST_CASE("backward of identity chain is one") {
    Graph g;
    Tensor x = g.leaf(Tensor::scalar(1.7));
    Tensor y = g.scalar_affine(x, 1.0, 0.0);
    g.backward(y);
    CHECK(g.grad(x).item() == doctest::Approx(1.0));
}

TEST_CASE("backward of mean over four elements is one quarter each") {
    Graph g;
    Tensor x = g.leaf(Tensor::colvec({1.0, 2.0, 3.0, 4.0}));
    Tensor y = g.mean_all(x);
    g.backward(y);
    Tensor gx = g.grad(x);
    for (double v : gx.v) CHECK(v == doctest::Approx(0.25));
}

TEST_CASE("derivative of sigmoid(w x) at w = 0, x = 1 is one quarter") {
    Graph g;
    Tensor w = g.leaf(Tensor::scalar(0.0));
    Tensor y = g.sigmoid(g.scalar_affine(w, 1.0, 0.0));
    g.backward(y);
    CHECK(g.grad(w).item() == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("backward rejects a non-scalar seed") {
    Graph g;
    Tensor x = g.leaf(Tensor::colvec({1.0, 2.0}));
    CHECK_THROWS_AS(g.backward(x), std::invalid_argument);
}

TEST_CASE("unreached nodes report zero gradient") {
    Graph g;
    Tensor x = g.leaf(Tensor::scalar(1.0));
    Tensor unused = g.leaf(Tensor::scalar(5.0));
    Tensor y = g.scalar_affine(x, 2.0, 0.0);
    g.backward(y);
    CHECK(g.grad(unused).item() == 0.0);
}

TEST_CASE("gradcheck is exact for a linear function") {
    auto fn = [](Graph& g, const std::vector<Tensor>& in) {
        return g.sum_all(g.scalar_affine(in[0], 3.0, 1.0));
    };
    Rng rng(11);
    auto res = gradcheck(fn, {random_tensor(rng, 4, 1)}, 1e-5);
    CHECK(res.max_rel_err < 1e-10);
}

TEST_CASE("gradcheck of a constant function sees zero on both sides") {
    auto fn = [](Graph& g, const std::vector<Tensor>& in) {
        return g.sum_all(g.scalar_affine(in[0], 0.0, 2.0));
    };
    Rng rng(12);
    auto res = gradcheck(fn, {random_tensor(rng, 3, 1)}, 1e-5);
    CHECK(res.max_rel_err == 0.0);
}

TEST_CASE("softmax outputs are nonnegative and sum to one") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        Graph g;
        const int n = 1 + static_cast<int>(rng.raw() % 12);
        Tensor out = g.softmax(g.constant(random_tensor(rng, 1, n, -20.0, 20.0)));
        double sum = 0.0;
        for (double v : out.v) {
            CHECK(v >= 0.0);
            sum += v;
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("logsumexp is shift invariant") {
    Rng rng(22);
    for (int rep = 0; rep < 50; ++rep) {
        const int n = 1 + static_cast<int>(rng.raw() % 10);
        Tensor x = random_tensor(rng, 1, n, -5.0, 5.0);
        const double c = rng.uniform(-40.0, 40.0);
        Tensor shifted = x;
        for (auto& v : shifted.v) v += c;
        Graph g;
        const double lhs = g.logsumexp(g.constant(shifted)).item();
        const double rhs = g.logsumexp(g.constant(x)).item() + c;
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
}

// Every primitive, checked at 10 random points against central differences.
TEST_CASE("gradcheck passes for all primitives") {
    Rng rng(31);
    auto weighted = [](Graph& g, const Tensor& t, const Tensor& w) {
        return g.sum_all(g.mul(t, g.constant(w)));
    };

    struct Case {
        const char* name;
        std::function<double()> run;  // returns max rel err at one random point
    };

    auto check_fn = [&](const std::function<Tensor(Graph&, const std::vector<Tensor>&)>& fn,
                        std::vector<Tensor> point) {
        return gradcheck(fn, point, 1e-5).max_rel_err;
    };

    std::vector<Case> cases;
    cases.push_back({"matmul", [&] {
        Tensor w = random_tensor(rng, 3, 4);
        auto fn = [w, &rng](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.matmul(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 2), random_tensor(rng, 2, 4)});
    }});
    cases.push_back({"add", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.add(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"sub", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.sub(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"mul", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.mul(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3), random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"div", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.div(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3), random_tensor(rng, 2, 3, 0.5, 2.0)});
    }});
    cases.push_back({"add_cols", [&] {
        Tensor w = random_tensor(rng, 3, 4);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.add_cols(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 4), random_tensor(rng, 3, 1)});
    }});
    cases.push_back({"mul_rowvec", [&] {
        Tensor w = random_tensor(rng, 3, 4);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.mul_rowvec(in[0], in[1]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 4), random_tensor(rng, 1, 4)});
    }});
    cases.push_back({"vstack", [&] {
        Tensor w = random_tensor(rng, 5, 2);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.vstack({in[0], in[1]}), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 2), random_tensor(rng, 2, 2)});
    }});
    cases.push_back({"hstack", [&] {
        Tensor w = random_tensor(rng, 2, 5);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.hstack({in[0], in[1]}), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3), random_tensor(rng, 2, 2)});
    }});
    cases.push_back({"tile_cols", [&] {
        Tensor w = random_tensor(rng, 3, 4);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.tile_cols(in[0], 4), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 1)});
    }});
    cases.push_back({"fill_row", [&] {
        Tensor w = random_tensor(rng, 1, 5);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.fill_row(in[0], 5), g.constant(w)));
        };
        return check_fn(fn, {Tensor::scalar(rng.uniform(-2.0, 2.0))});
    }});
    cases.push_back({"sigmoid", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.sigmoid(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"tanh", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.tanh(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"exp", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.exp(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3, -1.0, 1.0)});
    }});
    cases.push_back({"scalar_affine", [&] {
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.scalar_affine(in[0], -1.7, 0.3), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"clamp", [&] {
        // points kept away from the clamp boundaries
        Tensor w = random_tensor(rng, 2, 3);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.clamp(in[0], -1.0, 1.0), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3, -0.9, 0.9)});
    }});
    cases.push_back({"softmax", [&] {
        Tensor w = random_tensor(rng, 1, 5);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.softmax(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 1, 5)});
    }});
    cases.push_back({"logsumexp", [&] {
        auto fn = [](Graph& g, const std::vector<Tensor>& in) { return g.logsumexp(in[0]); };
        return check_fn(fn, {random_tensor(rng, 1, 6)});
    }});
    cases.push_back({"sum_all", [&] {
        auto fn = [](Graph& g, const std::vector<Tensor>& in) { return g.sum_all(in[0]); };
        return check_fn(fn, {random_tensor(rng, 3, 2)});
    }});
    cases.push_back({"mean_all", [&] {
        auto fn = [](Graph& g, const std::vector<Tensor>& in) { return g.mean_all(in[0]); };
        return check_fn(fn, {random_tensor(rng, 3, 2)});
    }});
    cases.push_back({"mean_cols", [&] {
        Tensor w = random_tensor(rng, 3, 1);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.mean_cols(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 5)});
    }});
    cases.push_back({"cumsum", [&] {
        Tensor w = random_tensor(rng, 1, 6);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.cumsum(in[0]), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 1, 6)});
    }});
    cases.push_back({"reshape", [&] {
        Tensor w = random_tensor(rng, 3, 2);
        auto fn = [w](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.reshape(in[0], 3, 2), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 2, 3)});
    }});
    cases.push_back({"gather", [&] {
        Tensor w = random_tensor(rng, 1, 4);
        std::vector<int> idx{3, 0, 0, 2};
        auto fn = [w, idx](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.gather(in[0], idx), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 1, 5)});
    }});
    cases.push_back({"gather_cols", [&] {
        Tensor w = random_tensor(rng, 3, 4);
        std::vector<int> idx{1, 1, 0, 2};
        auto fn = [w, idx](Graph& g, const std::vector<Tensor>& in) {
            return g.sum_all(g.mul(g.gather_cols(in[0], idx), g.constant(w)));
        };
        return check_fn(fn, {random_tensor(rng, 3, 3)});
    }});

    for (auto& c : cases) {
        double worst = 0.0;
        for (int rep = 0; rep < 10; ++rep) worst = std::max(worst, c.run());
        INFO(c.name);
        CHECK(worst < 1e-4);
    }
}

TEST_CASE("gradient flows through a gather into the gathered source") {
    Graph g;
    Tensor x = g.leaf(Tensor::rowvec({1.0, 2.0, 3.0}));
    Tensor picked = g.gather(x, {2, 2, 0});
    g.backward(g.sum_all(picked));
    Tensor gx = g.grad(x);
    CHECK(gx.v[0] == doctest::Approx(1.0));
    CHECK(gx.v[1] == doctest::Approx(0.0));
    CHECK(gx.v[2] == doctest::Approx(2.0));
}

TEST_CASE("tensor shape and value length must agree") {
    CHECK_THROWS_AS(Tensor(2, 3, {1.0, 2.0}), std::invalid_argument);
}
