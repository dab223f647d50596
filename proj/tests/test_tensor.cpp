#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "ssp/error.hpp"
#include "ssp/random.hpp"
#include "ssp/tensor.hpp"

using namespace ssp;
using namespace ssp::ad;

namespace {

Tensor rand_param(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
    const auto n = ad::numel(s);
    return Tensor::parameter(std::move(s), rng.uniform_vector(n, lo, hi));
}

Tensor rand_const(Rng& rng, Shape s, double lo = -1.0, double hi = 1.0) {
    const auto n = ad::numel(s);
    return Tensor::constant(std::move(s), rng.uniform_vector(n, lo, hi));
}

// Weighted sum with fixed random weights so every output coordinate matters.
Tensor probe(const Tensor& y, std::uint64_t seed = 99) {
    Rng rng(seed);
    return sum(mul(y, rand_const(rng, y.shape())));
}

struct OpCase {
    const char* name;
    Shape shape;
    std::function<Tensor(const Tensor&)> f;
    double lo = -1.0, hi = 1.0;
};

}  // namespace

TEST(Tensor, ElementwiseValues) {
    const auto a = Tensor::constant({3}, {1.0, -2.0, 0.5});
    const auto b = Tensor::constant({3}, {4.0, 0.25, -1.0});
    const auto s = add(a, b), d = sub(a, b), m = mul(a, b), q = div(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        EXPECT_EQ(s[i], a[i] + b[i]);
        EXPECT_EQ(d[i], a[i] - b[i]);
        EXPECT_EQ(m[i], a[i] * b[i]);
        EXPECT_EQ(q[i], a[i] / b[i]);
        EXPECT_DOUBLE_EQ(sigmoid(a)[i], 1.0 / (1.0 + std::exp(-a[i])));
        EXPECT_DOUBLE_EQ(softplus(a)[i], std::log1p(std::exp(a[i])));
    }
    EXPECT_EQ(clamp(a, -1.0, 0.75)[1], -1.0);
    EXPECT_EQ(softplus(Tensor::scalar(800.0)).item(), 800.0);
    EXPECT_EQ(softplus(Tensor::scalar(-800.0)).item(), 0.0);
}

TEST(Tensor, SuffixBroadcasting) {
    const auto a = Tensor::constant({2, 3}, {1, 2, 3, 4, 5, 6});
    const auto row = Tensor::constant({3}, {10, 20, 30});
    const auto out = add(a, row);
    EXPECT_EQ(out.shape(), (Shape{2, 3}));
    EXPECT_EQ(out[4], 25.0);
    EXPECT_EQ(add(Tensor::scalar(1.0), a)[5], 7.0);
    EXPECT_THROW(add(a, Tensor::constant({2}, {1, 2})), ShapeError);
}

TEST(Tensor, MatmulMatchesLoops) {
    Rng rng(3);
    const auto a = rand_const(rng, {3, 4}), b = rand_const(rng, {4, 2});
    const auto c = matmul(a, b);
    for (std::size_t i = 0; i < 3; ++i) {
        for (std::size_t j = 0; j < 2; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < 4; ++k) acc += a[i * 4 + k] * b[k * 2 + j];
            EXPECT_NEAR(c[i * 2 + j], acc, 1e-15);
        }
    }
    const auto bt = transpose(b);
    EXPECT_EQ(bt[1 * 4 + 3], b[3 * 2 + 1]);
    EXPECT_THROW(matmul(a, a), ShapeError);
}

TEST(Tensor, SoftmaxAndLayerNorm) {
    Rng rng(4);
    const auto x = rand_const(rng, {2, 5}, -3, 3);
    const auto sm = softmax(x, 1);
    const auto ln = layer_norm(x, 1);
    for (std::size_t r = 0; r < 2; ++r) {
        double z = 0, mu = 0, var = 0;
        for (std::size_t c = 0; c < 5; ++c) {
            z += std::exp(x[r * 5 + c]);
            mu += x[r * 5 + c] / 5;
        }
        for (std::size_t c = 0; c < 5; ++c) var += (x[r * 5 + c] - mu) * (x[r * 5 + c] - mu) / 5;
        for (std::size_t c = 0; c < 5; ++c) {
            EXPECT_NEAR(sm[r * 5 + c], std::exp(x[r * 5 + c]) / z, 1e-15);
            EXPECT_NEAR(ln[r * 5 + c], (x[r * 5 + c] - mu) / std::sqrt(var + 1e-5), 1e-12);
        }
    }
}

TEST(Tensor, ShapeOps) {
    const auto a = Tensor::constant({2, 3, 4}, [] {
        std::vector<double> v(24);
        for (std::size_t i = 0; i < 24; ++i) v[i] = static_cast<double>(i);
        return v;
    }());
    const auto p = permute(a, {2, 0, 1});
    EXPECT_EQ(p.shape(), (Shape{4, 2, 3}));
    // p[k,i,j] = a[i,j,k]
    EXPECT_EQ(p[(3 * 2 + 1) * 3 + 2], a[(1 * 3 + 2) * 4 + 3]);
    EXPECT_EQ(reshape(a, {6, 4}).shape(), (Shape{6, 4}));
    EXPECT_THROW(reshape(a, {5, 5}), ShapeError);
    const auto e = expand(Tensor::constant({2}, {1, 2}), {3});
    EXPECT_EQ(e.shape(), (Shape{3, 2}));
    EXPECT_EQ(e[5], 2.0);
    const auto s = slice(a, 1, 1, 2);
    EXPECT_EQ(s.shape(), (Shape{2, 2, 4}));
    EXPECT_EQ(s[0], a[4]);
    const auto c = concat(a, a, 2);
    EXPECT_EQ(c.shape(), (Shape{2, 3, 8}));
    EXPECT_EQ(c[7], a[3]);
    EXPECT_EQ(mean(a, 1)[0], (0.0 + 4 + 8) / 3);
}

TEST(Tensor, PoolAndUpsampleAreAdjointUpToScale) {
    Rng rng(5);
    const auto x = rand_const(rng, {2, 4, 4, 3});
    const auto y = rand_const(rng, {2, 2, 2, 3});
    // <pool(x), y> * factor^2 = <x, up(y)>
    double lhs = 0, rhs = 0;
    const auto px = patch_pool(x, 2), uy = upsample_nearest(y, 2);
    for (std::size_t i = 0; i < y.numel(); ++i) lhs += px[i] * y[i];
    for (std::size_t i = 0; i < x.numel(); ++i) rhs += x[i] * uy[i];
    EXPECT_NEAR(4 * lhs, rhs, 1e-12);
    EXPECT_THROW(patch_pool(x, 3), ShapeError);
}

TEST(Tensor, CosineSimilarity) {
    const auto a = Tensor::constant({2, 2}, {1, 0, 0, 0});
    const auto b = Tensor::constant({2, 2}, {3, 4, -1, 0});
    const auto c = cosine_similarity(a, b);
    EXPECT_NEAR(c[0], 0.6, 1e-15);
    EXPECT_NEAR(c[1], -1.0, 1e-15);
    EXPECT_EQ(c[2], 0.0);
    EXPECT_EQ(c[3], 0.0);
}

TEST(Tensor, GatherRows) {
    const auto table = Tensor::constant({3, 2}, {1, 2, 3, 4, 5, 6});
    const std::vector<std::size_t> ids{2, 0, 2};
    const auto g = gather_rows(table, ids);
    EXPECT_EQ(g.shape(), (Shape{3, 2}));
    EXPECT_EQ(g[0], 5.0);
    EXPECT_EQ(g[3], 2.0);
    const std::vector<std::size_t> bad{3};
    EXPECT_THROW(gather_rows(table, bad), ValueError);
}

TEST(Tensor, ReductionsAreCompensated) {
    // Plain left-to-right accumulation returns 0 here.
    const auto t = Tensor::constant({3}, {1e16, 1.0, -1e16});
    EXPECT_EQ(sum(t).item(), 1.0);
    EXPECT_EQ(mean(Tensor::constant({3, 1}, {1e16, 3.0, -1e16}), 0)[0], 1.0);
    std::vector<double> tenths(100000, 0.1);
    EXPECT_EQ(sum(Tensor::constant({100000}, tenths)).item(), 10000.0);
}

TEST(Autodiff, HandDerivedGradient) {
    // f = sum(x * x * w) -> df/dx = 2 x w
    const auto x = Tensor::parameter({3}, {1.0, -2.0, 0.5});
    const auto w = Tensor::constant({3}, {3.0, 1.0, -4.0});
    backward(sum(mul(mul(x, x), w)));
    const auto g = x.grad();
    EXPECT_EQ(g[0], 6.0);
    EXPECT_EQ(g[1], -4.0);
    EXPECT_EQ(g[2], -4.0);
}

TEST(Autodiff, SharedSubexpressionVisitedOnce) {
    const auto x = Tensor::parameter({}, {3.0});
    const auto y = mul(x, x);
    backward(add(y, y));  // 2 x^2 -> 4 x
    EXPECT_EQ(x.grad()[0], 12.0);
}

TEST(Autodiff, GradientsAccumulateUntilZeroed) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    backward(sum(x));
    backward(sum(x));
    EXPECT_EQ(x.grad()[0], 2.0);
    auto y = x;
    y.zero_grad();
    EXPECT_EQ(x.grad()[1], 0.0);
}

TEST(Autodiff, ConstantsAndDetachGetNoGradient) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    const auto c = Tensor::constant({2}, {1.0, 1.0});
    backward(sum(mul(x.detach(), c)));
    EXPECT_EQ(x.grad()[0], 0.0);
    EXPECT_FALSE(c.requires_grad());
}

TEST(Autodiff, NonScalarBackwardThrows) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    EXPECT_THROW(backward(x), ContractError);
}

TEST(Autodiff, GraphOrderIsTopological) {
    const auto x = Tensor::parameter({2}, {1.0, 2.0});
    const auto y = sum(sigmoid(mul(x, x)));
    const auto g = Graph::of(y);
    ASSERT_FALSE(g.nodes().empty());
    EXPECT_EQ(g.nodes().back(), y.node().get());
    for (std::size_t i = 0; i < g.nodes().size(); ++i) {
        for (const auto& in : g.nodes()[i]->inputs) {
            const auto it = std::find(g.nodes().begin(), g.nodes().end(), in.get());
            ASSERT_NE(it, g.nodes().end());
            EXPECT_LT(static_cast<std::size_t>(it - g.nodes().begin()), i);
        }
    }
}

TEST(Autodiff, EveryOpPassesGradCheck) {
    Rng rng(7);
    const auto other23 = rand_const(rng, {2, 3});
    const auto mat34 = rand_const(rng, {3, 4});
    const auto bmat = rand_const(rng, {2, 3, 2});
    const auto rows = rand_const(rng, {3, 3});
    const std::vector<std::size_t> ids{1, 0, 1, 2};
    const std::vector<OpCase> cases = {
        {"add", {2, 3}, [&](const Tensor& x) { return add(x, other23); }},
        {"add_bcast", {3}, [&](const Tensor& x) { return add(other23, x); }},
        {"sub", {2, 3}, [&](const Tensor& x) { return sub(other23, x); }},
        {"mul", {2, 3}, [&](const Tensor& x) { return mul(x, x); }},
        {"div", {2, 3}, [&](const Tensor& x) { return div(other23, x); }, 0.5, 2.0},
        {"scale", {4}, [](const Tensor& x) { return add_scalar(scale(x, -2.5), 1.0); }},
        {"sigmoid", {5}, [](const Tensor& x) { return sigmoid(x); }, -4, 4},
        {"tanh", {5}, [](const Tensor& x) { return ssp::ad::tanh(x); }},
        {"exp", {5}, [](const Tensor& x) { return ssp::ad::exp(x); }},
        {"log", {5}, [](const Tensor& x) { return ssp::ad::log(x); }, 0.2, 2.0},
        {"sqrt", {5}, [](const Tensor& x) { return ssp::ad::sqrt(x); }, 0.2, 2.0},
        {"softplus", {5}, [](const Tensor& x) { return softplus(x); }, -5, 5},
        {"clamp", {5}, [](const Tensor& x) { return clamp(x, -2.0, 2.0); }},
        {"mean_all", {2, 3}, [](const Tensor& x) { return mean_all(mul(x, x)); }},
        {"mean_axis", {2, 3, 2}, [](const Tensor& x) { return mean(x, 1); }},
        {"matmul", {2, 3}, [&](const Tensor& x) { return matmul(x, mat34); }},
        {"matmul_right", {3, 4}, [&](const Tensor& x) { return matmul(other23, x); }},
        {"bmm", {2, 2, 3}, [&](const Tensor& x) { return bmm(x, bmat); }},
        {"transpose", {2, 3}, [](const Tensor& x) { return transpose(x); }},
        {"permute", {2, 3, 2}, [](const Tensor& x) { return permute(x, {1, 2, 0}); }},
        {"expand", {3}, [](const Tensor& x) { return expand(x, {2, 2}); }},
        {"concat", {2, 3}, [&](const Tensor& x) { return concat(x, other23, 0); }},
        {"slice", {4, 3}, [](const Tensor& x) { return slice(x, 0, 1, 2); }},
        {"softmax", {2, 4}, [](const Tensor& x) { return softmax(x, 1); }, -2, 2},
        {"softmax0", {3, 2}, [](const Tensor& x) { return softmax(x, 0); }, -2, 2},
        {"layer_norm", {3, 4}, [](const Tensor& x) { return layer_norm(x, 1); }},
        {"layer_norm0", {4, 2}, [](const Tensor& x) { return layer_norm(x, 0); }},
        {"gather_rows", {3, 2}, [&](const Tensor& x) { return gather_rows(x, ids); }},
        {"cosine_left", {2, 3}, [&](const Tensor& x) { return cosine_similarity(x, rows); }},
        {"cosine_self", {3, 3}, [](const Tensor& x) { return cosine_similarity(x, x); }},
        {"patch_pool", {1, 4, 4, 2}, [](const Tensor& x) { return patch_pool(x, 2); }},
        {"upsample", {1, 2, 2, 2}, [](const Tensor& x) { return upsample_nearest(x, 3); }},
    };
    for (const auto& c : cases) {
        const auto x = rand_param(rng, c.shape, c.lo, c.hi);
        const auto r = grad_check_detailed([&](const Tensor& t) { return probe(c.f(t)); }, x);
        EXPECT_LT(r.max_relative_error, 1e-6) << c.name << " worst " << r.worst_index << " analytic " << r.analytic
                                              << " numeric " << r.numeric;
    }
}

TEST(GradCheck, DetectsWrongGradient) {
    // A node with a deliberately wrong backward rule must be flagged.
    const auto f = [](const Tensor& x) {
        auto node = std::make_shared<Node>();
        node->shape = {};
        node->value = {x[0] * x[0]};
        node->requires_grad = true;
        node->inputs = {x.node()};
        node->op = "bad_square";
        node->backward = [](Node& self) { self.inputs[0]->accumulate(0, self.grad[0] * 3.0); };
        return Tensor(node);
    };
    EXPECT_GT(grad_check(f, Tensor::parameter({1}, {0.7})), 0.1);
}
