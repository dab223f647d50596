#include "ssp/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "ssp/error.hpp"

namespace ssp::ad {

std::size_t numel(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string s = "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(shape[i]);
    }
    return s + ")";
}

namespace {

using NodePtr = std::shared_ptr<Node>;

NodePtr make_leaf(Shape shape, std::vector<double> values, bool requires_grad) {
    if (numel(shape) != values.size()) {
        throw ShapeError("tensor: shape " + to_string(shape) + " holds " + std::to_string(numel(shape)) +
                         " values, got " + std::to_string(values.size()));
    }
    auto n = std::make_shared<Node>();
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = requires_grad;
    return n;
}

// Output node wired to `inputs`; requires_grad if any input does.
NodePtr make_op(const char* op, Shape shape, std::vector<double> values, std::vector<NodePtr> inputs) {
    auto n = std::make_shared<Node>();
    n->op = op;
    n->shape = std::move(shape);
    n->value = std::move(values);
    n->requires_grad = std::any_of(inputs.begin(), inputs.end(), [](const NodePtr& p) { return p->requires_grad; });
    n->inputs = std::move(inputs);
    return n;
}

void check_axis(const Tensor& a, std::size_t axis, const char* op) {
    if (axis >= a.rank()) {
        throw ShapeError(std::string(op) + ": axis " + std::to_string(axis) + " out of range for " +
                         to_string(a.shape()));
    }
}

// Splits a shape around `axis` into (outer, length, inner) extents.
struct AxisSplit {
    std::size_t outer = 1, length = 1, inner = 1;
    std::size_t index(std::size_t o, std::size_t k, std::size_t i) const { return (o * length + k) * inner + i; }
};

AxisSplit split_axis(const Shape& shape, std::size_t axis) {
    AxisSplit s;
    for (std::size_t d = 0; d < axis; ++d) s.outer *= shape[d];
    s.length = shape[axis];
    for (std::size_t d = axis + 1; d < shape.size(); ++d) s.inner *= shape[d];
    return s;
}

bool is_suffix(const Shape& small, const Shape& big) {
    if (small.size() > big.size()) return false;
    return std::equal(small.rbegin(), small.rend(), big.rbegin());
}

// Binary elementwise op with leading-dimension broadcasting of the lower-rank operand.
// `fwd(x, y)` gives the value; `dfdx`/`dfdy` give partials from (x, y, out).
template <typename Fwd, typename Dx, typename Dy>
Tensor binary(const char* op, const Tensor& a, const Tensor& b, Fwd fwd, Dx dfdx, Dy dfdy) {
    const bool a_big = a.rank() >= b.rank();
    const Shape& big = a_big ? a.shape() : b.shape();
    const Shape& small = a_big ? b.shape() : a.shape();
    if (!is_suffix(small, big)) {
        throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(a.shape()) + " with " +
                         to_string(b.shape()));
    }
    const std::size_t n = numel(big);
    const std::size_t na = a.numel();
    const std::size_t nb = b.numel();
    std::vector<double> out(n);
    const auto& av = a.node()->value;
    const auto& bv = b.node()->value;
    for (std::size_t i = 0; i < n; ++i) out[i] = fwd(av[i % na], bv[i % nb]);
    auto node = make_op(op, big, std::move(out), {a.node(), b.node()});
    node->backward = [dfdx, dfdy](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        const std::size_t nx = x.value.size();
        const std::size_t ny = y.value.size();
        if (x.requires_grad) {
            auto& gx = x.grad_buffer();
            for (std::size_t i = 0; i < self.value.size(); ++i) {
                gx[i % nx] += self.grad[i] * dfdx(x.value[i % nx], y.value[i % ny], self.value[i]);
            }
        }
        if (y.requires_grad) {
            auto& gy = y.grad_buffer();
            for (std::size_t i = 0; i < self.value.size(); ++i) {
                gy[i % ny] += self.grad[i] * dfdy(x.value[i % nx], y.value[i % ny], self.value[i]);
            }
        }
    };
    return Tensor(node);
}

// Unary elementwise op; `dfdx(x, out)` is the local derivative.
template <typename Fwd, typename Dx>
Tensor unary(const char* op, const Tensor& a, Fwd fwd, Dx dfdx) {
    std::vector<double> out(a.numel());
    const auto& av = a.node()->value;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
    auto node = make_op(op, a.shape(), std::move(out), {a.node()});
    node->backward = [dfdx](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t i = 0; i < self.value.size(); ++i) gx[i] += self.grad[i] * dfdx(x.value[i], self.value[i]);
    };
    return Tensor(node);
}

}  // namespace

// ---- Tensor ------------------------------------------------------------------------------------

Tensor Tensor::constant(Shape shape, std::vector<double> values) {
    return Tensor(make_leaf(std::move(shape), std::move(values), false));
}

Tensor Tensor::parameter(Shape shape, std::vector<double> values) {
    return Tensor(make_leaf(std::move(shape), std::move(values), true));
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
    const std::size_t n = ad::numel(shape);
    return Tensor(make_leaf(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::scalar(double value) { return constant({}, {value}); }

double Tensor::item() const {
    if (numel() != 1) throw ContractError("item: tensor of shape " + to_string(shape()) + " is not scalar");
    return node_->value[0];
}

std::vector<double> Tensor::grad() const {
    if (node_->grad.empty()) return std::vector<double>(node_->value.size(), 0.0);
    return node_->grad;
}

Tensor Tensor::detach() const { return constant(shape(), node_->value); }

// ---- Graph -------------------------------------------------------------------------------------

Graph Graph::of(const Tensor& root) {
    Graph g;
    g.root_ = root.node();
    std::unordered_set<const Node*> seen;
    // Iterative post-order DFS: (node, next input index).
    std::vector<std::pair<Node*, std::size_t>> stack;
    stack.emplace_back(g.root_.get(), 0);
    seen.insert(g.root_.get());
    while (!stack.empty()) {
        auto& [node, next] = stack.back();
        if (next < node->inputs.size()) {
            Node* child = node->inputs[next++].get();
            if (child->requires_grad && seen.insert(child).second) stack.emplace_back(child, 0);
        } else {
            g.order_.push_back(node);
            stack.pop_back();
        }
    }
    return g;
}

void Graph::backward() {
    if (root_->value.size() != 1) {
        throw ContractError("backward: loss must be scalar, got shape " + to_string(root_->shape));
    }
    if (!root_->requires_grad) return;
    root_->grad_buffer()[0] += 1.0;
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
        Node* n = *it;
        if (n->backward && !n->grad.empty()) n->backward(*n);
    }
}

void backward(const Tensor& loss) { Graph::of(loss).backward(); }

// ---- elementwise -------------------------------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b) {
    return binary(
        "add", a, b, [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return 1.0; });
}

Tensor sub(const Tensor& a, const Tensor& b) {
    return binary(
        "sub", a, b, [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
        [](double, double, double) { return -1.0; });
}

Tensor mul(const Tensor& a, const Tensor& b) {
    return binary(
        "mul", a, b, [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
        [](double x, double, double) { return x; });
}

Tensor div(const Tensor& a, const Tensor& b) {
    return binary(
        "div", a, b, [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
        [](double, double y, double out) { return -out / y; });
}

Tensor scale(const Tensor& a, double k) {
    return unary("scale", a, [k](double x) { return k * x; }, [k](double, double) { return k; });
}

Tensor add_scalar(const Tensor& a, double k) {
    return unary("add_scalar", a, [k](double x) { return x + k; }, [](double, double) { return 1.0; });
}

Tensor sigmoid(const Tensor& a) {
    return unary(
        "sigmoid", a,
        [](double x) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        },
        [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(const Tensor& a) {
    return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor exp(const Tensor& a) {
    return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(const Tensor& a) {
    return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
    return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor softplus(const Tensor& a) {
    return unary(
        "softplus", a, [](double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); },
        [](double x, double) {
            if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
            const double e = std::exp(x);
            return e / (1.0 + e);
        });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
    return unary(
        "clamp", a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
        [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

// ---- reductions --------------------------------------------------------------------------------

namespace {

// Neumaier summation. Losses reduce tens of thousands of terms, and plain accumulation leaves
// enough roundoff in the result to swamp central differences on small gradients.
struct CompensatedSum {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double t = sum + v;
        c += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
        sum = t;
    }
    double value() const { return sum + c; }
};

}  // namespace

Tensor sum(const Tensor& a) {
    CompensatedSum acc;
    for (double v : a.data()) acc.add(v);
    auto node = make_op("sum", {}, {acc.value()}, {a.node()});
    node->backward = [](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (double& g : gx) g += self.grad[0];
    };
    return Tensor(node);
}

Tensor mean_all(const Tensor& a) {
    if (a.numel() == 0) throw ShapeError("mean_all: empty tensor");
    return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mean(const Tensor& a, std::size_t axis) {
    check_axis(a, axis, "mean");
    const AxisSplit s = split_axis(a.shape(), axis);
    if (s.length == 0) throw ShapeError("mean: empty axis");
    Shape out_shape = a.shape();
    out_shape.erase(out_shape.begin() + static_cast<std::ptrdiff_t>(axis));
    std::vector<double> out(s.outer * s.inner, 0.0);
    const auto& av = a.node()->value;
    const double inv = 1.0 / static_cast<double>(s.length);
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            CompensatedSum acc;
            for (std::size_t k = 0; k < s.length; ++k) acc.add(av[s.index(o, k, i)]);
            out[o * s.inner + i] = acc.value() * inv;
        }
    }
    auto node = make_op("mean", std::move(out_shape), std::move(out), {a.node()});
    node->backward = [s, inv](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o)
            for (std::size_t k = 0; k < s.length; ++k)
                for (std::size_t i = 0; i < s.inner; ++i) gx[s.index(o, k, i)] += self.grad[o * s.inner + i] * inv;
    };
    return Tensor(node);
}

// ---- linear algebra ----------------------------------------------------------------------------

namespace {

// out(M,N) += a(M,K) * b(K,N), with optional transposes expressed through strides.
void gemm_acc(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n,
              bool trans_a, bool trans_b) {
    if (trans_b && !trans_a) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* arow = a + i * k;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = b + j * k;
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
                out[i * n + j] += acc;
            }
        }
        return;
    }
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = trans_a ? a[p * m + i] : a[i * k + p];
            if (av == 0.0) continue;
            double* row = out + i * n;
            if (trans_b) {
                for (std::size_t j = 0; j < n; ++j) row[j] += av * b[j * k + p];
            } else {
                const double* brow = b + p * n;
                for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
            }
        }
    }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: incompatible shapes " + to_string(a.shape()) + " x " + to_string(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    std::vector<double> out(m * n, 0.0);
    gemm_acc(a.data().data(), b.data().data(), out.data(), m, k, n, false, false);
    auto node = make_op("matmul", {m, n}, std::move(out), {a.node(), b.node()});
    node->backward = [m, k, n](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        if (x.requires_grad) gemm_acc(self.grad.data(), y.value.data(), x.grad_buffer().data(), m, n, k, false, true);
        if (y.requires_grad) gemm_acc(x.value.data(), self.grad.data(), y.grad_buffer().data(), k, m, n, true, false);
    };
    return Tensor(node);
}

Tensor bmm(const Tensor& a, const Tensor& b) {
    if (a.rank() != 3 || b.rank() != 3 || a.dim(0) != b.dim(0) || a.dim(2) != b.dim(1)) {
        throw ShapeError("bmm: incompatible shapes " + to_string(a.shape()) + " x " + to_string(b.shape()));
    }
    const std::size_t bs = a.dim(0), m = a.dim(1), k = a.dim(2), n = b.dim(2);
    std::vector<double> out(bs * m * n, 0.0);
    for (std::size_t i = 0; i < bs; ++i) {
        gemm_acc(a.data().data() + i * m * k, b.data().data() + i * k * n, out.data() + i * m * n, m, k, n, false,
                 false);
    }
    auto node = make_op("bmm", {bs, m, n}, std::move(out), {a.node(), b.node()});
    node->backward = [bs, m, k, n](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        for (std::size_t i = 0; i < bs; ++i) {
            const double* g = self.grad.data() + i * m * n;
            if (x.requires_grad)
                gemm_acc(g, y.value.data() + i * k * n, x.grad_buffer().data() + i * m * k, m, n, k, false, true);
            if (y.requires_grad)
                gemm_acc(x.value.data() + i * m * k, g, y.grad_buffer().data() + i * k * n, k, m, n, true, false);
        }
    };
    return Tensor(node);
}

Tensor transpose(const Tensor& a) {
    if (a.rank() != 2) throw ShapeError("transpose: expected a 2-d tensor, got " + to_string(a.shape()));
    return permute(a, {1, 0});
}

// ---- shape -------------------------------------------------------------------------------------

Tensor reshape(const Tensor& a, Shape shape) {
    if (numel(shape) != a.numel()) {
        throw ShapeError("reshape: " + to_string(a.shape()) + " -> " + to_string(shape) + " changes element count");
    }
    auto node = make_op("reshape", std::move(shape), a.node()->value, {a.node()});
    node->backward = [](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += self.grad[i];
    };
    return Tensor(node);
}

Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm) {
    const std::size_t r = a.rank();
    if (perm.size() != r) throw ShapeError("permute: permutation rank mismatch");
    std::vector<bool> used(r, false);
    for (auto p : perm) {
        if (p >= r || used[p]) throw ShapeError("permute: invalid permutation");
        used[p] = true;
    }
    Shape out_shape(r);
    for (std::size_t d = 0; d < r; ++d) out_shape[d] = a.dim(perm[d]);
    // Input strides, then for each output position the matching input offset.
    std::vector<std::size_t> in_stride(r, 1);
    for (std::size_t d = r; d-- > 1;) in_stride[d - 1] = in_stride[d] * a.dim(d);
    const std::size_t n = a.numel();
    std::vector<std::size_t> src(n);
    std::vector<std::size_t> idx(r, 0);
    for (std::size_t o = 0; o < n; ++o) {
        std::size_t off = 0;
        for (std::size_t d = 0; d < r; ++d) off += idx[d] * in_stride[perm[d]];
        src[o] = off;
        for (std::size_t d = r; d-- > 0;) {
            if (++idx[d] < out_shape[d]) break;
            idx[d] = 0;
        }
    }
    std::vector<double> out(n);
    const auto& av = a.node()->value;
    for (std::size_t o = 0; o < n; ++o) out[o] = av[src[o]];
    auto node = make_op("permute", std::move(out_shape), std::move(out), {a.node()});
    node->backward = [src = std::move(src)](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t o = 0; o < src.size(); ++o) gx[src[o]] += self.grad[o];
    };
    return Tensor(node);
}

Tensor expand(const Tensor& a, const Shape& leading) {
    Shape out_shape = leading;
    out_shape.insert(out_shape.end(), a.shape().begin(), a.shape().end());
    const std::size_t reps = numel(leading);
    const std::size_t n = a.numel();
    std::vector<double> out(reps * n);
    for (std::size_t r = 0; r < reps; ++r) std::copy(a.data().begin(), a.data().end(), out.begin() + r * n);
    auto node = make_op("expand", std::move(out_shape), std::move(out), {a.node()});
    node->backward = [n](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) gx[i % n] += self.grad[i];
    };
    return Tensor(node);
}

Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis) {
    check_axis(a, axis, "concat");
    if (a.rank() != b.rank()) throw ShapeError("concat: rank mismatch");
    for (std::size_t d = 0; d < a.rank(); ++d) {
        if (d != axis && a.dim(d) != b.dim(d)) {
            throw ShapeError("concat: " + to_string(a.shape()) + " and " + to_string(b.shape()) +
                             " differ off the concat axis");
        }
    }
    const AxisSplit sa = split_axis(a.shape(), axis);
    const AxisSplit sb = split_axis(b.shape(), axis);
    Shape out_shape = a.shape();
    out_shape[axis] += b.dim(axis);
    const AxisSplit so = split_axis(out_shape, axis);
    std::vector<double> out(numel(out_shape));
    for (std::size_t o = 0; o < so.outer; ++o) {
        for (std::size_t k = 0; k < sa.length; ++k)
            for (std::size_t i = 0; i < so.inner; ++i) out[so.index(o, k, i)] = a[sa.index(o, k, i)];
        for (std::size_t k = 0; k < sb.length; ++k)
            for (std::size_t i = 0; i < so.inner; ++i) out[so.index(o, sa.length + k, i)] = b[sb.index(o, k, i)];
    }
    auto node = make_op("concat", std::move(out_shape), std::move(out), {a.node(), b.node()});
    node->backward = [sa, sb, so](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        for (std::size_t o = 0; o < so.outer; ++o) {
            if (x.requires_grad) {
                auto& gx = x.grad_buffer();
                for (std::size_t k = 0; k < sa.length; ++k)
                    for (std::size_t i = 0; i < so.inner; ++i) gx[sa.index(o, k, i)] += self.grad[so.index(o, k, i)];
            }
            if (y.requires_grad) {
                auto& gy = y.grad_buffer();
                for (std::size_t k = 0; k < sb.length; ++k)
                    for (std::size_t i = 0; i < so.inner; ++i)
                        gy[sb.index(o, k, i)] += self.grad[so.index(o, sa.length + k, i)];
            }
        }
    };
    return Tensor(node);
}

Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length) {
    check_axis(a, axis, "slice");
    if (start + length > a.dim(axis)) throw ShapeError("slice: range exceeds axis extent");
    const AxisSplit sa = split_axis(a.shape(), axis);
    Shape out_shape = a.shape();
    out_shape[axis] = length;
    const AxisSplit so = split_axis(out_shape, axis);
    std::vector<double> out(numel(out_shape));
    for (std::size_t o = 0; o < so.outer; ++o)
        for (std::size_t k = 0; k < length; ++k)
            for (std::size_t i = 0; i < so.inner; ++i) out[so.index(o, k, i)] = a[sa.index(o, start + k, i)];
    auto node = make_op("slice", std::move(out_shape), std::move(out), {a.node()});
    node->backward = [sa, so, start, length](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t o = 0; o < so.outer; ++o)
            for (std::size_t k = 0; k < length; ++k)
                for (std::size_t i = 0; i < so.inner; ++i) gx[sa.index(o, start + k, i)] += self.grad[so.index(o, k, i)];
    };
    return Tensor(node);
}

// ---- normalization -----------------------------------------------------------------------------

Tensor softmax(const Tensor& a, std::size_t axis) {
    check_axis(a, axis, "softmax");
    const AxisSplit s = split_axis(a.shape(), axis);
    if (s.length == 0) throw ShapeError("softmax: empty axis");
    std::vector<double> out(a.numel());
    const auto& av = a.node()->value;
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            double mx = av[s.index(o, 0, i)];
            for (std::size_t k = 1; k < s.length; ++k) mx = std::max(mx, av[s.index(o, k, i)]);
            double z = 0.0;
            for (std::size_t k = 0; k < s.length; ++k) {
                const double e = std::exp(av[s.index(o, k, i)] - mx);
                out[s.index(o, k, i)] = e;
                z += e;
            }
            for (std::size_t k = 0; k < s.length; ++k) out[s.index(o, k, i)] /= z;
        }
    }
    auto node = make_op("softmax", a.shape(), std::move(out), {a.node()});
    node->backward = [s](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                double dot = 0.0;
                for (std::size_t k = 0; k < s.length; ++k) dot += self.grad[s.index(o, k, i)] * self.value[s.index(o, k, i)];
                for (std::size_t k = 0; k < s.length; ++k) {
                    const std::size_t j = s.index(o, k, i);
                    gx[j] += self.value[j] * (self.grad[j] - dot);
                }
            }
        }
    };
    return Tensor(node);
}

Tensor layer_norm(const Tensor& a, std::size_t axis, double eps) {
    check_axis(a, axis, "layer_norm");
    const AxisSplit s = split_axis(a.shape(), axis);
    if (s.length == 0) throw ShapeError("layer_norm: empty axis");
    const double inv_len = 1.0 / static_cast<double>(s.length);
    std::vector<double> out(a.numel());
    std::vector<double> inv_std(s.outer * s.inner);
    const auto& av = a.node()->value;
    for (std::size_t o = 0; o < s.outer; ++o) {
        for (std::size_t i = 0; i < s.inner; ++i) {
            double mu = 0.0;
            for (std::size_t k = 0; k < s.length; ++k) mu += av[s.index(o, k, i)];
            mu *= inv_len;
            double var = 0.0;
            for (std::size_t k = 0; k < s.length; ++k) {
                const double d = av[s.index(o, k, i)] - mu;
                var += d * d;
            }
            var *= inv_len;
            const double is = 1.0 / std::sqrt(var + eps);
            inv_std[o * s.inner + i] = is;
            for (std::size_t k = 0; k < s.length; ++k) out[s.index(o, k, i)] = (av[s.index(o, k, i)] - mu) * is;
        }
    }
    auto node = make_op("layer_norm", a.shape(), std::move(out), {a.node()});
    node->backward = [s, inv_len, inv_std = std::move(inv_std)](Node& self) {
        Node& x = *self.inputs[0];
        if (!x.requires_grad) return;
        auto& gx = x.grad_buffer();
        for (std::size_t o = 0; o < s.outer; ++o) {
            for (std::size_t i = 0; i < s.inner; ++i) {
                double mean_g = 0.0, mean_gy = 0.0;
                for (std::size_t k = 0; k < s.length; ++k) {
                    const std::size_t j = s.index(o, k, i);
                    mean_g += self.grad[j];
                    mean_gy += self.grad[j] * self.value[j];
                }
                mean_g *= inv_len;
                mean_gy *= inv_len;
                const double is = inv_std[o * s.inner + i];
                for (std::size_t k = 0; k < s.length; ++k) {
                    const std::size_t j = s.index(o, k, i);
                    gx[j] += is * (self.grad[j] - mean_g - self.value[j] * mean_gy);
                }
            }
        }
    };
    return Tensor(node);
}

// ---- model helpers -----------------------------------------------------------------------------

Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids) {
    if (table.rank() != 2) throw ShapeError("gather_rows: table must be 2-d");
    const std::size_t vocab = table.dim(0), d = table.dim(1);
    std::vector<std::size_t> rows(ids.begin(), ids.end());
    std::vector<double> out(rows.size() * d);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r] >= vocab) throw ValueError("gather_rows: id " + std::to_string(rows[r]) + " outside vocabulary");
        std::copy_n(table.data().begin() + static_cast<std::ptrdiff_t>(rows[r] * d), d, out.begin() + r * d);
    }
    auto node = make_op("gather_rows", {rows.size(), d}, std::move(out), {table.node()});
    node->backward = [rows = std::move(rows), d](Node& self) {
        Node& t = *self.inputs[0];
        if (!t.requires_grad) return;
        auto& gt = t.grad_buffer();
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::size_t j = 0; j < d; ++j) gt[rows[r] * d + j] += self.grad[r * d + j];
    };
    return Tensor(node);
}

Tensor cosine_similarity(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(1)) {
        throw ShapeError("cosine_similarity: incompatible shapes " + to_string(a.shape()) + ", " + to_string(b.shape()));
    }
    const std::size_t n = a.dim(0), m = b.dim(0), c = a.dim(1);
    auto norms = [c](std::span<const double> v, std::size_t rows) {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            double acc = 0.0;
            for (std::size_t j = 0; j < c; ++j) acc += v[r * c + j] * v[r * c + j];
            out[r] = std::sqrt(acc);
        }
        return out;
    };
    std::vector<double> na = norms(a.data(), n);
    std::vector<double> nb = norms(b.data(), m);
    std::vector<double> out(n * m, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < m; ++k) {
            if (na[i] == 0.0 || nb[k] == 0.0) continue;
            double dot = 0.0;
            for (std::size_t j = 0; j < c; ++j) dot += a[i * c + j] * b[k * c + j];
            out[i * m + k] = dot / (na[i] * nb[k]);
        }
    }
    auto node = make_op("cosine_similarity", {n, m}, std::move(out), {a.node(), b.node()});
    node->backward = [n, m, c, na = std::move(na), nb = std::move(nb)](Node& self) {
        Node& x = *self.inputs[0];
        Node& y = *self.inputs[1];
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < m; ++k) {
                if (na[i] == 0.0 || nb[k] == 0.0) continue;
                const double g = self.grad[i * m + k];
                const double s = self.value[i * m + k];
                const double inv = 1.0 / (na[i] * nb[k]);
                // ds/dx = y/(|x||y|) - s x/|x|^2, symmetric for y.
                if (x.requires_grad) {
                    auto& gx = x.grad_buffer();
                    for (std::size_t j = 0; j < c; ++j)
                        gx[i * c + j] += g * (y.value[k * c + j] * inv - s * x.value[i * c + j] / (na[i] * na[i]));
                }
                if (y.requires_grad) {
                    auto& gy = y.grad_buffer();
                    for (std::size_t j = 0; j < c; ++j)
                        gy[k * c + j] += g * (x.value[i * c + j] * inv - s * y.value[k * c + j] / (nb[k] * nb[k]));
                }
            }
        }
    };
    return Tensor(node);
}

Tensor patch_pool(const Tensor& a, std::size_t factor) {
    if (a.rank() != 4) throw ShapeError("patch_pool: expected (T,H,W,C), got " + to_string(a.shape()));
    const std::size_t t = a.dim(0), h = a.dim(1), w = a.dim(2), c = a.dim(3);
    if (factor == 0 || h % factor != 0 || w % factor != 0) {
        throw ShapeError("patch_pool: " + to_string(a.shape()) + " not divisible by " + std::to_string(factor));
    }
    const std::size_t oh = h / factor, ow = w / factor;
    const double inv = 1.0 / static_cast<double>(factor * factor);
    std::vector<double> out(t * oh * ow * c, 0.0);
    const auto& av = a.node()->value;
    for (std::size_t f = 0; f < t; ++f)
        for (std::size_t y = 0; y < h; ++y)
            for (std::size_t x = 0; x < w; ++x)
                for (std::size_t k = 0; k < c; ++k)
                    out[((f * oh + y / factor) * ow + x / factor) * c + k] += av[((f * h + y) * w + x) * c + k] * inv;
    auto node = make_op("patch_pool", {t, oh, ow, c}, std::move(out), {a.node()});
    node->backward = [t, h, w, c, oh, ow, factor, inv](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        for (std::size_t f = 0; f < t; ++f)
            for (std::size_t y = 0; y < h; ++y)
                for (std::size_t x = 0; x < w; ++x)
                    for (std::size_t k = 0; k < c; ++k)
                        g[((f * h + y) * w + x) * c + k] += self.grad[((f * oh + y / factor) * ow + x / factor) * c + k] * inv;
    };
    return Tensor(node);
}

Tensor upsample_nearest(const Tensor& a, std::size_t factor) {
    if (a.rank() != 4) throw ShapeError("upsample_nearest: expected (T,H,W,C), got " + to_string(a.shape()));
    if (factor == 0) throw ShapeError("upsample_nearest: factor must be positive");
    const std::size_t t = a.dim(0), h = a.dim(1), w = a.dim(2), c = a.dim(3);
    const std::size_t oh = h * factor, ow = w * factor;
    std::vector<double> out(t * oh * ow * c);
    const auto& av = a.node()->value;
    for (std::size_t f = 0; f < t; ++f)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x)
                for (std::size_t k = 0; k < c; ++k)
                    out[((f * oh + y) * ow + x) * c + k] = av[((f * h + y / factor) * w + x / factor) * c + k];
    auto node = make_op("upsample_nearest", {t, oh, ow, c}, std::move(out), {a.node()});
    node->backward = [t, h, w, c, oh, ow, factor](Node& self) {
        Node& in = *self.inputs[0];
        if (!in.requires_grad) return;
        auto& g = in.grad_buffer();
        for (std::size_t f = 0; f < t; ++f)
            for (std::size_t y = 0; y < oh; ++y)
                for (std::size_t x = 0; x < ow; ++x)
                    for (std::size_t k = 0; k < c; ++k)
                        g[((f * h + y / factor) * w + x / factor) * c + k] += self.grad[((f * oh + y) * ow + x) * c + k];
    };
    return Tensor(node);
}

// ---- gradient checking -------------------------------------------------------------------------

GradCheckResult grad_check_detailed(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps) {
    if (!(eps > 0.0)) throw ValueError("grad_check: eps must be positive");
    if (!x.requires_grad()) x.node()->requires_grad = true;
    x.zero_grad();
    backward(f(x));
    const std::vector<double> analytic = x.grad();
    x.zero_grad();

    GradCheckResult res;
    auto values = x.mutable_data();
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double orig = values[i];
        values[i] = orig + eps;
        const double up = f(x).item();
        values[i] = orig - eps;
        const double down = f(x).item();
        values[i] = orig;
        const double numeric = (up - down) / (2.0 * eps);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (i == 0 || rel > res.max_relative_error) {
            res.max_relative_error = rel;
            res.worst_index = i;
            res.analytic = analytic[i];
            res.numeric = numeric;
        }
    }
    return res;
}

double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps) {
    return grad_check_detailed(f, std::move(x), eps).max_relative_error;
}

}  // namespace ssp::ad
