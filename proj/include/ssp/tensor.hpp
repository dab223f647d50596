#pragma once

// Minimal dense reverse-mode differentiation.
//
// A Tensor is a shared handle to a graph node holding a row-major float64 buffer. Every
// operation below records a node whose backward rule accumulates into the gradients of its
// inputs. Calling backward() on a scalar walks the recorded graph in reverse topological order,
// visiting each node once.
//
// Broadcasting is limited to leading-dimension expansion: in a binary elementwise op the shape
// of the lower-rank operand must equal the trailing dimensions of the other (a scalar, shape {},
// is a suffix of every shape). Anything else needs an explicit reshape/permute/expand.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace ssp::ad {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

struct Node {
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;  // empty until something is accumulated
    bool requires_grad = false;
    std::vector<std::shared_ptr<Node>> inputs;
    std::function<void(Node&)> backward;  // reads this node's grad, accumulates into inputs
    const char* op = "leaf";

    void accumulate(std::size_t i, double g) {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        grad[i] += g;
    }
    std::vector<double>& grad_buffer() {
        if (grad.empty()) grad.assign(value.size(), 0.0);
        return grad;
    }
};

class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::shared_ptr<Node> node) : node_(std::move(node)) {}

    static Tensor constant(Shape shape, std::vector<double> values);
    static Tensor parameter(Shape shape, std::vector<double> values);
    static Tensor zeros(Shape shape, bool requires_grad = false);
    static Tensor full(Shape shape, double value, bool requires_grad = false);
    static Tensor scalar(double value);

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t rank() const { return node_->shape.size(); }
    std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
    std::size_t numel() const { return node_->value.size(); }
    bool requires_grad() const { return node_->requires_grad; }

    std::span<const double> data() const { return node_->value; }
    /// Direct write access, for parameter updates between graph constructions.
    std::span<double> mutable_data() { return node_->value; }
    double operator[](std::size_t i) const { return node_->value[i]; }
    double item() const;

    /// Accumulated gradient; all zeros if backward never reached this tensor.
    std::vector<double> grad() const;
    void zero_grad() { node_->grad.clear(); }

    /// Same values, cut from the graph.
    Tensor detach() const;

    const std::shared_ptr<Node>& node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Topologically ordered view of the graph feeding one tensor.
class Graph {
public:
    static Graph of(const Tensor& root);

    /// Inputs precede the nodes that consume them; the root is last.
    const std::vector<Node*>& nodes() const { return order_; }

    /// Seeds d(root)/d(root) = 1 and runs every backward rule once in reverse order.
    /// Throws ContractError unless the root holds exactly one value.
    void backward();

private:
    std::shared_ptr<Node> root_;
    std::vector<Node*> order_;
};

void backward(const Tensor& loss);

// ---- elementwise -----------------------------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor div(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double k);
Tensor add_scalar(const Tensor& a, double k);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
Tensor exp(const Tensor& a);
Tensor log(const Tensor& a);
Tensor sqrt(const Tensor& a);
/// log(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& a);
/// Values outside [lo, hi] are pinned; their gradient is zero.
Tensor clamp(const Tensor& a, double lo, double hi);

// ---- reductions ------------------------------------------------------------------------------
Tensor sum(const Tensor& a);
Tensor mean_all(const Tensor& a);
/// Mean over one axis; the axis is removed from the shape.
Tensor mean(const Tensor& a, std::size_t axis);

// ---- linear algebra --------------------------------------------------------------------------
Tensor matmul(const Tensor& a, const Tensor& b);  // (M,K) x (K,N)
Tensor bmm(const Tensor& a, const Tensor& b);     // (B,M,K) x (B,K,N)
Tensor transpose(const Tensor& a);                // 2-d only

// ---- shape -----------------------------------------------------------------------------------
Tensor reshape(const Tensor& a, Shape shape);
Tensor permute(const Tensor& a, const std::vector<std::size_t>& perm);
/// Prepends `leading` dimensions, repeating the data.
Tensor expand(const Tensor& a, const Shape& leading);
Tensor concat(const Tensor& a, const Tensor& b, std::size_t axis);
Tensor slice(const Tensor& a, std::size_t axis, std::size_t start, std::size_t length);

// ---- normalization ---------------------------------------------------------------------------
Tensor softmax(const Tensor& a, std::size_t axis);
/// (x - mean) / sqrt(var + eps) along `axis`, population variance, no affine.
Tensor layer_norm(const Tensor& a, std::size_t axis, double eps = 1e-5);

// ---- model helpers ---------------------------------------------------------------------------
/// Row lookup: table (V,D), ids in [0,V) -> (len(ids), D).
Tensor gather_rows(const Tensor& table, std::span<const std::size_t> ids);
/// Pairwise cosine similarity of rows: (N,C) x (M,C) -> (N,M). A zero-norm row scores 0.
Tensor cosine_similarity(const Tensor& a, const Tensor& b);
/// Non-overlapping average pooling of a (T,H,W,C) tensor by `factor` in both spatial axes.
Tensor patch_pool(const Tensor& a, std::size_t factor);
/// Nearest-neighbour upsampling of a (T,H,W,C) tensor by `factor` in both spatial axes.
Tensor upsample_nearest(const Tensor& a, std::size_t factor);

// ---- gradient checking -----------------------------------------------------------------------
struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
};

/// Compares backward() against central differences (f(x+eps e_i) - f(x-eps e_i)) / (2 eps)
/// for every coordinate of `x`. Relative error per coordinate is |a-n| / max(|a|, |n|, 1e-8).
/// `f` must return a one-element tensor and may close over `x` (which shares its node).
GradCheckResult grad_check_detailed(const std::function<Tensor(const Tensor&)>& f, Tensor x,
                                    double eps = 1e-5);
double grad_check(const std::function<Tensor(const Tensor&)>& f, Tensor x, double eps = 1e-5);

}  // namespace ssp::ad
