#pragma once

// Reverse-mode automatic differentiation over dense (channels, height,
// width) arrays: a define-by-run tape with the primitives needed by the
// encoder-decoder network and its losses. Single-owner per graph; build
// the graph with the node-returning methods, then call backward on a
// scalar loss node to accumulate gradients into bound Params.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace osk::ad {

struct Shape {
    int c = 1, h = 1, w = 1;
    int count() const { return c * h * w; }
    bool operator==(const Shape& o) const { return c == o.c && h == o.h && w == o.w; }
};

struct Tensor {
    Shape shape;
    std::vector<double> v;

    Tensor() = default;
    explicit Tensor(Shape s, double fill = 0.0) : shape(s), v(size_t(s.count()), fill) {}
};

// Trainable parameter: values persist across graphs, gradients are
// accumulated by Graph::backward through bound leaf nodes.
struct Param {
    std::string name;
    Shape shape;
    std::vector<double> value;
    std::vector<double> grad;

    Param() = default;
    Param(std::string n, Shape s)
        : name(std::move(n)), shape(s), value(size_t(s.count()), 0.0),
          grad(size_t(s.count()), 0.0) {}
    void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

class Graph {
public:
    // leaves
    int input(Tensor t);
    int constant(Tensor t) { return input(std::move(t)); }
    int param(Param& p);

    // network primitives
    int conv3x3(int x, int weights, int bias, int stride);  // zero pad 1, stride 1 or 2
    int conv1x1(int x, int weights, int bias);              // per-pixel / per-column affine
    int upsample2(int x);                                   // nearest neighbor, x2
    int concat(int a, int b);                               // channel concat
    int leaky_relu(int x, double alpha = 0.1);
    int softplus(int x, double shift = 0.0);  // ln(1+e^x) + shift, the positive transform
    int sigmoid(int x);
    int mean_rows(int x);  // collapse height to 1 by averaging

    // algebra / reductions
    int add(int a, int b);  // same shape
    int scale(int x, double k);
    int sum(int x);  // scalar

    // losses against a constant target, all reduced by summation
    int l1_clamped(int pred, Tensor target, double delta);
    int nll_clamped(int mu, int sigma, Tensor target, double delta);
    int mse_half(int pred, Tensor target);             // sum (p-t)^2 / 2
    int gauss_nll(int mu, int sigma, Tensor target);   // includes ln 2pi term
    int bce_logits(int logits, Tensor target01);

    Shape shape(int id) const;
    const std::vector<double>& values(int id) const;
    double scalar(int id) const;
    const std::vector<double>& grad(int id) const;

    // Reverse pass from a scalar node. Gradients of bound Params
    // accumulate (+=); call Param::zero_grad between steps.
    void backward(int loss_id);

    size_t node_count() const { return nodes_.size(); }

private:
    enum class Op : uint8_t {
        leaf, param_leaf, conv3x3, conv1x1, upsample2, concat, leaky_relu, softplus,
        sigmoid, mean_rows, add, scale, sum, l1_clamped, nll_clamped, mse_half,
        gauss_nll, bce_logits
    };

    struct Node {
        Op op = Op::leaf;
        Shape shape;
        std::vector<double> val;
        std::vector<double> grad;
        std::array<int, 3> in = {-1, -1, -1};
        double p0 = 0.0;  // stride / alpha / delta / k / shift
        Tensor target;    // loss targets
        Param* bound = nullptr;
    };

    int push(Node n);
    void backward_node(int id);
    const Node& at(int id) const { return nodes_[size_t(id)]; }
    Node& at(int id) { return nodes_[size_t(id)]; }

    std::vector<Node> nodes_;
};

}  // namespace osk::ad
