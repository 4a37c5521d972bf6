#include "osk/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace osk::ad {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;

double stable_softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid_of(double x) {
    if (x >= 0.0) {
        const double e = std::exp(-x);
        return 1.0 / (1.0 + e);
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double clampd(double v, double d) { return std::min(d, std::max(-d, v)); }

}  // namespace

int Graph::push(Node n) {
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::input(Tensor t) {
    Node n;
    n.op = Op::leaf;
    n.shape = t.shape;
    n.val = std::move(t.v);
    return push(std::move(n));
}

int Graph::param(Param& p) {
    Node n;
    n.op = Op::param_leaf;
    n.shape = p.shape;
    n.val = p.value;  // copy keeps the graph self-contained during a step
    n.bound = &p;
    return push(std::move(n));
}

Shape Graph::shape(int id) const { return at(id).shape; }

const std::vector<double>& Graph::values(int id) const { return at(id).val; }

double Graph::scalar(int id) const {
    if (at(id).shape.count() != 1) throw std::invalid_argument("node is not scalar");
    return at(id).val[0];
}

const std::vector<double>& Graph::grad(int id) const { return at(id).grad; }

int Graph::conv3x3(int x, int weights, int bias, int stride) {
    const Node& in = at(x);
    const Node& wn = at(weights);
    const Node& bn = at(bias);
    if (stride != 1 && stride != 2) throw std::invalid_argument("conv stride must be 1 or 2");
    const int ci = in.shape.c;
    if (wn.shape.h != 3 || wn.shape.w != 3 || wn.shape.c % ci != 0)
        throw std::invalid_argument("conv3x3 weight shape mismatch");
    const int co = wn.shape.c / ci;
    if (bn.shape.count() != co) throw std::invalid_argument("conv3x3 bias shape mismatch");
    const int H = in.shape.h, W = in.shape.w;
    if (stride == 2 && (H % 2 != 0 || W % 2 != 0))
        throw std::invalid_argument("strided conv needs even extent");
    const int OH = H / stride, OW = W / stride;

    Node n;
    n.op = Op::conv3x3;
    n.shape = {co, OH, OW};
    n.val.assign(size_t(co) * OH * OW, 0.0);
    n.in = {x, weights, bias};
    n.p0 = stride;

    const double* inp = in.val.data();
    const double* wp = wn.val.data();
    double* outp = n.val.data();
    if (stride == 1) {
        for (int o = 0; o < co; ++o) {
            double* oimg = outp + size_t(o) * H * W;
            std::fill(oimg, oimg + size_t(H) * W, bn.val[o]);
            for (int i = 0; i < ci; ++i) {
                const double* iimg = inp + size_t(i) * H * W;
                for (int ky = 0; ky < 3; ++ky) {
                    const int dy = ky - 1;
                    for (int kx = 0; kx < 3; ++kx) {
                        const int dx = kx - 1;
                        const double wv = wp[((size_t(o) * ci + i) * 3 + ky) * 3 + kx];
                        const int y0 = std::max(0, -dy), y1 = H - std::max(0, dy);
                        const int x0 = std::max(0, -dx), x1 = W - std::max(0, dx);
                        for (int y = y0; y < y1; ++y) {
                            const double* src = iimg + size_t(y + dy) * W + dx;
                            double* dst = oimg + size_t(y) * W;
                            for (int xx = x0; xx < x1; ++xx) dst[xx] += wv * src[xx];
                        }
                    }
                }
            }
        }
    } else {
        for (int o = 0; o < co; ++o) {
            double* oimg = outp + size_t(o) * OH * OW;
            std::fill(oimg, oimg + size_t(OH) * OW, bn.val[o]);
            for (int i = 0; i < ci; ++i) {
                const double* iimg = inp + size_t(i) * H * W;
                for (int ky = 0; ky < 3; ++ky)
                    for (int kx = 0; kx < 3; ++kx) {
                        const double wv = wp[((size_t(o) * ci + i) * 3 + ky) * 3 + kx];
                        for (int oy = 0; oy < OH; ++oy) {
                            const int sy = 2 * oy + ky - 1;
                            if (sy < 0 || sy >= H) continue;
                            for (int ox = 0; ox < OW; ++ox) {
                                const int sx = 2 * ox + kx - 1;
                                if (sx < 0 || sx >= W) continue;
                                oimg[size_t(oy) * OW + ox] += wv * iimg[size_t(sy) * W + sx];
                            }
                        }
                    }
            }
        }
    }
    return push(std::move(n));
}

int Graph::conv1x1(int x, int weights, int bias) {
    const Node& in = at(x);
    const Node& wn = at(weights);
    const Node& bn = at(bias);
    const int ci = in.shape.c;
    if (wn.shape.h != 1 || wn.shape.w != 1 || wn.shape.c % ci != 0)
        throw std::invalid_argument("conv1x1 weight shape mismatch");
    const int co = wn.shape.c / ci;
    if (bn.shape.count() != co) throw std::invalid_argument("conv1x1 bias shape mismatch");
    const int HW = in.shape.h * in.shape.w;

    Node n;
    n.op = Op::conv1x1;
    n.shape = {co, in.shape.h, in.shape.w};
    n.val.assign(size_t(co) * HW, 0.0);
    n.in = {x, weights, bias};
    for (int o = 0; o < co; ++o) {
        double* dst = n.val.data() + size_t(o) * HW;
        std::fill(dst, dst + HW, bn.val[o]);
        for (int i = 0; i < ci; ++i) {
            const double wv = wn.val[size_t(o) * ci + i];
            const double* src = in.val.data() + size_t(i) * HW;
            for (int k = 0; k < HW; ++k) dst[k] += wv * src[k];
        }
    }
    return push(std::move(n));
}

int Graph::upsample2(int x) {
    const Node& in = at(x);
    const int C = in.shape.c, H = in.shape.h, W = in.shape.w;
    Node n;
    n.op = Op::upsample2;
    n.shape = {C, H * 2, W * 2};
    n.val.resize(size_t(C) * H * W * 4);
    n.in = {x, -1, -1};
    for (int c = 0; c < C; ++c) {
        const double* src = in.val.data() + size_t(c) * H * W;
        double* dst = n.val.data() + size_t(c) * H * W * 4;
        for (int y = 0; y < 2 * H; ++y) {
            const double* srow = src + size_t(y / 2) * W;
            double* drow = dst + size_t(y) * 2 * W;
            for (int xx = 0; xx < 2 * W; ++xx) drow[xx] = srow[xx / 2];
        }
    }
    return push(std::move(n));
}

int Graph::concat(int a, int b) {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (na.shape.h != nb.shape.h || na.shape.w != nb.shape.w)
        throw std::invalid_argument("concat spatial shape mismatch");
    Node n;
    n.op = Op::concat;
    n.shape = {na.shape.c + nb.shape.c, na.shape.h, na.shape.w};
    n.val.reserve(na.val.size() + nb.val.size());
    n.val.insert(n.val.end(), na.val.begin(), na.val.end());
    n.val.insert(n.val.end(), nb.val.begin(), nb.val.end());
    n.in = {a, b, -1};
    return push(std::move(n));
}

int Graph::leaky_relu(int x, double alpha) {
    const Node& in = at(x);
    Node n;
    n.op = Op::leaky_relu;
    n.shape = in.shape;
    n.p0 = alpha;
    n.val.resize(in.val.size());
    for (size_t i = 0; i < in.val.size(); ++i)
        n.val[i] = in.val[i] > 0.0 ? in.val[i] : alpha * in.val[i];
    n.in = {x, -1, -1};
    return push(std::move(n));
}

int Graph::softplus(int x, double shift) {
    const Node& in = at(x);
    Node n;
    n.op = Op::softplus;
    n.shape = in.shape;
    n.p0 = shift;
    n.val.resize(in.val.size());
    for (size_t i = 0; i < in.val.size(); ++i) n.val[i] = stable_softplus(in.val[i]) + shift;
    n.in = {x, -1, -1};
    return push(std::move(n));
}

int Graph::sigmoid(int x) {
    const Node& in = at(x);
    Node n;
    n.op = Op::sigmoid;
    n.shape = in.shape;
    n.val.resize(in.val.size());
    for (size_t i = 0; i < in.val.size(); ++i) n.val[i] = sigmoid_of(in.val[i]);
    n.in = {x, -1, -1};
    return push(std::move(n));
}

int Graph::mean_rows(int x) {
    const Node& in = at(x);
    const int C = in.shape.c, H = in.shape.h, W = in.shape.w;
    Node n;
    n.op = Op::mean_rows;
    n.shape = {C, 1, W};
    n.val.assign(size_t(C) * W, 0.0);
    n.in = {x, -1, -1};
    for (int c = 0; c < C; ++c) {
        const double* src = in.val.data() + size_t(c) * H * W;
        double* dst = n.val.data() + size_t(c) * W;
        for (int y = 0; y < H; ++y)
            for (int xx = 0; xx < W; ++xx) dst[xx] += src[size_t(y) * W + xx];
        for (int xx = 0; xx < W; ++xx) dst[xx] /= H;
    }
    return push(std::move(n));
}

int Graph::add(int a, int b) {
    const Node& na = at(a);
    const Node& nb = at(b);
    if (!(na.shape == nb.shape)) throw std::invalid_argument("add shape mismatch");
    Node n;
    n.op = Op::add;
    n.shape = na.shape;
    n.val.resize(na.val.size());
    for (size_t i = 0; i < na.val.size(); ++i) n.val[i] = na.val[i] + nb.val[i];
    n.in = {a, b, -1};
    return push(std::move(n));
}

int Graph::scale(int x, double k) {
    const Node& in = at(x);
    Node n;
    n.op = Op::scale;
    n.shape = in.shape;
    n.p0 = k;
    n.val.resize(in.val.size());
    for (size_t i = 0; i < in.val.size(); ++i) n.val[i] = k * in.val[i];
    n.in = {x, -1, -1};
    return push(std::move(n));
}

int Graph::sum(int x) {
    const Node& in = at(x);
    Node n;
    n.op = Op::sum;
    n.shape = {1, 1, 1};
    double s = 0.0;
    for (double v : in.val) s += v;
    n.val.assign(1, s);
    n.in = {x, -1, -1};
    return push(std::move(n));
}

int Graph::l1_clamped(int pred, Tensor target, double delta) {
    const Node& p = at(pred);
    if (!(p.shape == target.shape)) throw std::invalid_argument("loss target shape mismatch");
    Node n;
    n.op = Op::l1_clamped;
    n.shape = {1, 1, 1};
    n.p0 = delta;
    double s = 0.0;
    for (size_t i = 0; i < p.val.size(); ++i)
        s += std::abs(clampd(target.v[i], delta) - clampd(p.val[i], delta));
    n.val.assign(1, s);
    n.target = std::move(target);
    n.in = {pred, -1, -1};
    return push(std::move(n));
}

int Graph::nll_clamped(int mu, int sigma, Tensor target, double delta) {
    const Node& m = at(mu);
    const Node& sg = at(sigma);
    if (!(m.shape == target.shape) || !(sg.shape == target.shape))
        throw std::invalid_argument("loss target shape mismatch");
    Node n;
    n.op = Op::nll_clamped;
    n.shape = {1, 1, 1};
    n.p0 = delta;
    double s = 0.0;
    for (size_t i = 0; i < m.val.size(); ++i) {
        const double r = clampd(target.v[i], delta) - clampd(m.val[i], delta);
        const double sig = sg.val[i];
        s += 0.5 * (r * r / (sig * sig) + std::log(sig * sig));
    }
    n.val.assign(1, s);
    n.target = std::move(target);
    n.in = {mu, sigma, -1};
    return push(std::move(n));
}

int Graph::mse_half(int pred, Tensor target) {
    const Node& p = at(pred);
    if (!(p.shape == target.shape)) throw std::invalid_argument("loss target shape mismatch");
    Node n;
    n.op = Op::mse_half;
    n.shape = {1, 1, 1};
    double s = 0.0;
    for (size_t i = 0; i < p.val.size(); ++i) {
        const double r = p.val[i] - target.v[i];
        s += 0.5 * r * r;
    }
    n.val.assign(1, s);
    n.target = std::move(target);
    n.in = {pred, -1, -1};
    return push(std::move(n));
}

int Graph::gauss_nll(int mu, int sigma, Tensor target) {
    const Node& m = at(mu);
    const Node& sg = at(sigma);
    if (!(m.shape == target.shape) || !(sg.shape == target.shape))
        throw std::invalid_argument("loss target shape mismatch");
    Node n;
    n.op = Op::gauss_nll;
    n.shape = {1, 1, 1};
    double s = 0.0;
    for (size_t i = 0; i < m.val.size(); ++i) {
        const double r = target.v[i] - m.val[i];
        const double sig = sg.val[i];
        s += 0.5 * (r * r / (sig * sig) + std::log(sig * sig) + kLn2Pi);
    }
    n.val.assign(1, s);
    n.target = std::move(target);
    n.in = {mu, sigma, -1};
    return push(std::move(n));
}

int Graph::bce_logits(int logits, Tensor target01) {
    const Node& z = at(logits);
    if (!(z.shape == target01.shape)) throw std::invalid_argument("loss target shape mismatch");
    Node n;
    n.op = Op::bce_logits;
    n.shape = {1, 1, 1};
    double s = 0.0;
    for (size_t i = 0; i < z.val.size(); ++i)
        s += stable_softplus(z.val[i]) - target01.v[i] * z.val[i];
    n.val.assign(1, s);
    n.target = std::move(target01);
    n.in = {logits, -1, -1};
    return push(std::move(n));
}

void Graph::backward(int loss_id) {
    if (at(loss_id).shape.count() != 1)
        throw std::invalid_argument("backward requires a scalar loss node");
    for (int i = 0; i <= loss_id; ++i) at(i).grad.assign(at(i).val.size(), 0.0);
    at(loss_id).grad[0] = 1.0;
    for (int i = loss_id; i >= 0; --i) backward_node(i);
}

void Graph::backward_node(int id) {
    Node& n = at(id);
    const double* g = n.grad.data();
    switch (n.op) {
        case Op::leaf:
            break;
        case Op::param_leaf:
            for (size_t i = 0; i < n.grad.size(); ++i) n.bound->grad[i] += n.grad[i];
            break;
        case Op::conv3x3: {
            Node& in = at(n.in[0]);
            Node& wn = at(n.in[1]);
            Node& bn = at(n.in[2]);
            const int ci = in.shape.c, co = n.shape.c;
            const int H = in.shape.h, W = in.shape.w;
            const int OH = n.shape.h, OW = n.shape.w;
            const int stride = static_cast<int>(n.p0);
            if (stride == 1) {
                for (int o = 0; o < co; ++o) {
                    const double* gimg = g + size_t(o) * H * W;
                    double bsum = 0.0;
                    for (int k = 0; k < H * W; ++k) bsum += gimg[k];
                    bn.grad[o] += bsum;
                    for (int i = 0; i < ci; ++i) {
                        const double* iimg = in.val.data() + size_t(i) * H * W;
                        double* gin = in.grad.data() + size_t(i) * H * W;
                        for (int ky = 0; ky < 3; ++ky) {
                            const int dy = ky - 1;
                            for (int kx = 0; kx < 3; ++kx) {
                                const int dx = kx - 1;
                                const size_t widx = ((size_t(o) * ci + i) * 3 + ky) * 3 + kx;
                                const double wv = wn.val[widx];
                                const int y0 = std::max(0, -dy), y1 = H - std::max(0, dy);
                                const int x0 = std::max(0, -dx), x1 = W - std::max(0, dx);
                                double wsum = 0.0;
                                for (int y = y0; y < y1; ++y) {
                                    const double* grow = gimg + size_t(y) * W;
                                    const double* srow = iimg + size_t(y + dy) * W + dx;
                                    double* girow = gin + size_t(y + dy) * W + dx;
                                    for (int xx = x0; xx < x1; ++xx) {
                                        wsum += grow[xx] * srow[xx];
                                        girow[xx] += wv * grow[xx];
                                    }
                                }
                                wn.grad[widx] += wsum;
                            }
                        }
                    }
                }
            } else {
                for (int o = 0; o < co; ++o) {
                    const double* gimg = g + size_t(o) * OH * OW;
                    double bsum = 0.0;
                    for (int k = 0; k < OH * OW; ++k) bsum += gimg[k];
                    bn.grad[o] += bsum;
                    for (int i = 0; i < ci; ++i) {
                        const double* iimg = in.val.data() + size_t(i) * H * W;
                        double* gin = in.grad.data() + size_t(i) * H * W;
                        for (int ky = 0; ky < 3; ++ky)
                            for (int kx = 0; kx < 3; ++kx) {
                                const size_t widx = ((size_t(o) * ci + i) * 3 + ky) * 3 + kx;
                                const double wv = wn.val[widx];
                                double wsum = 0.0;
                                for (int oy = 0; oy < OH; ++oy) {
                                    const int sy = 2 * oy + ky - 1;
                                    if (sy < 0 || sy >= H) continue;
                                    for (int ox = 0; ox < OW; ++ox) {
                                        const int sx = 2 * ox + kx - 1;
                                        if (sx < 0 || sx >= W) continue;
                                        const double gv = gimg[size_t(oy) * OW + ox];
                                        wsum += gv * iimg[size_t(sy) * W + sx];
                                        gin[size_t(sy) * W + sx] += wv * gv;
                                    }
                                }
                                wn.grad[widx] += wsum;
                            }
                    }
                }
            }
            break;
        }
        case Op::conv1x1: {
            Node& in = at(n.in[0]);
            Node& wn = at(n.in[1]);
            Node& bn = at(n.in[2]);
            const int ci = in.shape.c, co = n.shape.c;
            const int HW = n.shape.h * n.shape.w;
            for (int o = 0; o < co; ++o) {
                const double* go = g + size_t(o) * HW;
                double bsum = 0.0;
                for (int k = 0; k < HW; ++k) bsum += go[k];
                bn.grad[o] += bsum;
                for (int i = 0; i < ci; ++i) {
                    const double wv = wn.val[size_t(o) * ci + i];
                    const double* src = in.val.data() + size_t(i) * HW;
                    double* gin = in.grad.data() + size_t(i) * HW;
                    double wsum = 0.0;
                    for (int k = 0; k < HW; ++k) {
                        wsum += go[k] * src[k];
                        gin[k] += wv * go[k];
                    }
                    wn.grad[size_t(o) * ci + i] += wsum;
                }
            }
            break;
        }
        case Op::upsample2: {
            Node& in = at(n.in[0]);
            const int C = in.shape.c, H = in.shape.h, W = in.shape.w;
            for (int c = 0; c < C; ++c) {
                double* gin = in.grad.data() + size_t(c) * H * W;
                const double* go = g + size_t(c) * H * W * 4;
                for (int y = 0; y < 2 * H; ++y) {
                    const double* grow = go + size_t(y) * 2 * W;
                    double* girow = gin + size_t(y / 2) * W;
                    for (int xx = 0; xx < 2 * W; ++xx) girow[xx / 2] += grow[xx];
                }
            }
            break;
        }
        case Op::concat: {
            Node& a = at(n.in[0]);
            Node& b = at(n.in[1]);
            for (size_t i = 0; i < a.grad.size(); ++i) a.grad[i] += n.grad[i];
            for (size_t i = 0; i < b.grad.size(); ++i) b.grad[i] += n.grad[a.grad.size() + i];
            break;
        }
        case Op::leaky_relu: {
            Node& in = at(n.in[0]);
            for (size_t i = 0; i < in.grad.size(); ++i)
                in.grad[i] += n.grad[i] * (in.val[i] > 0.0 ? 1.0 : n.p0);
            break;
        }
        case Op::softplus: {
            Node& in = at(n.in[0]);
            for (size_t i = 0; i < in.grad.size(); ++i)
                in.grad[i] += n.grad[i] * sigmoid_of(in.val[i]);
            break;
        }
        case Op::sigmoid: {
            Node& in = at(n.in[0]);
            for (size_t i = 0; i < in.grad.size(); ++i)
                in.grad[i] += n.grad[i] * n.val[i] * (1.0 - n.val[i]);
            break;
        }
        case Op::mean_rows: {
            Node& in = at(n.in[0]);
            const int C = in.shape.c, H = in.shape.h, W = in.shape.w;
            for (int c = 0; c < C; ++c) {
                const double* go = g + size_t(c) * W;
                double* gin = in.grad.data() + size_t(c) * H * W;
                for (int y = 0; y < H; ++y)
                    for (int xx = 0; xx < W; ++xx) gin[size_t(y) * W + xx] += go[xx] / H;
            }
            break;
        }
        case Op::add: {
            Node& a = at(n.in[0]);
            Node& b = at(n.in[1]);
            for (size_t i = 0; i < n.grad.size(); ++i) {
                a.grad[i] += n.grad[i];
                b.grad[i] += n.grad[i];
            }
            break;
        }
        case Op::scale: {
            Node& in = at(n.in[0]);
            for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += n.p0 * n.grad[i];
            break;
        }
        case Op::sum: {
            Node& in = at(n.in[0]);
            const double gv = n.grad[0];
            for (size_t i = 0; i < in.grad.size(); ++i) in.grad[i] += gv;
            break;
        }
        case Op::l1_clamped: {
            Node& p = at(n.in[0]);
            const double gv = n.grad[0];
            const double d = n.p0;
            for (size_t i = 0; i < p.val.size(); ++i) {
                if (std::abs(p.val[i]) >= d) continue;  // clamp saturated, no gradient
                const double r = clampd(n.target.v[i], d) - p.val[i];
                if (r > 0.0)
                    p.grad[i] -= gv;
                else if (r < 0.0)
                    p.grad[i] += gv;
            }
            break;
        }
        case Op::nll_clamped: {
            Node& m = at(n.in[0]);
            Node& sg = at(n.in[1]);
            const double gv = n.grad[0];
            const double d = n.p0;
            for (size_t i = 0; i < m.val.size(); ++i) {
                const double sig = sg.val[i];
                const double r = clampd(n.target.v[i], d) - clampd(m.val[i], d);
                if (std::abs(m.val[i]) < d) m.grad[i] += gv * (-r / (sig * sig));
                sg.grad[i] += gv * (1.0 / sig - r * r / (sig * sig * sig));
            }
            break;
        }
        case Op::mse_half: {
            Node& p = at(n.in[0]);
            const double gv = n.grad[0];
            for (size_t i = 0; i < p.val.size(); ++i)
                p.grad[i] += gv * (p.val[i] - n.target.v[i]);
            break;
        }
        case Op::gauss_nll: {
            Node& m = at(n.in[0]);
            Node& sg = at(n.in[1]);
            const double gv = n.grad[0];
            for (size_t i = 0; i < m.val.size(); ++i) {
                const double sig = sg.val[i];
                const double r = n.target.v[i] - m.val[i];
                m.grad[i] += gv * (-r / (sig * sig));
                sg.grad[i] += gv * (1.0 / sig - r * r / (sig * sig * sig));
            }
            break;
        }
        case Op::bce_logits: {
            Node& z = at(n.in[0]);
            const double gv = n.grad[0];
            for (size_t i = 0; i < z.val.size(); ++i)
                z.grad[i] += gv * (sigmoid_of(z.val[i]) - n.target.v[i]);
            break;
        }
    }
}

}  // namespace osk::ad
