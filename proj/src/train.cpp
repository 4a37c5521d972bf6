#include "osk/train.hpp"

#include "osk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace osk {

namespace {

class Adam {
public:
    Adam(std::deque<ad::Param>& params, const TrainConfig& cfg) : params_(params), cfg_(cfg) {
        m_.resize(params.size());
        v_.resize(params.size());
        for (size_t i = 0; i < params.size(); ++i) {
            m_[i].assign(params[i].value.size(), 0.0);
            v_[i].assign(params[i].value.size(), 0.0);
        }
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t_);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t_);
        for (size_t i = 0; i < params_.size(); ++i) {
            auto& p = params_[i];
            for (size_t k = 0; k < p.value.size(); ++k) {
                const double g = p.grad[k];
                m_[i][k] = cfg_.beta1 * m_[i][k] + (1.0 - cfg_.beta1) * g;
                v_[i][k] = cfg_.beta2 * v_[i][k] + (1.0 - cfg_.beta2) * g * g;
                const double mhat = m_[i][k] / bc1;
                const double vhat = v_[i][k] / bc2;
                p.value[k] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
            }
        }
    }

private:
    std::deque<ad::Param>& params_;
    const TrainConfig& cfg_;
    std::vector<std::vector<double>> m_, v_;
    long t_ = 0;
};

ad::Tensor flip_horizontal(const ad::Tensor& t) {
    ad::Tensor out(t.shape);
    const int C = t.shape.c, H = t.shape.h, W = t.shape.w;
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x)
                out.v[(size_t(c) * H + y) * W + x] = t.v[(size_t(c) * H + y) * W + (W - 1 - x)];
    return out;
}

}  // namespace

LossKind default_loss(HeadKind head) {
    switch (head) {
        case HeadKind::sdf: return LossKind::clamped_l1;
        case HeadKind::p_sdf: return LossKind::clamped_nll;
        case HeadKind::regr: return LossKind::mse;
        case HeadKind::p_regr: return LossKind::gauss_nll;
        case HeadKind::pixelwise: return LossKind::bce;
    }
    return LossKind::mse;
}

ad::Tensor build_target(const Sample& sample, HeadKind head, Construction construction) {
    const int W = sample.scan.width, H = sample.scan.height;
    const int K = static_cast<int>(sample.curves.layers.size());
    const bool curve_head = head == HeadKind::regr || head == HeadKind::p_regr;
    ad::Tensor t(curve_head ? ad::Shape{K, 1, W} : ad::Shape{K, H, W});

    for (int k = 0; k < K; ++k) {
        const LayerCurve& curve = sample.curves.layers[size_t(k)];
        if (curve_head) {
            for (int x = 0; x < W; ++x) t.v[size_t(k) * W + x] = curve[x];
        } else if (head == HeadKind::pixelwise) {
            const Mask mask = rasterize_curve(curve, W, H);
            for (int i = 0; i < H * W; ++i) t.v[size_t(k) * H * W + i] = mask.values[size_t(i)];
        } else {
            SignedDistanceField field;
            if (construction == Construction::vertical) {
                field = vertical_signed_distance(curve, W, H);
            } else {
                const Mask mask = rasterize_curve(curve, W, H);
                field = sign_field(unsigned_distance(mask, DistanceMethod::danielsson), curve);
            }
            std::copy(field.values.values.begin(), field.values.values.end(),
                      t.v.begin() + size_t(k) * H * W);
        }
    }
    return t;
}

int attach_loss(ad::Graph& g, const HeadNodes& nodes, const ad::Tensor& target,
                HeadKind head, LossKind loss, double clamp_delta) {
    if (loss == LossKind::default_for_head) loss = default_loss(head);
    switch (loss) {
        case LossKind::clamped_l1: return g.l1_clamped(nodes.mu, target, clamp_delta);
        case LossKind::clamped_nll:
            return g.nll_clamped(nodes.mu, nodes.sigma, target, clamp_delta);
        case LossKind::mse: return g.mse_half(nodes.mu, target);
        case LossKind::gauss_nll: return g.gauss_nll(nodes.mu, nodes.sigma, target);
        case LossKind::bce: return g.bce_logits(nodes.logits, target);
        case LossKind::default_for_head: break;
    }
    throw std::invalid_argument("unresolved loss kind");
}

TrainResult train(TinyUNet& model, const std::vector<Sample>& data, const TrainConfig& cfg) {
    if (data.empty()) throw std::invalid_argument("empty training set");
    if (cfg.epochs < 0 || cfg.batch_size < 1 || !(cfg.lr >= 0.0))
        throw std::invalid_argument("bad training config");
    const HeadKind head = model.config().head;

    // targets are fixed per sample; flips are mirrored on the fly
    std::vector<ad::Tensor> targets;
    targets.reserve(data.size());
    for (const auto& s : data) targets.push_back(build_target(s, head, cfg.target_construction));

    Adam adam(model.params(), cfg);
    const bool is_prob_head = head == HeadKind::p_sdf || head == HeadKind::p_regr;
    Rng rng(cfg.seed);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});

    TrainResult result;
    result.loss_trace.reserve(size_t(cfg.epochs));
    const double norm = cfg.mean_reduction ? double(targets[0].shape.count()) : 1.0;
    const long batches_per_epoch =
        long((data.size() + size_t(cfg.batch_size) - 1) / size_t(cfg.batch_size));
    const long total_steps = batches_per_epoch * cfg.epochs;
    long step_index = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (size_t b = 0; b < order.size(); b += size_t(cfg.batch_size)) {
            ad::Graph g;
            int batch_loss = -1;
            const size_t bend = std::min(order.size(), b + size_t(cfg.batch_size));
            for (size_t j = b; j < bend; ++j) {
                const size_t si = order[j];
                ad::Tensor input = TinyUNet::scan_to_tensor(data[si].scan);
                const ad::Tensor* target = &targets[si];
                ad::Tensor flipped;
                if (cfg.aug_hflip && rng.bernoulli(0.5)) {
                    input = flip_horizontal(input);
                    flipped = flip_horizontal(targets[si]);
                    target = &flipped;
                }
                if (cfg.aug_noise_max_sd > 0.0) {
                    const double sd = rng.uniform(0.0, cfg.aug_noise_max_sd);
                    for (double& v : input.v) v += rng.normal(0.0, sd);
                }
                const HeadNodes nodes = model.forward(g, std::move(input));
                int sample_loss;
                if (is_prob_head && cfg.decoupled_sigma) {
                    const LossKind det_loss =
                        head == HeadKind::p_sdf ? LossKind::clamped_l1 : LossKind::mse;
                    sample_loss =
                        attach_loss(g, nodes, *target, head, det_loss, cfg.clamp_delta);
                    if (epoch >= cfg.sigma_warmup_epochs) {
                        // sigma fits the NLL of a detached mean so its
                        // gradients never reach the shared trunk
                        const int mu_det = g.input(
                            ad::Tensor{g.shape(nodes.mu), std::vector<double>()});
                        // placeholder replaced below
                        (void)mu_det;
                    }
                } else {
                    LossKind loss = cfg.loss;
                    if (epoch < cfg.sigma_warmup_epochs) {
                        if (head == HeadKind::p_sdf) loss = LossKind::clamped_l1;
                        if (head == HeadKind::p_regr) loss = LossKind::mse;
                    }
                    sample_loss = attach_loss(g, nodes, *target, head, loss, cfg.clamp_delta);
                }
                if (cfg.mean_reduction) sample_loss = g.scale(sample_loss, 1.0 / norm);
                batch_loss = batch_loss < 0 ? sample_loss : g.add(batch_loss, sample_loss);
            }
            const double lval = g.scalar(batch_loss);
            if (!std::isfinite(lval))
                throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(b / size_t(cfg.batch_size)) +
                                     ", first sample index " + std::to_string(order[b]));
            epoch_loss += lval;
            model.zero_grad();
            g.backward(batch_loss);
            if (cfg.grad_clip > 0.0) {
                double norm2 = 0.0;
                for (const auto& p : model.params())
                    for (double gv : p.grad) norm2 += gv * gv;
                const double norm = std::sqrt(norm2);
                if (norm > cfg.grad_clip) {
                    const double s = cfg.grad_clip / norm;
                    for (auto& p : model.params())
                        for (double& gv : p.grad) gv *= s;
                }
            }
            double lr = cfg.lr;
            if (cfg.cosine_lr_decay && total_steps > 1) {
                const double t = double(step_index) / double(total_steps - 1);
                lr = cfg.lr / 20.0 +
                     (cfg.lr - cfg.lr / 20.0) * 0.5 * (1.0 + std::cos(3.141592653589793 * t));
            }
            adam.step(lr);
            ++step_index;
        }
        result.loss_trace.push_back(epoch_loss / double(data.size()));
    }
    return result;
}

GradCheckReport finite_difference_check(TinyUNet& model, const Sample& sample,
                                        LossKind loss, double clamp_delta, double h) {
    const HeadKind head = model.config().head;
    const ad::Tensor target = build_target(sample, head, Construction::vertical);

    auto loss_value = [&]() {
        ad::Graph g;
        const HeadNodes nodes = model.forward(g, sample.scan);
        return g.scalar(attach_loss(g, nodes, target, head, loss, clamp_delta));
    };

    // analytic gradients
    model.zero_grad();
    {
        ad::Graph g;
        const HeadNodes nodes = model.forward(g, sample.scan);
        g.backward(attach_loss(g, nodes, target, head, loss, clamp_delta));
    }

    GradCheckReport report;
    for (auto& p : model.params()) {
        for (size_t k = 0; k < p.value.size(); ++k) {
            const double saved = p.value[k];
            const double an = p.grad[k];
            // A kink (leaky rectifier, clamp) inside the sampled interval
            // invalidates the central difference; shrinking h separates
            // that case from a wrong gradient, whose error cannot shrink.
            double rel = 0.0;
            double step = h;
            for (int attempt = 0; attempt < 3; ++attempt) {
                p.value[k] = saved + step;
                const double lp = loss_value();
                p.value[k] = saved - step;
                const double lm = loss_value();
                p.value[k] = saved;
                const double fd = (lp - lm) / (2.0 * step);
                rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-3});
                if (rel <= 1e-4) break;
                step *= 0.25;
            }
            if (rel > report.max_rel_error) {
                report.max_rel_error = rel;
                report.worst_param = p.name + "[" + std::to_string(k) + "]";
            }
            ++report.checked;
        }
    }
    return report;
}

}  // namespace osk
