#pragma once

// Training loop (Adam), per-head loss construction, and the
// finite-difference gradient checker.

#include "osk/nn.hpp"
#include "osk/sdf.hpp"

#include <stdexcept>
#include <string>
#include <vector>

namespace osk {

// Raised when a training step produces a non-finite loss.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class LossKind { default_for_head, clamped_l1, clamped_nll, mse, gauss_nll, bce };

struct TrainConfig {
    int epochs = 20;
    int batch_size = 4;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double clamp_delta = 29.0;
    double grad_clip = 0.0;  // global gradient L2 norm cap, 0 = off
    // Decoupled training for the probabilistic heads: the mean path
    // keeps the deterministic counterpart loss for the whole run while
    // the sigma head fits the NLL against a detached mean. The clamped
    // NLL is degenerate where both clamps saturate (zero residual
    // drives sigma toward the floor and any jitter then explodes the
    // quadratic term); end-to-end it wrecks the mean field at this
    // scale, decoupled it only perturbs the sigma head, where it
    // self-corrects. sigma_warmup_epochs delays the sigma branch until
    // the residual scale has settled.
    bool decoupled_sigma = false;
    int sigma_warmup_epochs = 0;
    bool cosine_lr_decay = false;  // anneal lr to lr/20 over the run
    LossKind loss = LossKind::default_for_head;
    uint64_t seed = 1;
    double aug_noise_max_sd = 0.0;  // per-sample additive noise, sd drawn U(0, max)
    bool aug_hflip = false;
    bool mean_reduction = false;  // losses reported/optimized as sums by default
    Construction target_construction = Construction::vertical;
};

struct Sample {
    BScan scan;
    MultiLayerCurve curves;
};

struct TrainResult {
    std::vector<double> loss_trace;  // mean per-sample loss per epoch
};

// Per-layer training target tensor for a head kind:
// field heads (n_layers, H, W), curve heads (n_layers, 1, W).
ad::Tensor build_target(const Sample& sample, HeadKind head, Construction construction);

// Attach the head's loss (summed over layers and pixels/columns) to a
// forward graph. `loss` resolves default_for_head by the model head.
int attach_loss(ad::Graph& g, const HeadNodes& nodes, const ad::Tensor& target,
                HeadKind head, LossKind loss, double clamp_delta);

LossKind default_loss(HeadKind head);

// Deterministic given (model seed, cfg.seed, data). Throws
// NumericalError naming the epoch/batch if the loss turns non-finite.
TrainResult train(TinyUNet& model, const std::vector<Sample>& data, const TrainConfig& cfg);

struct GradCheckReport {
    double max_rel_error = 0.0;
    size_t checked = 0;
    std::string worst_param;
};

// Central finite differences over every parameter scalar against the
// reverse-mode gradient of the head's loss on one sample.
GradCheckReport finite_difference_check(TinyUNet& model, const Sample& sample,
                                        LossKind loss, double clamp_delta, double h = 1e-4);

}  // namespace osk
