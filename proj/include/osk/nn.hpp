#pragma once

// Small encoder-decoder network with skip connections and the five
// prediction heads: per-pixel probabilities, direct coordinate
// regression (with and without predictive sigma), and signed-distance
// fields (with and without predictive sigma).

#include "osk/autodiff.hpp"
#include "osk/grid.hpp"
#include "osk/prob.hpp"

#include <deque>
#include <string>
#include <vector>

namespace osk {

enum class HeadKind { pixelwise, regr, p_regr, sdf, p_sdf };

std::string head_name(HeadKind head);
HeadKind head_from_name(const std::string& name);

struct UNetConfig {
    int levels = 3;
    int base_channels = 8;
    int input_width = 64;
    int input_height = 64;
    int n_layers = 3;  // boundaries predicted per scan
    HeadKind head = HeadKind::sdf;
    uint64_t seed = 1;
};

// Node ids of the head outputs inside a graph built by forward().
// Field heads produce (n_layers, H, W); curve heads (n_layers, 1, W).
// sigma is -1 for the deterministic heads; pixelwise keeps the
// pre-sigmoid logits around for the training loss.
struct HeadNodes {
    int mu = -1;
    int sigma = -1;
    int logits = -1;
    int trunk = -1;  // features feeding the heads (collapsed for curve heads)
};

// Decoded prediction for one scan.
struct Prediction {
    std::vector<ScalarField> mu_fields;     // sdf/p_sdf: one per layer
    std::vector<ScalarField> sigma_fields;  // p_sdf
    std::vector<ScalarField> prob_maps;     // pixelwise
    std::vector<double> mu_curve;           // regr heads, layer-major (n_layers * W)
    std::vector<double> sigma_curve;        // p_regr
};

class TinyUNet {
public:
    explicit TinyUNet(const UNetConfig& cfg);

    const UNetConfig& config() const { return cfg_; }

    // Build the forward graph for one scan; caller owns the graph.
    // Non-const because backward through the graph accumulates into the
    // bound parameters.
    HeadNodes forward(ad::Graph& g, const BScan& scan);
    // As above but from a raw input tensor (1, H, W); used for flips.
    HeadNodes forward(ad::Graph& g, ad::Tensor input);

    Prediction predict(const BScan& scan);

    std::deque<ad::Param>& params() { return params_; }
    const std::deque<ad::Param>& params() const { return params_; }
    size_t param_count() const;
    void zero_grad();

    // Rebuild the sigma head (affine + positive transform) on top of an
    // arbitrary node, e.g. a detached copy of the trunk features.
    int sigma_branch(ad::Graph& g, int features);

    void save(const std::string& path) const;
    void load(const std::string& path);

    // tensor <-> field helpers shared with the trainer
    static ad::Tensor scan_to_tensor(const BScan& scan);
    static std::vector<ScalarField> tensor_to_fields(const ad::Shape& shape,
                                                     const std::vector<double>& values);

private:
    ad::Param& make_param(const std::string& name, ad::Shape shape);
    void init_weights();

    UNetConfig cfg_;
    std::deque<ad::Param> params_;  // stable addresses for graph binding
    // parameter indices per role
    std::vector<int> enc_w_, enc_b_;  // stem + one strided conv per level
    std::vector<int> dec_w_, dec_b_;
    int head_mu_w_ = -1, head_mu_b_ = -1;
    int head_sigma_w_ = -1, head_sigma_b_ = -1;
};

}  // namespace osk
