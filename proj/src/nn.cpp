#include "osk/nn.hpp"

#include "osk/rng.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace osk {

namespace {

// softplus(bias) == 1 so predictive sigma starts in the unit regime
constexpr double kSigmaBiasInit = 0.5413248546129181;

constexpr char kCkptMagic[4] = {'O', 'S', 'K', 'W'};

}  // namespace

std::string head_name(HeadKind head) {
    switch (head) {
        case HeadKind::pixelwise: return "pixelwise";
        case HeadKind::regr: return "regr";
        case HeadKind::p_regr: return "p_regr";
        case HeadKind::sdf: return "sdf";
        case HeadKind::p_sdf: return "p_sdf";
    }
    return "?";
}

HeadKind head_from_name(const std::string& name) {
    if (name == "pixelwise") return HeadKind::pixelwise;
    if (name == "regr") return HeadKind::regr;
    if (name == "p_regr") return HeadKind::p_regr;
    if (name == "sdf") return HeadKind::sdf;
    if (name == "p_sdf") return HeadKind::p_sdf;
    throw std::invalid_argument("unknown head kind: " + name);
}

TinyUNet::TinyUNet(const UNetConfig& cfg) : cfg_(cfg) {
    if (cfg.levels < 1 || cfg.base_channels < 1) throw std::invalid_argument("bad net config");
    const int div = 1 << cfg.levels;
    if (cfg.input_width % div != 0 || cfg.input_height % div != 0)
        throw std::invalid_argument("input extent must be divisible by 2^levels");

    const int C = cfg.base_channels;
    // encoder: stem at full resolution, then one strided conv per level
    enc_w_.push_back(int(params_.size()));
    make_param("enc0.w", {1 * C, 3, 3});
    enc_b_.push_back(int(params_.size()));
    make_param("enc0.b", {C, 1, 1});
    for (int l = 0; l < cfg.levels; ++l) {
        const int ci = C << l, co = C << (l + 1);
        enc_w_.push_back(int(params_.size()));
        make_param("down" + std::to_string(l) + ".w", {ci * co, 3, 3});
        enc_b_.push_back(int(params_.size()));
        make_param("down" + std::to_string(l) + ".b", {co, 1, 1});
    }
    // decoder: upsample, concat skip, conv down to the skip's width
    for (int l = cfg.levels - 1; l >= 0; --l) {
        const int skip = C << l;
        const int ci = (C << (l + 1)) + skip;
        dec_w_.push_back(int(params_.size()));
        make_param("dec" + std::to_string(l) + ".w", {ci * skip, 3, 3});
        dec_b_.push_back(int(params_.size()));
        make_param("dec" + std::to_string(l) + ".b", {skip, 1, 1});
    }
    const int K = cfg.n_layers;
    head_mu_w_ = int(params_.size());
    make_param("head_mu.w", {C * K, 1, 1});
    head_mu_b_ = int(params_.size());
    make_param("head_mu.b", {K, 1, 1});
    if (cfg.head == HeadKind::p_sdf || cfg.head == HeadKind::p_regr) {
        head_sigma_w_ = int(params_.size());
        make_param("head_sigma.w", {C * K, 1, 1});
        head_sigma_b_ = int(params_.size());
        make_param("head_sigma.b", {K, 1, 1});
    }
    init_weights();
}

ad::Param& TinyUNet::make_param(const std::string& name, ad::Shape shape) {
    params_.emplace_back(name, shape);
    return params_.back();
}

void TinyUNet::init_weights() {
    Rng rng(cfg_.seed);
    for (auto& p : params_) {
        const bool is_bias = p.name.size() > 2 && p.name.compare(p.name.size() - 2, 2, ".b") == 0;
        if (is_bias) {
            std::fill(p.value.begin(), p.value.end(), 0.0);
            continue;
        }
        // fan-in over input channels and kernel area; output channels are
        // the leading factor of the packed weight shape
        int fan_in = p.shape.h * p.shape.w;
        if (p.name.rfind("enc0", 0) == 0) fan_in *= 1;
        else if (p.name.rfind("down", 0) == 0) {
            const int l = p.name[4] - '0';
            fan_in *= cfg_.base_channels << l;
        } else if (p.name.rfind("dec", 0) == 0) {
            const int l = p.name[3] - '0';
            fan_in *= (cfg_.base_channels << (l + 1)) + (cfg_.base_channels << l);
        } else {
            fan_in *= cfg_.base_channels;  // heads
        }
        const double bound = std::sqrt(1.0 / fan_in);
        for (double& v : p.value) v = rng.uniform(-bound, bound);
    }
    if (head_sigma_b_ >= 0) {
        auto& b = params_[size_t(head_sigma_b_)];
        std::fill(b.value.begin(), b.value.end(), kSigmaBiasInit);
    }
    // curve heads regress absolute row coordinates; starting at the
    // image center instead of row zero halves the initial residuals
    if (cfg_.head == HeadKind::regr || cfg_.head == HeadKind::p_regr) {
        auto& b = params_[size_t(head_mu_b_)];
        std::fill(b.value.begin(), b.value.end(), cfg_.input_height / 2.0);
    }
}

ad::Tensor TinyUNet::scan_to_tensor(const BScan& scan) {
    ad::Tensor t({1, scan.height, scan.width});
    for (size_t i = 0; i < scan.intensities.size(); ++i) t.v[i] = scan.intensities[i];
    return t;
}

std::vector<ScalarField> TinyUNet::tensor_to_fields(const ad::Shape& shape,
                                                    const std::vector<double>& values) {
    std::vector<ScalarField> fields;
    fields.reserve(size_t(shape.c));
    const size_t plane = size_t(shape.h) * shape.w;
    for (int c = 0; c < shape.c; ++c) {
        ScalarField f(shape.w, shape.h);
        std::copy(values.begin() + c * plane, values.begin() + (c + 1) * plane,
                  f.values.begin());
        fields.push_back(std::move(f));
    }
    return fields;
}

HeadNodes TinyUNet::forward(ad::Graph& g, const BScan& scan) {
    if (scan.width != cfg_.input_width || scan.height != cfg_.input_height)
        throw std::invalid_argument("scan shape does not match network config");
    return forward(g, scan_to_tensor(scan));
}

HeadNodes TinyUNet::forward(ad::Graph& g, ad::Tensor input) {
    if (!(input.shape == ad::Shape{1, cfg_.input_height, cfg_.input_width}))
        throw std::invalid_argument("input shape does not match network config");
    auto& ps = params_;

    int x = g.input(std::move(input));
    std::vector<int> skips;
    x = g.leaky_relu(g.conv3x3(x, g.param(ps[enc_w_[0]]), g.param(ps[enc_b_[0]]), 1));
    skips.push_back(x);
    for (int l = 0; l < cfg_.levels; ++l) {
        x = g.leaky_relu(
            g.conv3x3(x, g.param(ps[enc_w_[l + 1]]), g.param(ps[enc_b_[l + 1]]), 2));
        if (l + 1 < cfg_.levels) skips.push_back(x);
    }
    for (int i = 0; i < cfg_.levels; ++i) {
        const int skip = skips[size_t(cfg_.levels - 1 - i)];
        x = g.concat(g.upsample2(x), skip);
        x = g.leaky_relu(g.conv3x3(x, g.param(ps[dec_w_[i]]), g.param(ps[dec_b_[i]]), 1));
    }

    const bool curve_head = cfg_.head == HeadKind::regr || cfg_.head == HeadKind::p_regr;
    if (curve_head) x = g.mean_rows(x);

    HeadNodes out;
    out.trunk = x;
    const int mu_raw = g.conv1x1(x, g.param(ps[head_mu_w_]), g.param(ps[head_mu_b_]));
    switch (cfg_.head) {
        case HeadKind::pixelwise:
            out.logits = mu_raw;
            out.mu = g.sigmoid(mu_raw);
            break;
        case HeadKind::sdf:
        case HeadKind::regr:
            out.mu = mu_raw;
            break;
        case HeadKind::p_sdf:
        case HeadKind::p_regr:
            out.mu = mu_raw;
            out.sigma = sigma_branch(g, x);  // softplus floor keeps the NLL finite
            break;
    }
    return out;
}

Prediction TinyUNet::predict(const BScan& scan) {
    ad::Graph g;
    const HeadNodes nodes = forward(g, scan);
    Prediction pred;
    const ad::Shape mu_shape = g.shape(nodes.mu);
    switch (cfg_.head) {
        case HeadKind::pixelwise:
            pred.prob_maps = tensor_to_fields(mu_shape, g.values(nodes.mu));
            break;
        case HeadKind::sdf:
            pred.mu_fields = tensor_to_fields(mu_shape, g.values(nodes.mu));
            break;
        case HeadKind::p_sdf:
            pred.mu_fields = tensor_to_fields(mu_shape, g.values(nodes.mu));
            pred.sigma_fields = tensor_to_fields(g.shape(nodes.sigma), g.values(nodes.sigma));
            break;
        case HeadKind::regr:
            pred.mu_curve = g.values(nodes.mu);
            break;
        case HeadKind::p_regr:
            pred.mu_curve = g.values(nodes.mu);
            pred.sigma_curve = g.values(nodes.sigma);
            break;
    }
    return pred;
}

size_t TinyUNet::param_count() const {
    size_t n = 0;
    for (const auto& p : params_) n += p.value.size();
    return n;
}

void TinyUNet::zero_grad() {
    for (auto& p : params_) p.zero_grad();
}

int TinyUNet::sigma_branch(ad::Graph& g, int features) {
    if (head_sigma_w_ < 0) throw std::logic_error("head has no sigma branch");
    const int raw =
        g.conv1x1(features, g.param(params_[size_t(head_sigma_w_)]),
                  g.param(params_[size_t(head_sigma_b_)]));
    return g.softplus(raw, 1e-4);
}

void TinyUNet::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kCkptMagic, 4);
    const uint32_t count = static_cast<uint32_t>(params_.size());
    out.write(reinterpret_cast<const char*>(&count), 4);
    for (const auto& p : params_) {
        const uint32_t nlen = static_cast<uint32_t>(p.name.size());
        out.write(reinterpret_cast<const char*>(&nlen), 4);
        out.write(p.name.data(), nlen);
        const int32_t dims[3] = {p.shape.c, p.shape.h, p.shape.w};
        out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
        out.write(reinterpret_cast<const char*>(p.value.data()),
                  static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

void TinyUNet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw std::runtime_error("bad checkpoint magic: " + path);
    uint32_t count = 0;
    in.read(reinterpret_cast<char*>(&count), 4);
    if (count != params_.size()) throw std::runtime_error("checkpoint parameter count mismatch");
    for (auto& p : params_) {
        uint32_t nlen = 0;
        in.read(reinterpret_cast<char*>(&nlen), 4);
        std::string name(nlen, '\0');
        in.read(name.data(), nlen);
        int32_t dims[3];
        in.read(reinterpret_cast<char*>(dims), sizeof(dims));
        if (name != p.name || dims[0] != p.shape.c || dims[1] != p.shape.h ||
            dims[2] != p.shape.w)
            throw std::runtime_error("checkpoint layout mismatch at " + p.name);
        in.read(reinterpret_cast<char*>(p.value.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!in) throw std::runtime_error("checkpoint truncated: " + path);
}

}  // namespace osk
