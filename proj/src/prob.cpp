#include "osk/prob.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace osk {

namespace {

constexpr double kLn2Pi = 1.8378770664093454836;  // ln(2*pi)

void require_same_shape(const ScalarField& a, const ScalarField& b) {
    if (a.width != b.width || a.height != b.height)
        throw std::invalid_argument("field shape mismatch");
}

}  // namespace

double nll_gaussian_pixel(double mu, double sigma, double target) {
    if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
    const double r = target - mu;
    return 0.5 * (r * r / (sigma * sigma) + std::log(sigma * sigma) + kLn2Pi);
}

double total_nll(const ProbabilisticField& field, const SignedDistanceField& target) {
    require_same_shape(field.mu, target.values);
    require_same_shape(field.sigma, target.values);
    double sum = 0.0;
    const size_t n = field.mu.values.size();
    for (size_t i = 0; i < n; ++i)
        sum += nll_gaussian_pixel(field.mu.values[i], field.sigma.values[i],
                                  target.values.values[i]);
    return sum;
}

double clamped_l1_loss(const ScalarField& pred, const SignedDistanceField& target,
                       const ClampConfig& cfg) {
    require_same_shape(pred, target.values);
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("clamp delta must be positive");
    double sum = 0.0;
    const size_t n = pred.values.size();
    for (size_t i = 0; i < n; ++i)
        sum += std::abs(clamp_sdf(target.values.values[i], cfg.delta) -
                        clamp_sdf(pred.values[i], cfg.delta));
    return sum;
}

double clamped_nll_loss(const ProbabilisticField& field, const SignedDistanceField& target,
                        const ClampConfig& cfg) {
    require_same_shape(field.mu, target.values);
    require_same_shape(field.sigma, target.values);
    if (!(cfg.delta > 0.0)) throw std::invalid_argument("clamp delta must be positive");
    double sum = 0.0;
    const size_t n = field.mu.values.size();
    for (size_t i = 0; i < n; ++i) {
        const double sigma = field.sigma.values[i];
        if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
        const double r = clamp_sdf(target.values.values[i], cfg.delta) -
                         clamp_sdf(field.mu.values[i], cfg.delta);
        sum += 0.5 * (r * r / (sigma * sigma) + std::log(sigma * sigma));
    }
    return sum;
}

double regr_nll_loss(const ProbabilisticCurve& curve, const LayerCurve& gt) {
    if (curve.mu.size() != gt.size()) throw std::invalid_argument("curve length mismatch");
    double sum = 0.0;
    for (size_t x = 0; x < gt.size(); ++x)
        sum += nll_gaussian_pixel(curve.mu[x], curve.sigma[x], gt[x]);
    return sum;
}

double interpolate_column(const ScalarField& field, int x, double y) {
    const int h = field.height;
    if (y <= 0.0) return field.at(x, 0);
    if (y >= h - 1.0) return field.at(x, h - 1);
    const int y0 = static_cast<int>(std::floor(y));
    const double t = y - y0;
    return (1.0 - t) * field.at(x, y0) + t * field.at(x, y0 + 1);
}

ProbabilisticCurve propagate_uncertainty(const ProbabilisticField& field,
                                         const ExtractionConfig& cfg) {
    require_same_shape(field.mu, field.sigma);
    SignedDistanceField mean_field;
    mean_field.values = field.mu;
    const ExtractedCurve extracted = extract(mean_field, cfg);

    const int w = field.mu.width;
    ProbabilisticCurve out;
    out.mu.assign(w, 0.0);
    out.sigma.assign(w, 0.0);
    out.missing.assign(w, 0);
    for (int x = 0; x < w; ++x) {
        out.mu[x] = extracted.curve[x];
        if (extracted.missing[x] && cfg.mode == ExtractionMode::zero_crossing) {
            out.missing[x] = 1;
            out.sigma[x] = std::numeric_limits<double>::infinity();
        } else {
            out.missing[x] = extracted.missing[x];
            out.sigma[x] = interpolate_column(field.sigma, x, extracted.curve[x]);
        }
    }
    return out;
}

void save_probabilistic_curve(const ProbabilisticCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open curve CSV for writing: " + path);
    out << "x,mu,sigma,flag\n";
    for (size_t x = 0; x < curve.mu.size(); ++x)
        out << x << "," << format_double(curve.mu[x]) << "," << format_double(curve.sigma[x])
            << "," << static_cast<int>(curve.missing[x]) << "\n";
    if (!out) throw std::runtime_error("curve CSV write failed: " + path);
}

ProbabilisticCurve load_probabilistic_curve(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open curve CSV: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("x,mu,sigma,flag", 0) != 0)
        throw std::runtime_error("bad probabilistic curve header: " + path);
    ProbabilisticCurve out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        double xv, mu, sigma;
        int flag;
        char c1, c2, c3;
        std::istringstream row(line);
        if (line.find("inf") != std::string::npos) {
            // parse manually: x,mu,inf,flag
            const size_t p1 = line.find(','), p2 = line.find(',', p1 + 1),
                         p3 = line.find(',', p2 + 1);
            mu = std::stod(line.substr(p1 + 1, p2 - p1 - 1));
            sigma = std::numeric_limits<double>::infinity();
            flag = std::stoi(line.substr(p3 + 1));
        } else if (row >> xv >> c1 >> mu >> c2 >> sigma >> c3 >> flag) {
            (void)c1;
        } else {
            throw std::runtime_error("bad probabilistic curve row: " + path);
        }
        out.mu.push_back(mu);
        out.sigma.push_back(sigma);
        out.missing.push_back(static_cast<uint8_t>(flag));
    }
    return out;
}

}  // namespace osk
