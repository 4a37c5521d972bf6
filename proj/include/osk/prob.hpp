#pragma once

// Gaussian probabilistic fields and curves, the loss functions used for
// training, and the propagation of field uncertainty onto the contour.

#include "osk/boundary.hpp"
#include "osk/grid.hpp"
#include "osk/sdf.hpp"

#include <string>
#include <vector>

namespace osk {

// Paired mean / standard-deviation field; sigma > 0 everywhere.
struct ProbabilisticField {
    ScalarField mu;
    ScalarField sigma;
};

// Per-column mean and standard deviation of a contour location.
// Columns whose mean field has no crossing carry sigma = +inf and a
// missing flag.
struct ProbabilisticCurve {
    std::vector<double> mu;
    std::vector<double> sigma;
    std::vector<uint8_t> missing;
};

struct ClampConfig {
    double delta = 29.0;  // px, truncation radius around the boundary
};

inline double clamp_sdf(double v, double delta) {
    return std::min(delta, std::max(-delta, v));
}

// Gaussian negative log-likelihood at one pixel:
// (r^2/sigma^2 + ln sigma^2 + ln 2pi) / 2. Throws on sigma <= 0.
double nll_gaussian_pixel(double mu, double sigma, double target);

// Sum of nll_gaussian_pixel over all pixels, row-major order.
double total_nll(const ProbabilisticField& field, const SignedDistanceField& target);

// sum |clamp(target, delta) - clamp(pred, delta)|
double clamped_l1_loss(const ScalarField& pred, const SignedDistanceField& target,
                       const ClampConfig& cfg);

// Per pixel (clamped residual)^2 / sigma^2 / 2 + ln(sigma^2) / 2; the
// residual is clamped, sigma is not, and the 2pi constant is dropped.
double clamped_nll_loss(const ProbabilisticField& field, const SignedDistanceField& target,
                        const ClampConfig& cfg);

// Per-column Gaussian NLL of ground-truth coordinates, summed over x.
double regr_nll_loss(const ProbabilisticCurve& curve, const LayerCurve& gt);

// Extract the mean contour from the mu field per cfg, then read the
// sigma field at the extracted location (linear interpolation along y).
// Columns without a crossing get sigma = +inf and the missing flag.
ProbabilisticCurve propagate_uncertainty(const ProbabilisticField& field,
                                         const ExtractionConfig& cfg);

// Sample the field at integer x and real y, linear interpolation along
// y, clamped to the grid.
double interpolate_column(const ScalarField& field, int x, double y);

// CSV with columns x, mu, sigma, flag.
void save_probabilistic_curve(const ProbabilisticCurve& curve, const std::string& path);
ProbabilisticCurve load_probabilistic_curve(const std::string& path);

}  // namespace osk
