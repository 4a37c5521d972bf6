#pragma once

// Ground-truth signed distance field construction from layer curves,
// and the Eikonal check used to validate fields.

#include "osk/grid.hpp"

#include <cmath>
#include <cstdint>
#include <vector>

namespace osk {

enum class SignConvention { positive_above };
enum class Construction { euclidean, vertical };
enum class DistanceMethod { exact_bruteforce, danielsson };

struct SignedDistanceField {
    ScalarField values;  // pixels
    SignConvention sign_convention = SignConvention::positive_above;
    Construction construction = Construction::vertical;
};

// Vertical finite-difference deviation from |d(x,y+1) - d(x,y)| = 1.
struct EikonalReport {
    double max_vertical_gradient_error = 0.0;
    double mean_vertical_gradient_error = 0.0;
    double violating_fraction = 0.0;  // pairs with error > 1e-6
};

// Binary boundary mask, one byte per pixel, row-major.
struct Mask {
    int width = 0;
    int height = 0;
    std::vector<uint8_t> values;

    uint8_t at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
};

// One boundary pixel per column, at row round(y(x)); ties on .5 round
// half-up (toward larger row index). Throws std::invalid_argument on
// curve length mismatch or out-of-range curve values.
Mask rasterize_curve(const LayerCurve& curve, int width, int height);

// Distance from every pixel to the nearest set mask pixel.
// exact_bruteforce scans all boundary pixels; danielsson runs the
// 8-neighborhood two-pass vector propagation (error within 0.09 px of
// exact). Throws std::invalid_argument on an empty mask.
ScalarField unsigned_distance(const Mask& mask, DistanceMethod method);

// Attach signs to an unsigned field built from rasterize_curve(curve):
// positive at or above the nearest boundary pixel, negative below, zero
// on the boundary itself. Nearest boundary pixels are resolved by a
// deterministic scan (ties: leftmost column).
SignedDistanceField sign_field(const ScalarField& unsigned_field, const LayerCurve& curve);

// d(x,y) = curve(x) - y. Satisfies the vertical Eikonal property
// exactly and crosses zero at exactly y = curve(x) per column.
SignedDistanceField vertical_signed_distance(const LayerCurve& curve, int width, int height);

EikonalReport check_eikonal(const SignedDistanceField& field);

// Shared rounding rule for boundary rasterization (half-up).
inline int round_half_up(double v) { return static_cast<int>(std::floor(v + 0.5)); }

}  // namespace osk
