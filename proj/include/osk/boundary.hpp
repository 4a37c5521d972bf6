#pragma once

// Contour extraction from fields: sub-pixel zero crossing, soft
// Gaussian-weighted extraction, and the per-column argmax baseline.

#include "osk/grid.hpp"
#include "osk/sdf.hpp"

#include <cstdint>
#include <vector>

namespace osk {

enum class ExtractionMode { zero_crossing, soft };

struct ExtractionConfig {
    double level = 0.0;    // field level defining the boundary
    double s_const = 2.0;  // Gaussian mask width, px
    ExtractionMode mode = ExtractionMode::zero_crossing;
};

// Per-layer probability grid produced by a pixel-wise segmentation head.
struct PixelwiseMap {
    ScalarField probabilities;  // values in [0,1]
};

// Curve plus per-column missing flags (1 = no crossing found).
struct ExtractedCurve {
    LayerCurve curve;
    std::vector<uint8_t> missing;
};

// Per column, scan top to bottom for consecutive samples where d-level
// goes + -> - and interpolate linearly. An exact hit of the level on the
// last row counts as a crossing. With several transitions, the one whose
// bracketing samples sit closest to the level wins (smallest residual,
// tie topmost). Columns without a transition are flagged, with the curve
// value left at 0.
ExtractedCurve zero_crossing(const SignedDistanceField& field, double level = 0.0);

// Gaussian-weighted centroid of row indices over the full column,
// W(x,y) = exp(-((d-level)/s_const)^2 / 2), y* = sum(y W)/sum(W).
LayerCurve soft_extract(const SignedDistanceField& field, const ExtractionConfig& cfg);

// Per-column argmax row (integer-valued curve), ties take the topmost
// row.
LayerCurve pixelwise_extract(const PixelwiseMap& map);

// Dispatch on cfg.mode; missing flags always reflect zero_crossing
// existence so callers can tell degenerate columns apart in either mode.
ExtractedCurve extract(const SignedDistanceField& field, const ExtractionConfig& cfg);

}  // namespace osk
