#include "osk/boundary.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace osk {

ExtractedCurve zero_crossing(const SignedDistanceField& field, double level) {
    const int w = field.values.width, h = field.values.height;
    if (h < 2) throw std::invalid_argument("field too short for crossing detection");
    ExtractedCurve out;
    out.curve.y.assign(w, 0.0);
    out.missing.assign(w, 1);
    for (int x = 0; x < w; ++x) {
        double best_residual = 0.0;
        double best_y = 0.0;
        bool found = false;
        for (int y = 0; y + 1 < h; ++y) {
            const double a = field.values.at(x, y) - level;
            const double b = field.values.at(x, y + 1) - level;
            if (a >= 0.0 && b < 0.0) {
                const double residual = std::min(a, -b);
                if (!found || residual < best_residual) {
                    best_residual = residual;
                    best_y = y + a / (a - b);
                    found = true;
                }
            }
        }
        // exact hit on the last row has no sample below it to straddle
        if (field.values.at(x, h - 1) == level && (!found || best_residual > 0.0)) {
            best_y = h - 1;
            found = true;
        }
        if (found) {
            out.curve[x] = best_y;
            out.missing[x] = 0;
        }
    }
    return out;
}

LayerCurve soft_extract(const SignedDistanceField& field, const ExtractionConfig& cfg) {
    if (!(cfg.s_const > 0.0)) throw std::invalid_argument("s_const must be positive");
    const int w = field.values.width, h = field.values.height;
    LayerCurve out;
    out.y.assign(w, 0.0);
    for (int x = 0; x < w; ++x) {
        // factor out the column's smallest exponent so the dominant
        // weight is exp(0); the common scale cancels in the centroid and
        // a column far from the level cannot underflow to 0/0
        double zmin = std::numeric_limits<double>::infinity();
        for (int y = 0; y < h; ++y) {
            const double z = (field.values.at(x, y) - cfg.level) / cfg.s_const;
            zmin = std::min(zmin, z * z);
        }
        double wsum = 0.0, ysum = 0.0;
        for (int y = 0; y < h; ++y) {
            const double z = (field.values.at(x, y) - cfg.level) / cfg.s_const;
            const double weight = std::exp(-0.5 * (z * z - zmin));
            wsum += weight;
            ysum += y * weight;
        }
        out.y[x] = ysum / wsum;
    }
    return out;
}

LayerCurve pixelwise_extract(const PixelwiseMap& map) {
    const int w = map.probabilities.width, h = map.probabilities.height;
    if (w < 1 || h < 1) throw std::invalid_argument("empty probability map");
    LayerCurve out;
    out.y.assign(w, 0.0);
    for (int x = 0; x < w; ++x) {
        int best_row = 0;
        double best = map.probabilities.at(x, 0);
        for (int y = 1; y < h; ++y) {
            const double p = map.probabilities.at(x, y);
            if (p > best) {
                best = p;
                best_row = y;
            }
        }
        out.y[x] = best_row;
    }
    return out;
}

ExtractedCurve extract(const SignedDistanceField& field, const ExtractionConfig& cfg) {
    ExtractedCurve zc = zero_crossing(field, cfg.level);
    if (cfg.mode == ExtractionMode::soft) zc.curve = soft_extract(field, cfg);
    return zc;
}

}  // namespace osk
