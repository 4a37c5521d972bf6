#pragma once

// Synthetic scan corruptions: column shadowing, blinking stripes,
// binary speckle, and per-row motion displacement, optionally
// restricted to a column interval.

#include "osk/grid.hpp"

#include <optional>
#include <string>
#include <vector>

namespace osk {

enum class NoiseKind { shadow, blinking, speckle, motion };

std::string noise_name(NoiseKind kind);
NoiseKind noise_from_name(const std::string& name);

// Half-open column interval [x0, x1).
struct ColumnRegion {
    int x0 = 0;
    int x1 = 0;
};

struct NoiseConfig {
    NoiseKind kind = NoiseKind::speckle;
    std::optional<ColumnRegion> region;  // whole scan when absent
    // shadow: center drawn U[0, X], width U[X/4, 3X/4] unless pinned here
    std::optional<double> shadow_center;
    std::optional<double> shadow_width;
    bool shadow_raw_pdf = false;  // use the raw Gaussian pdf value instead of a
                                  // peak-1 profile (leaves wide shadows faint)
    std::optional<double> speckle_p;  // else drawn U[0.4, 0.6]
    int motion_max_shift = 6;         // px
    uint64_t seed = 1;
};

// Parameters actually drawn during one application, for sidecar records.
struct NoiseRecord {
    NoiseKind kind = NoiseKind::speckle;
    ColumnRegion region;
    double shadow_center = 0.0;
    double shadow_width = 0.0;
    double speckle_p = 0.0;
    std::vector<int> motion_shifts;  // one per row

    std::string to_text() const;
};

struct NoiseResult {
    BScan scan;
    NoiseRecord record;
};

// Pure function of (scan, cfg, cfg.seed); pixels outside cfg.region are
// bit-identical to the input and all outputs stay within [0, 1].
NoiseResult apply_noise(const BScan& scan, const NoiseConfig& cfg);

NoiseResult apply_shadow(const BScan& scan, const NoiseConfig& cfg);
NoiseResult apply_blinking(const BScan& scan, const NoiseConfig& cfg);
NoiseResult apply_speckle(const BScan& scan, const NoiseConfig& cfg);
NoiseResult apply_motion(const BScan& scan, const NoiseConfig& cfg);

}  // namespace osk
