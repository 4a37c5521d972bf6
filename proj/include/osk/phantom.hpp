#pragma once

// Synthetic B-scans with known multi-layer ground truth: smooth
// band-limited layer curves with enforced ordering, piecewise-constant
// band intensities, texture noise, and optional dome deformations.

#include "osk/train.hpp"

#include <string>
#include <vector>

namespace osk {

struct PhantomConfig {
    int width = 64;
    int height = 64;
    int n_layers = 3;
    int smoothness = 4;       // number of low-frequency harmonics per gap
    double min_gap = 4.0;     // px between consecutive layers
    double bump_rate = 0.3;   // probability of a dome deformation per scan
    double bump_amplitude_min = 3.0;
    double bump_amplitude_max = 8.0;
    double texture_noise_sd = 0.06;
    std::vector<double> intensity_levels = {0.06, 0.35, 0.85, 0.22};  // one per band
    uint64_t seed = 7;
};

// Deterministic function of (cfg, cfg.seed, n). Curves satisfy
// layer_k(x) + min_gap <= layer_{k+1}(x) for all x by construction.
// Throws std::invalid_argument when the requested gaps cannot fit.
std::vector<Sample> generate_phantoms(const PhantomConfig& cfg, int n);

// Directory layout: scan_%04d.pgm + scan_%04d.osk + curves_%04d.csv +
// manifest.txt (config echo + seed + count, no timestamps).
void export_corpus(const std::vector<Sample>& samples, const PhantomConfig& cfg,
                   const std::string& dir);

struct CorpusLoadResult {
    std::vector<Sample> samples;
    bool manifest_seed_mismatch = false;  // manifest seed differs from expected
};

// Reads .osk scans (bit-exact) with .pgm fallback. When expected_seed is
// nonzero and the manifest disagrees, the mismatch flag is set.
CorpusLoadResult import_corpus(const std::string& dir, uint64_t expected_seed = 0);

}  // namespace osk
