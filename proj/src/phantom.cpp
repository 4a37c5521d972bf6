#include "osk/phantom.hpp"

#include "osk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace osk {

namespace {

constexpr double kTwoPi = 6.283185307179586;

// Non-negative smooth profile: mean level plus decaying random-phase
// harmonics, with the oscillation budget kept below the mean.
std::vector<double> smooth_profile(Rng& rng, int width, int harmonics, double mean,
                                   double wiggle) {
    std::vector<double> out(size_t(width), mean);
    if (harmonics < 1 || wiggle <= 0.0) return out;
    double budget = wiggle;
    for (int h = 1; h <= harmonics; ++h) {
        const double amp = rng.uniform(0.0, budget / h);
        const double phase = rng.uniform(0.0, kTwoPi);
        for (int x = 0; x < width; ++x)
            out[size_t(x)] += amp * std::sin(kTwoPi * h * x / width + phase);
        budget -= amp;  // total oscillation stays <= wiggle
        if (budget <= 0.0) break;
    }
    return out;
}

}  // namespace

std::vector<Sample> generate_phantoms(const PhantomConfig& cfg, int n) {
    if (cfg.width < 4 || cfg.height < 4 || cfg.n_layers < 1)
        throw std::invalid_argument("bad phantom geometry");
    const double margin = 2.0;
    if (2.0 * margin + cfg.n_layers * cfg.min_gap >= cfg.height)
        throw std::invalid_argument("min gaps do not fit the scan height");
    if (static_cast<int>(cfg.intensity_levels.size()) != cfg.n_layers + 1)
        throw std::invalid_argument("need one intensity level per band");

    Rng corpus_rng(cfg.seed);
    std::vector<Sample> samples;
    samples.reserve(size_t(n));

    const double usable = cfg.height - 2.0 * margin;
    // mean gap between consecutive curves (and to the top margin)
    const double mean_gap = usable / (cfg.n_layers + 1);
    const double wiggle = std::max(0.0, (mean_gap - cfg.min_gap) * 0.8);

    for (int s = 0; s < n; ++s) {
        Rng rng = corpus_rng.fork(uint64_t(s));
        Sample sample;
        sample.scan.width = cfg.width;
        sample.scan.height = cfg.height;
        sample.scan.intensities.assign(size_t(cfg.width) * cfg.height, 0.0f);

        // cumulative-gap construction keeps ordering by design
        std::vector<std::vector<double>> curves;
        std::vector<double> level = smooth_profile(rng, cfg.width, cfg.smoothness,
                                                   margin + mean_gap, wiggle);
        curves.push_back(level);
        for (int k = 1; k < cfg.n_layers; ++k) {
            const std::vector<double> gap =
                smooth_profile(rng, cfg.width, cfg.smoothness, mean_gap, wiggle);
            std::vector<double> next(size_t(cfg.width));
            for (int x = 0; x < cfg.width; ++x)
                next[size_t(x)] = curves.back()[size_t(x)] + std::max(cfg.min_gap, gap[size_t(x)]);
            curves.push_back(std::move(next));
        }

        // dome deformation: lift everything above the deepest curve
        if (cfg.n_layers >= 2 && rng.bernoulli(cfg.bump_rate)) {
            const double amp = rng.uniform(cfg.bump_amplitude_min, cfg.bump_amplitude_max);
            const double center = rng.uniform(0.15 * cfg.width, 0.85 * cfg.width);
            const double width = rng.uniform(cfg.width / 16.0, cfg.width / 6.0);
            for (int k = 0; k < cfg.n_layers - 1; ++k)
                for (int x = 0; x < cfg.width; ++x) {
                    const double z = (x - center) / width;
                    curves[size_t(k)][size_t(x)] -= amp * std::exp(-0.5 * z * z);
                }
        }

        // clamp into the valid row range, preserving ordering and leaving
        // min_gap headroom for every layer still to come
        for (int k = 0; k < cfg.n_layers; ++k) {
            const double hi = cfg.height - 2.0 - (cfg.n_layers - 1 - k) * cfg.min_gap;
            for (int x = 0; x < cfg.width; ++x) {
                const double lo =
                    k == 0 ? 1.0 : curves[size_t(k - 1)][size_t(x)] + cfg.min_gap;
                curves[size_t(k)][size_t(x)] =
                    std::clamp(curves[size_t(k)][size_t(x)], lo, hi);
            }
        }

        // bands with sub-pixel blending at each boundary
        for (int y = 0; y < cfg.height; ++y) {
            for (int x = 0; x < cfg.width; ++x) {
                double v = cfg.intensity_levels[0];
                for (int k = 0; k < cfg.n_layers; ++k) {
                    const double c = curves[size_t(k)][size_t(x)];
                    const double below = cfg.intensity_levels[size_t(k + 1)];
                    if (y > c + 0.5) {
                        v = below;
                    } else if (y >= c - 0.5) {
                        const double frac = y - (c - 0.5);  // fraction inside the lower band
                        v = v * (1.0 - frac) + below * frac;
                    }
                }
                v += rng.normal(0.0, cfg.texture_noise_sd);
                sample.scan.at(x, y) = static_cast<float>(std::clamp(v, 0.0, 1.0));
            }
        }

        static const char* kDefaultLabels[] = {"ILM", "RPE", "BM"};
        for (int k = 0; k < cfg.n_layers; ++k) {
            LayerCurve lc;
            lc.y = curves[size_t(k)];
            sample.curves.layers.push_back(std::move(lc));
            sample.curves.labels.push_back(k < 3 ? kDefaultLabels[k]
                                                 : "L" + std::to_string(k));
        }
        samples.push_back(std::move(sample));
    }
    return samples;
}

namespace {

std::string index_name(const char* stem, int i, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, i, ext);
    return buf;
}

}  // namespace

void export_corpus(const std::vector<Sample>& samples, const PhantomConfig& cfg,
                   const std::string& dir) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    for (size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        save_scan(s.scan, dir + "/" + index_name("scan", int(i), "pgm"), ScanFormat::graymap);
        save_scan(s.scan, dir + "/" + index_name("scan", int(i), "osk"),
                  ScanFormat::flat_binary);
        save_curves(s.curves, dir + "/" + index_name("curves", int(i), "csv"));
    }
    std::ofstream man(dir + "/manifest.txt");
    if (!man) throw std::runtime_error("cannot write corpus manifest in " + dir);
    man << "count = " << samples.size() << "\n"
        << "seed = " << cfg.seed << "\n"
        << "width = " << cfg.width << "\n"
        << "height = " << cfg.height << "\n"
        << "n_layers = " << cfg.n_layers << "\n"
        << "smoothness = " << cfg.smoothness << "\n"
        << "min_gap = " << format_double(cfg.min_gap) << "\n"
        << "bump_rate = " << format_double(cfg.bump_rate) << "\n"
        << "texture_noise_sd = " << format_double(cfg.texture_noise_sd) << "\n";
}

CorpusLoadResult import_corpus(const std::string& dir, uint64_t expected_seed) {
    namespace fs = std::filesystem;
    CorpusLoadResult result;
    if (!fs::exists(dir)) throw std::runtime_error("corpus directory missing: " + dir);

    uint64_t manifest_seed = 0;
    bool have_seed = false;
    {
        std::ifstream man(dir + "/manifest.txt");
        std::string line;
        while (man && std::getline(man, line)) {
            if (line.rfind("seed = ", 0) == 0) {
                manifest_seed = std::stoull(line.substr(7));
                have_seed = true;
            }
        }
    }
    if (expected_seed != 0 && have_seed && manifest_seed != expected_seed)
        result.manifest_seed_mismatch = true;

    for (int i = 0;; ++i) {
        const std::string osk = dir + "/" + index_name("scan", i, "osk");
        const std::string pgm = dir + "/" + index_name("scan", i, "pgm");
        const std::string csv = dir + "/" + index_name("curves", i, "csv");
        const bool has_osk = fs::exists(osk);
        if (!has_osk && !fs::exists(pgm)) break;
        Sample s;
        s.scan = has_osk ? load_scan(osk, ScanFormat::flat_binary)
                         : load_scan(pgm, ScanFormat::graymap);
        s.curves = load_curves(csv);
        result.samples.push_back(std::move(s));
    }
    if (result.samples.empty()) throw std::runtime_error("no samples found in " + dir);
    return result;
}

}  // namespace osk
