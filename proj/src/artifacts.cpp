#include "osk/artifacts.hpp"

#include "osk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace osk {

namespace {

ColumnRegion resolve_region(const BScan& scan, const NoiseConfig& cfg) {
    ColumnRegion r = cfg.region.value_or(ColumnRegion{0, scan.width});
    if (r.x0 < 0 || r.x1 > scan.width || r.x0 >= r.x1)
        throw std::invalid_argument("noise region outside scan");
    return r;
}

float clamp01(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct ScanStats {
    double median = 0.0;
    double sd = 0.0;
    float min = 0.0f;
    float max = 0.0f;
};

ScanStats scan_statistics(const BScan& scan) {
    ScanStats st;
    std::vector<float> sorted(scan.intensities);
    std::sort(sorted.begin(), sorted.end());
    const size_t n = sorted.size();
    st.median = n % 2 ? sorted[n / 2] : 0.5 * (double(sorted[n / 2 - 1]) + sorted[n / 2]);
    st.min = sorted.front();
    st.max = sorted.back();
    double mean = 0.0;
    for (float v : sorted) mean += v;
    mean /= double(n);
    double var = 0.0;
    for (float v : sorted) var += (v - mean) * (v - mean);
    st.sd = std::sqrt(var / double(n));
    return st;
}

}  // namespace

std::string noise_name(NoiseKind kind) {
    switch (kind) {
        case NoiseKind::shadow: return "shadow";
        case NoiseKind::blinking: return "blinking";
        case NoiseKind::speckle: return "speckle";
        case NoiseKind::motion: return "motion";
    }
    return "?";
}

NoiseKind noise_from_name(const std::string& name) {
    if (name == "shadow") return NoiseKind::shadow;
    if (name == "blinking") return NoiseKind::blinking;
    if (name == "speckle") return NoiseKind::speckle;
    if (name == "motion") return NoiseKind::motion;
    throw std::invalid_argument("unknown noise kind: " + name);
}

NoiseResult apply_shadow(const BScan& scan, const NoiseConfig& cfg) {
    const ColumnRegion region = resolve_region(scan, cfg);
    Rng rng(cfg.seed);
    NoiseResult out{scan, {}};
    out.record.kind = NoiseKind::shadow;
    out.record.region = region;
    const double X = scan.width;
    const double center = cfg.shadow_center.value_or(rng.uniform(0.0, X));
    const double width = cfg.shadow_width.value_or(rng.uniform(X / 4.0, 3.0 * X / 4.0));
    out.record.shadow_center = center;
    out.record.shadow_width = width;
    const double pdf_scale =
        cfg.shadow_raw_pdf ? 1.0 / (width * std::sqrt(6.283185307179586)) : 1.0;
    for (int x = region.x0; x < region.x1; ++x) {
        const double z = (x - center) / width;
        const double attenuation = 1.0 - pdf_scale * std::exp(-0.5 * z * z);
        for (int y = 0; y < scan.height; ++y)
            out.scan.at(x, y) = clamp01(scan.at(x, y) * attenuation);
    }
    return out;
}

NoiseResult apply_blinking(const BScan& scan, const NoiseConfig& cfg) {
    const ColumnRegion region = resolve_region(scan, cfg);
    Rng rng(cfg.seed);
    NoiseResult out{scan, {}};
    out.record.kind = NoiseKind::blinking;
    out.record.region = region;
    const ScanStats st = scan_statistics(scan);
    for (int y = 0; y < scan.height; ++y)
        for (int x = region.x0; x < region.x1; ++x)
            out.scan.at(x, y) = clamp01(rng.normal(st.median, st.sd));
    return out;
}

NoiseResult apply_speckle(const BScan& scan, const NoiseConfig& cfg) {
    const ColumnRegion region = resolve_region(scan, cfg);
    Rng rng(cfg.seed);
    NoiseResult out{scan, {}};
    out.record.kind = NoiseKind::speckle;
    out.record.region = region;
    const double p = cfg.speckle_p.value_or(rng.uniform(0.4, 0.6));
    if (!(p >= 0.4 && p <= 0.6)) throw std::invalid_argument("speckle p outside [0.4, 0.6]");
    out.record.speckle_p = p;
    const ScanStats st = scan_statistics(scan);
    for (int y = 0; y < scan.height; ++y)
        for (int x = region.x0; x < region.x1; ++x)
            out.scan.at(x, y) = rng.bernoulli(p) ? st.max : st.min;
    return out;
}

NoiseResult apply_motion(const BScan& scan, const NoiseConfig& cfg) {
    const ColumnRegion region = resolve_region(scan, cfg);
    if (cfg.motion_max_shift < 0 || cfg.motion_max_shift >= scan.width)
        throw std::invalid_argument("motion shift must be within scan width");
    Rng rng(cfg.seed);
    NoiseResult out{scan, {}};
    out.record.kind = NoiseKind::motion;
    out.record.region = region;
    out.record.motion_shifts.reserve(size_t(scan.height));
    for (int y = 0; y < scan.height; ++y) {
        const int shift =
            static_cast<int>(rng.integer(-int64_t(cfg.motion_max_shift),
                                         int64_t(cfg.motion_max_shift)));
        out.record.motion_shifts.push_back(shift);
        if (shift == 0) continue;
        // shift the row segment, vacated cells replicate the segment edge
        for (int x = region.x0; x < region.x1; ++x) {
            const int src = std::clamp(x - shift, region.x0, region.x1 - 1);
            out.scan.at(x, y) = scan.at(src, y);
        }
    }
    return out;
}

NoiseResult apply_noise(const BScan& scan, const NoiseConfig& cfg) {
    switch (cfg.kind) {
        case NoiseKind::shadow: return apply_shadow(scan, cfg);
        case NoiseKind::blinking: return apply_blinking(scan, cfg);
        case NoiseKind::speckle: return apply_speckle(scan, cfg);
        case NoiseKind::motion: return apply_motion(scan, cfg);
    }
    throw std::invalid_argument("unknown noise kind");
}

std::string NoiseRecord::to_text() const {
    std::ostringstream out;
    out << "kind = " << noise_name(kind) << "\n";
    out << "region = " << region.x0 << ":" << region.x1 << "\n";
    switch (kind) {
        case NoiseKind::shadow:
            out << "center = " << format_double(shadow_center) << "\n";
            out << "width = " << format_double(shadow_width) << "\n";
            break;
        case NoiseKind::speckle:
            out << "p = " << format_double(speckle_p) << "\n";
            break;
        case NoiseKind::motion: {
            out << "shifts =";
            for (int s : motion_shifts) out << " " << s;
            out << "\n";
            break;
        }
        case NoiseKind::blinking:
            break;
    }
    return out.str();
}

}  // namespace osk
