#pragma once

// Core grid and curve types shared by every other component: B-scan
// intensity grids, per-column layer curves, scalar fields, and their
// file formats (binary PGM, "OSK1" flat binary, curve CSV).

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace osk {

// 2D intensity image, row-major, origin top-left, y increases downward.
// Intensities live in [0,1] once constructed through load_scan or a
// generator; stored as f32 to match the on-disk flat-binary format.
struct BScan {
    int width = 0;   // columns (A-scans)
    int height = 0;  // rows
    std::vector<float> intensities;  // size width*height, row-major

    float at(int x, int y) const { return intensities[static_cast<size_t>(y) * width + x]; }
    float& at(int x, int y) { return intensities[static_cast<size_t>(y) * width + x]; }
};

// 2D real-valued grid (distances, sigmas, probabilities), row-major.
struct ScalarField {
    int width = 0;
    int height = 0;
    std::vector<double> values;  // size width*height, row-major

    ScalarField() = default;
    ScalarField(int w, int h, double fill = 0.0)
        : width(w), height(h), values(static_cast<size_t>(w) * h, fill) {}

    double at(int x, int y) const { return values[static_cast<size_t>(y) * width + x]; }
    double& at(int x, int y) { return values[static_cast<size_t>(y) * width + x]; }
};

// Per-column vertical coordinate of one layer boundary, sub-pixel.
struct LayerCurve {
    std::vector<double> y;  // length = scan width, each value in [0, height-1]

    size_t size() const { return y.size(); }
    double operator[](size_t x) const { return y[x]; }
    double& operator[](size_t x) { return y[x]; }
};

// Ordered set of layer curves with labels (e.g. ILM, RPE, BM).
// `ordering_warning` is set when anatomical ordering is violated on
// import; phantom-generated ground truth must never trip it.
struct MultiLayerCurve {
    std::vector<LayerCurve> layers;
    std::vector<std::string> labels;
    bool ordering_warning = false;
};

enum class ScanFormat { graymap, flat_binary };

// Rescale intensities into [0,1]:
//  - data already within [0,1] is returned unchanged (so saved scans
//    reload bit-exact),
//  - otherwise min-max normalized, (v - min) / (max - min),
//  - a constant out-of-range image maps to all zeros.
void normalize_intensities(std::vector<float>& values);

// Load a scan from a binary PGM ("P5", maxval 255) or OSK1 flat-binary
// file. Graymap bytes are min-max normalized per normalize_intensities
// on the raw integer values; flat-binary floats pass through it as-is.
// Throws std::runtime_error on malformed headers, dimension mismatch,
// or non-finite values.
BScan load_scan(const std::string& path, ScanFormat format);

// Write a scan. Graymap quantizes to bytes round(v*255); flat binary is
// bit-exact. Throws std::runtime_error on I/O failure.
void save_scan(const BScan& scan, const std::string& path, ScanFormat format);

// Curve CSV: header row, first column "x", one column per layer label.
// Columns named "<label>_flag" attach per-column flags to the layer
// written just before them and are skipped as layers. Rejects ragged
// rows, non-numeric and NaN cells, and empty files. Sets
// ordering_warning (without failing) when labeled layers cross.
MultiLayerCurve load_curves(const std::string& path);

// Optional per-layer column flags (1 = column has no valid prediction).
void save_curves(const MultiLayerCurve& curves, const std::string& path,
                 const std::vector<std::vector<uint8_t>>* flags = nullptr);

// Float formatting used by every CSV/report writer: shortest form that
// parses back to the identical double, so reports round-trip exactly.
std::string format_double(double v);

}  // namespace osk
