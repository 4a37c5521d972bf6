#include "osk/sdf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace osk {

Mask rasterize_curve(const LayerCurve& curve, int width, int height) {
    if (static_cast<int>(curve.size()) != width)
        throw std::invalid_argument("curve length does not match grid width");
    Mask mask;
    mask.width = width;
    mask.height = height;
    mask.values.assign(static_cast<size_t>(width) * height, 0);
    for (int x = 0; x < width; ++x) {
        const double v = curve[x];
        if (!(v >= 0.0 && v <= height - 1.0))
            throw std::invalid_argument("curve value outside [0, height-1]");
        const int row = std::min(round_half_up(v), height - 1);
        mask.values[static_cast<size_t>(row) * width + x] = 1;
    }
    return mask;
}

namespace {

struct PixelList {
    std::vector<int> xs, ys;
};

PixelList mask_pixels(const Mask& mask) {
    PixelList p;
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(x, y)) {
                p.xs.push_back(x);
                p.ys.push_back(y);
            }
    return p;
}

ScalarField exact_distance(const Mask& mask, const PixelList& boundary) {
    ScalarField out(mask.width, mask.height);
    const size_t n = boundary.xs.size();
    for (int y = 0; y < mask.height; ++y) {
        for (int x = 0; x < mask.width; ++x) {
            long best = std::numeric_limits<long>::max();
            for (size_t i = 0; i < n; ++i) {
                const long dx = boundary.xs[i] - x;
                const long dy = boundary.ys[i] - y;
                best = std::min(best, dx * dx + dy * dy);
            }
            out.at(x, y) = std::sqrt(static_cast<double>(best));
        }
    }
    return out;
}

// 8SED: propagate offset vectors to the nearest boundary pixel in two
// vertical passes, each with a left and a right horizontal sweep.
class VectorMap {
public:
    VectorMap(int w, int h) : w_(w), h_(h), dx_(size_t(w) * h), dy_(size_t(w) * h) {}

    void set(int x, int y, int dx, int dy) {
        dx_[idx(x, y)] = dx;
        dy_[idx(x, y)] = dy;
    }
    long mag2(int x, int y) const {
        const long dx = dx_[idx(x, y)], dy = dy_[idx(x, y)];
        return dx * dx + dy * dy;
    }
    // candidate via neighbor (x+ox, y+oy); keep if strictly closer
    void relax(int x, int y, int ox, int oy) {
        const int nx = x + ox, ny = y + oy;
        if (nx < 0 || nx >= w_ || ny < 0 || ny >= h_) return;
        const long cdx = dx_[idx(nx, ny)] + ox;
        const long cdy = dy_[idx(nx, ny)] + oy;
        if (cdx * cdx + cdy * cdy < mag2(x, y)) {
            dx_[idx(x, y)] = static_cast<int>(cdx);
            dy_[idx(x, y)] = static_cast<int>(cdy);
        }
    }
    double dist(int x, int y) const { return std::sqrt(static_cast<double>(mag2(x, y))); }

private:
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * w_ + x; }
    int w_, h_;
    std::vector<int> dx_, dy_;
};

ScalarField danielsson_distance(const Mask& mask) {
    const int w = mask.width, h = mask.height;
    VectorMap vm(w, h);
    const int big = w + h + 2;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            if (mask.at(x, y))
                vm.set(x, y, 0, 0);
            else
                vm.set(x, y, big, big);

    auto sweep_horizontal = [&](int y) {
        for (int x = 1; x < w; ++x) vm.relax(x, y, -1, 0);
        for (int x = w - 2; x >= 0; --x) vm.relax(x, y, +1, 0);
    };

    // downward pass
    sweep_horizontal(0);
    for (int y = 1; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            vm.relax(x, y, 0, -1);
            vm.relax(x, y, -1, -1);
            vm.relax(x, y, +1, -1);
        }
        sweep_horizontal(y);
    }
    // upward pass
    sweep_horizontal(h - 1);
    for (int y = h - 2; y >= 0; --y) {
        for (int x = 0; x < w; ++x) {
            vm.relax(x, y, 0, +1);
            vm.relax(x, y, -1, +1);
            vm.relax(x, y, +1, +1);
        }
        sweep_horizontal(y);
    }

    ScalarField out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(x, y) = vm.dist(x, y);
    return out;
}

}  // namespace

ScalarField unsigned_distance(const Mask& mask, DistanceMethod method) {
    const PixelList boundary = mask_pixels(mask);
    if (boundary.xs.empty()) throw std::invalid_argument("mask has no set pixels");
    if (method == DistanceMethod::exact_bruteforce) return exact_distance(mask, boundary);
    return danielsson_distance(mask);
}

SignedDistanceField sign_field(const ScalarField& unsigned_field, const LayerCurve& curve) {
    const int w = unsigned_field.width, h = unsigned_field.height;
    if (static_cast<int>(curve.size()) != w)
        throw std::invalid_argument("curve length does not match field width");

    // boundary rows per column, as rasterize_curve placed them
    std::vector<int> row(w);
    for (int x = 0; x < w; ++x) row[x] = std::min(round_half_up(curve[x]), h - 1);

    SignedDistanceField out;
    out.values = ScalarField(w, h);
    out.construction = Construction::euclidean;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            long best = std::numeric_limits<long>::max();
            int best_row = 0;
            for (int bx = 0; bx < w; ++bx) {
                const long dx = bx - x;
                const long dy = row[bx] - y;
                const long d2 = dx * dx + dy * dy;
                if (d2 < best) {
                    best = d2;
                    best_row = row[bx];
                }
            }
            const double d = unsigned_field.at(x, y);
            // at or above the nearest boundary pixel: toward decreasing y
            out.values.at(x, y) = (best == 0) ? 0.0 : (y <= best_row ? d : -d);
        }
    }
    return out;
}

SignedDistanceField vertical_signed_distance(const LayerCurve& curve, int width, int height) {
    if (static_cast<int>(curve.size()) != width)
        throw std::invalid_argument("curve length does not match grid width");
    SignedDistanceField out;
    out.values = ScalarField(width, height);
    out.construction = Construction::vertical;
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) out.values.at(x, y) = curve[x] - y;
    return out;
}

EikonalReport check_eikonal(const SignedDistanceField& field) {
    const int w = field.values.width, h = field.values.height;
    if (h < 2) throw std::invalid_argument("field too short for vertical differences");
    EikonalReport report;
    double sum = 0.0;
    long violations = 0;
    const long pairs = static_cast<long>(w) * (h - 1);
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y + 1 < h; ++y) {
            const double grad = std::abs(field.values.at(x, y + 1) - field.values.at(x, y));
            const double err = std::abs(grad - 1.0);
            report.max_vertical_gradient_error = std::max(report.max_vertical_gradient_error, err);
            sum += err;
            if (err > 1e-6) ++violations;
        }
    }
    report.mean_vertical_gradient_error = sum / static_cast<double>(pairs);
    report.violating_fraction = static_cast<double>(violations) / static_cast<double>(pairs);
    return report;
}

}  // namespace osk
