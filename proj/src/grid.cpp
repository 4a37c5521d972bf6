#include "osk/grid.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace osk {

namespace {

constexpr char kFlatMagic[4] = {'O', 'S', 'K', '1'};
constexpr uint32_t kDtypeF32 = 1;

[[noreturn]] void fail(const std::string& what, const std::string& path) {
    throw std::runtime_error(what + ": " + path);
}

uint32_t read_u32le(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void write_u32le(std::ostream& out, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

// PGM header tokens may be separated by whitespace and '#' comments.
int next_pgm_int(std::istream& in, const std::string& path) {
    int c = in.get();
    while (c != EOF && (std::isspace(c) || c == '#')) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        }
        c = in.get();
    }
    if (c == EOF || !std::isdigit(c)) fail("malformed graymap header", path);
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > std::numeric_limits<int>::max()) fail("graymap header value overflow", path);
        c = in.get();
    }
    return static_cast<int>(v);
}

BScan load_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open scan", path);
    char m0 = 0, m1 = 0;
    in.get(m0);
    in.get(m1);
    if (m0 != 'P' || m1 != '5') fail("malformed graymap header (expected P5)", path);
    const int w = next_pgm_int(in, path);
    const int h = next_pgm_int(in, path);
    const int maxval = next_pgm_int(in, path);
    if (w < 1 || h < 1) fail("graymap dimensions must be positive", path);
    if (maxval != 255) fail("graymap maxval must be 255", path);
    // exactly one whitespace byte separates header and raster
    std::vector<unsigned char> raw(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (in.gcount() != static_cast<std::streamsize>(raw.size()))
        fail("graymap raster truncated", path);

    BScan scan;
    scan.width = w;
    scan.height = h;
    scan.intensities.assign(raw.begin(), raw.end());
    normalize_intensities(scan.intensities);
    return scan;
}

BScan load_flat(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open scan", path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFlatMagic, 4) != 0) fail("bad flat-binary magic", path);
    const uint32_t w = read_u32le(in);
    const uint32_t h = read_u32le(in);
    const uint32_t dtype = read_u32le(in);
    if (!in || w == 0 || h == 0) fail("flat-binary dimensions must be positive", path);
    if (dtype != kDtypeF32) fail("unsupported flat-binary dtype", path);
    if (w > (1u << 20) || h > (1u << 20)) fail("flat-binary dimensions implausible", path);

    BScan scan;
    scan.width = static_cast<int>(w);
    scan.height = static_cast<int>(h);
    scan.intensities.resize(static_cast<size_t>(w) * h);
    in.read(reinterpret_cast<char*>(scan.intensities.data()),
            static_cast<std::streamsize>(scan.intensities.size() * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(scan.intensities.size() * sizeof(float)))
        fail("flat-binary payload truncated", path);
    for (float v : scan.intensities)
        if (!std::isfinite(v)) fail("non-finite intensity value", path);
    normalize_intensities(scan.intensities);
    return scan;
}

}  // namespace

void normalize_intensities(std::vector<float>& values) {
    if (values.empty()) return;
    float lo = values[0], hi = values[0];
    for (float v : values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    if (lo >= 0.0f && hi <= 1.0f) return;  // already normalized
    if (lo == hi) {
        std::fill(values.begin(), values.end(), 0.0f);
        return;
    }
    const float scale = 1.0f / (hi - lo);
    for (float& v : values) v = (v - lo) * scale;
}

BScan load_scan(const std::string& path, ScanFormat format) {
    return format == ScanFormat::graymap ? load_pgm(path) : load_flat(path);
}

void save_scan(const BScan& scan, const std::string& path, ScanFormat format) {
    if (path.empty()) throw std::runtime_error("empty scan path");
    if (scan.width < 1 || scan.height < 1) throw std::runtime_error("cannot save empty scan");
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot open scan for writing", path);
    if (format == ScanFormat::graymap) {
        out << "P5\n" << scan.width << " " << scan.height << "\n255\n";
        std::vector<unsigned char> raw(scan.intensities.size());
        for (size_t i = 0; i < raw.size(); ++i) {
            const float v = std::clamp(scan.intensities[i], 0.0f, 1.0f);
            raw[i] = static_cast<unsigned char>(std::lround(v * 255.0f));
        }
        out.write(reinterpret_cast<const char*>(raw.data()),
                  static_cast<std::streamsize>(raw.size()));
    } else {
        out.write(kFlatMagic, 4);
        write_u32le(out, static_cast<uint32_t>(scan.width));
        write_u32le(out, static_cast<uint32_t>(scan.height));
        write_u32le(out, kDtypeF32);
        out.write(reinterpret_cast<const char*>(scan.intensities.data()),
                  static_cast<std::streamsize>(scan.intensities.size() * sizeof(float)));
    }
    if (!out) fail("scan write failed", path);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    cells.push_back(cur);
    return cells;
}

double parse_cell(const std::string& cell, int row, const std::string& path) {
    if (cell == "inf" || cell == "+inf") return std::numeric_limits<double>::infinity();
    if (cell == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc() || ptr != end)
        throw std::runtime_error("non-numeric CSV cell '" + cell + "' in row " +
                                 std::to_string(row) + ": " + path);
    if (std::isnan(v))
        throw std::runtime_error("NaN CSV cell in row " + std::to_string(row) + ": " + path);
    return v;
}

bool is_flag_column(const std::string& label) {
    const std::string suffix = "_flag";
    return label.size() > suffix.size() &&
           label.compare(label.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

MultiLayerCurve load_curves(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open curve CSV", path);
    std::string header;
    if (!std::getline(in, header) || header.empty()) fail("empty curve CSV", path);
    const std::vector<std::string> cols = split_csv_line(header);
    if (cols.size() < 2 || cols[0] != "x") fail("curve CSV header must start with 'x'", path);

    MultiLayerCurve out;
    std::vector<int> layer_of_col(cols.size(), -1);  // -1 = skipped (x / flag columns)
    for (size_t c = 1; c < cols.size(); ++c) {
        if (is_flag_column(cols[c])) continue;
        layer_of_col[c] = static_cast<int>(out.layers.size());
        out.layers.emplace_back();
        out.labels.push_back(cols[c]);
    }
    if (out.layers.empty()) fail("curve CSV has no layer columns", path);

    std::string line;
    int row = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_csv_line(line);
        if (cells.size() != cols.size())
            throw std::runtime_error("ragged CSV row " + std::to_string(row) + ": " + path);
        for (size_t c = 1; c < cells.size(); ++c) {
            const double v = parse_cell(cells[c], row, path);
            if (layer_of_col[c] >= 0) out.layers[layer_of_col[c]].y.push_back(v);
        }
        ++row;
    }
    if (row == 0) fail("curve CSV has no data rows", path);

    for (size_t k = 1; k < out.layers.size(); ++k) {
        for (size_t x = 0; x < out.layers[k].size(); ++x) {
            if (out.layers[k][x] < out.layers[k - 1][x]) {
                out.ordering_warning = true;
                break;
            }
        }
        if (out.ordering_warning) break;
    }
    return out;
}

void save_curves(const MultiLayerCurve& curves, const std::string& path,
                 const std::vector<std::vector<uint8_t>>* flags) {
    if (curves.layers.empty()) throw std::runtime_error("no layers to save");
    std::ofstream out(path);
    if (!out) fail("cannot open curve CSV for writing", path);
    out << "x";
    for (size_t k = 0; k < curves.layers.size(); ++k) {
        out << "," << curves.labels[k];
        if (flags) out << "," << curves.labels[k] << "_flag";
    }
    out << "\n";
    const size_t n = curves.layers[0].size();
    for (size_t x = 0; x < n; ++x) {
        out << x;
        for (size_t k = 0; k < curves.layers.size(); ++k) {
            out << "," << format_double(curves.layers[k][x]);
            if (flags) out << "," << static_cast<int>((*flags)[k][x]);
        }
        out << "\n";
    }
    if (!out) fail("curve CSV write failed", path);
}

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    // shortest representation that round-trips
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

}  // namespace osk
