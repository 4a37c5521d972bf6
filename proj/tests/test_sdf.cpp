#include "osk/sdf.hpp"
#include "osk/boundary.hpp"
#include "osk/rng.hpp"

#include "doctest.h"
#include "support/oracles.hpp"

#include <cmath>

using namespace osk;

TEST_CASE("rasterize places one pixel per column at the rounded row") {
    LayerCurve c;
    c.y = {2.0, 2.0, 2.0};
    const Mask m = rasterize_curve(c, 3, 5);
    for (int x = 0; x < 3; ++x)
        for (int y = 0; y < 5; ++y) CHECK(int(m.at(x, y)) == (y == 2 ? 1 : 0));
}

TEST_CASE("rasterize rounds .5 half-up") {
    LayerCurve c;
    c.y = {1.5};
    const Mask m = rasterize_curve(c, 1, 4);
    CHECK(m.at(0, 2) == 1);
    CHECK(m.at(0, 1) == 0);
}

TEST_CASE("rasterize column sums are all one") {
    Rng rng(21);
    for (int rep = 0; rep < 50; ++rep) {
        const int w = 1 + int(rng.integer(40)), h = 2 + int(rng.integer(40));
        const LayerCurve c = oracle::random_rough_curve(rng, w, 0.0, h - 1.0);
        const Mask m = rasterize_curve(c, w, h);
        for (int x = 0; x < w; ++x) {
            int sum = 0;
            for (int y = 0; y < h; ++y) sum += m.at(x, y);
            CHECK(sum == 1);
        }
    }
}

TEST_CASE("rasterize rejects mismatched lengths and out-of-range values") {
    LayerCurve c;
    c.y = {1.0, 2.0};
    CHECK_THROWS(rasterize_curve(c, 3, 5));
    c.y = {9.0, 2.0};
    CHECK_THROWS(rasterize_curve(c, 2, 5));
}

TEST_CASE("exact distance of a single pixel") {
    Mask m;
    m.width = 3;
    m.height = 3;
    m.values = {0, 0, 0, 0, 1, 0, 0, 0, 0};
    const ScalarField d = unsigned_distance(m, DistanceMethod::exact_bruteforce);
    CHECK(d.at(1, 1) == 0.0);
    CHECK(d.at(0, 1) == 1.0);
    CHECK(d.at(1, 0) == 1.0);
    CHECK(d.at(0, 0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(d.at(2, 2) == doctest::Approx(std::sqrt(2.0)));
}

TEST_CASE("exact distance of a horizontal line is the row offset") {
    LayerCurve c;
    c.y = std::vector<double>(8, 3.0);
    const Mask m = rasterize_curve(c, 8, 10);
    const ScalarField d = unsigned_distance(m, DistanceMethod::exact_bruteforce);
    for (int y = 0; y < 10; ++y)
        for (int x = 0; x < 8; ++x) CHECK(d.at(x, y) == doctest::Approx(std::abs(y - 3)));
}

TEST_CASE("empty mask is rejected") {
    Mask m;
    m.width = 4;
    m.height = 4;
    m.values.assign(16, 0);
    CHECK_THROWS(unsigned_distance(m, DistanceMethod::exact_bruteforce));
    CHECK_THROWS(unsigned_distance(m, DistanceMethod::danielsson));
}

TEST_CASE("exact mode matches the independent oracle exactly") {
    Rng rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const int w = 8 + int(rng.integer(25)), h = 8 + int(rng.integer(25));
        const Mask m = oracle::random_sparse_mask(rng, w, h, 1 + int(rng.integer(10)));
        const ScalarField lib = unsigned_distance(m, DistanceMethod::exact_bruteforce);
        const ScalarField ref = oracle::brute_force_distance(m);
        for (size_t i = 0; i < lib.values.size(); ++i) CHECK(lib.values[i] == ref.values[i]);
    }
}

TEST_CASE("danielsson stays within 0.09 px of exact on curve masks") {
    Rng rng(31);
    double worst = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
        const LayerCurve c = oracle::random_rough_curve(rng, 64, 0.0, 63.0);
        const Mask m = rasterize_curve(c, 64, 64);
        const ScalarField approx = unsigned_distance(m, DistanceMethod::danielsson);
        const ScalarField exact = unsigned_distance(m, DistanceMethod::exact_bruteforce);
        for (size_t i = 0; i < approx.values.size(); ++i) {
            const double dev = approx.values[i] - exact.values[i];
            CHECK(dev >= 0.0);  // propagated vectors always reach a real pixel
            worst = std::max(worst, dev);
        }
    }
    CHECK(worst <= 0.09);
}

TEST_CASE("danielsson handles sparse masks within the same bound") {
    Rng rng(32);
    for (int rep = 0; rep < 60; ++rep) {
        const Mask m = oracle::random_sparse_mask(rng, 48, 48, 1 + int(rng.integer(6)));
        const ScalarField approx = unsigned_distance(m, DistanceMethod::danielsson);
        const ScalarField exact = oracle::brute_force_distance(m);
        for (size_t i = 0; i < approx.values.size(); ++i)
            CHECK(approx.values[i] - exact.values[i] <= 0.09);
    }
}

TEST_CASE("sign field on a flat curve equals the vertical construction") {
    LayerCurve c;
    c.y = std::vector<double>(1, 2.0);
    const Mask m = rasterize_curve(c, 1, 5);
    const ScalarField d = unsigned_distance(m, DistanceMethod::exact_bruteforce);
    const SignedDistanceField s = sign_field(d, c);
    const double expected[] = {2.0, 1.0, 0.0, -1.0, -2.0};
    for (int y = 0; y < 5; ++y) CHECK(s.values.at(0, y) == expected[y]);

    const SignedDistanceField v = vertical_signed_distance(c, 1, 5);
    for (int y = 0; y < 5; ++y) CHECK(s.values.at(0, y) == v.values.at(0, y));
}

TEST_CASE("sign matches the nearest-boundary-pixel rule on random monotone curves") {
    Rng rng(17);
    for (int rep = 0; rep < 20; ++rep) {
        const int w = 24, h = 24;
        // monotone curve, top-left to bottom-right
        LayerCurve c;
        c.y.resize(w);
        double acc = rng.uniform(2.0, 6.0);
        for (int x = 0; x < w; ++x) {
            c.y[size_t(x)] = std::min(acc, h - 1.0);
            acc += rng.uniform(0.0, 0.8);
        }
        const Mask m = rasterize_curve(c, w, h);
        const ScalarField d = unsigned_distance(m, DistanceMethod::exact_bruteforce);
        const SignedDistanceField s = sign_field(d, c);

        std::vector<int> rows(w);
        for (int x = 0; x < w; ++x) rows[size_t(x)] = round_half_up(c[x]);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const auto nb = oracle::nearest_boundary_pixel(rows, x, y);
                if (nb.dist2 == 0) {
                    CHECK(s.values.at(x, y) == 0.0);
                } else if (y != nb.y) {
                    // above the nearest boundary pixel: positive
                    const double expected_sign = c[size_t(nb.x)] > y ? 1.0 : -1.0;
                    CHECK(s.values.at(x, y) * expected_sign > 0.0);
                }
            }
    }
}

TEST_CASE("vertical field examples and properties") {
    LayerCurve c;
    c.y = {2.0};
    const SignedDistanceField f = vertical_signed_distance(c, 1, 5);
    const double expected[] = {2.0, 1.0, 0.0, -1.0, -2.0};
    for (int y = 0; y < 5; ++y) CHECK(f.values.at(0, y) == expected[y]);

    Rng rng(51);
    const LayerCurve r = oracle::random_rough_curve(rng, 16, 0.0, 15.0);
    const SignedDistanceField g = vertical_signed_distance(r, 16, 16);
    for (int x = 0; x < 16; ++x)
        for (int y = 0; y + 1 < 16; ++y)
            CHECK(g.values.at(x, y + 1) - g.values.at(x, y) ==
                  doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("zero crossing of the vertical field recovers the curve") {
    Rng rng(52);
    for (int rep = 0; rep < 50; ++rep) {
        const int w = 8, h = 16;
        const LayerCurve c = oracle::random_rough_curve(rng, w, 0.0, h - 1.0);
        const SignedDistanceField f = vertical_signed_distance(c, w, h);
        const ExtractedCurve e = zero_crossing(f, 0.0);
        for (int x = 0; x < w; ++x) {
            REQUIRE(e.missing[size_t(x)] == 0);
            CHECK(std::abs(e.curve[x] - c[x]) <= 1e-9);
        }
    }
}

TEST_CASE("reflecting a curve about the mid-line negates the vertical field") {
    Rng rng(53);
    const int w = 12, h = 17;
    const LayerCurve c = oracle::random_rough_curve(rng, w, 0.0, h - 1.0);
    LayerCurve reflected;
    reflected.y.resize(size_t(w));
    for (int x = 0; x < w; ++x) reflected.y[size_t(x)] = (h - 1.0) - c[x];
    const SignedDistanceField f = vertical_signed_distance(c, w, h);
    const SignedDistanceField g = vertical_signed_distance(reflected, w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            CHECK(g.values.at(x, y) == doctest::Approx(-f.values.at(x, h - 1 - y)));
}

TEST_CASE("eikonal report: vertical construction is exact") {
    Rng rng(54);
    for (int rep = 0; rep < 20; ++rep) {
        const LayerCurve c = oracle::random_rough_curve(rng, 10, 0.0, 19.0);
        const EikonalReport r = check_eikonal(vertical_signed_distance(c, 10, 20));
        // differences carry one rounding ulp, far below the 1e-6 gate
        CHECK(r.max_vertical_gradient_error <= 1e-12);
        CHECK(r.violating_fraction == 0.0);
    }
}

TEST_CASE("eikonal report: euclidean field of a flat curve is exact") {
    LayerCurve c;
    c.y = std::vector<double>(9, 4.0);
    const Mask m = rasterize_curve(c, 9, 12);
    const SignedDistanceField s =
        sign_field(unsigned_distance(m, DistanceMethod::exact_bruteforce), c);
    const EikonalReport r = check_eikonal(s);
    CHECK(r.max_vertical_gradient_error == 0.0);
    CHECK(r.violating_fraction == 0.0);
}

TEST_CASE("eikonal report: 45-degree euclidean geometry gives 1 - 1/sqrt(2)") {
    // the true Euclidean field of a 45-degree line drops by 1/sqrt(2)
    // per row, so every vertical pair shows the same analytic error
    const int w = 32, h = 32;
    SignedDistanceField f;
    f.values = ScalarField(w, h);
    f.construction = Construction::euclidean;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            f.values.at(x, y) = ((x + 4.0) - y) / std::sqrt(2.0);
    const EikonalReport r = check_eikonal(f);
    CHECK(r.max_vertical_gradient_error == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
    CHECK(r.mean_vertical_gradient_error == doctest::Approx(1.0 - 1.0 / std::sqrt(2.0)));
}

TEST_CASE("rasterized 45-degree euclidean field approaches the analytic slope away from the boundary") {
    const int w = 48, h = 48;
    LayerCurve c;
    c.y.resize(size_t(w));
    for (int x = 0; x < w; ++x) c.y[size_t(x)] = std::min(double(x), h - 1.0);
    const Mask m = rasterize_curve(c, w, h);
    const SignedDistanceField s =
        sign_field(unsigned_distance(m, DistanceMethod::exact_bruteforce), c);
    // interior pairs far from the boundary: |d(y+1)-d(y)| near 1/sqrt(2)
    const int x = 10;
    for (int y = 30; y < 40; ++y) {
        const double grad = std::abs(s.values.at(x, y + 1) - s.values.at(x, y));
        CHECK(grad == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(0.05));
    }
}
