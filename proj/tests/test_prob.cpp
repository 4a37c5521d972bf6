#include "osk/prob.hpp"
#include "osk/rng.hpp"

#include "doctest.h"
#include "support/oracles.hpp"

#include <cmath>
#include <filesystem>

using namespace osk;

namespace {

constexpr double kHalfLn2Pi = 0.91893853320467274178;

ProbabilisticField random_prob_field(Rng& rng, int w, int h) {
    ProbabilisticField f;
    f.mu = ScalarField(w, h);
    f.sigma = ScalarField(w, h);
    for (auto& v : f.mu.values) v = rng.uniform(-40.0, 40.0);
    for (auto& v : f.sigma.values) v = rng.uniform(0.2, 4.0);
    return f;
}

SignedDistanceField random_target(Rng& rng, int w, int h) {
    SignedDistanceField t;
    t.values = ScalarField(w, h);
    for (auto& v : t.values.values) v = rng.uniform(-40.0, 40.0);
    return t;
}

}  // namespace

TEST_CASE("clamp definition") {
    CHECK(clamp_sdf(35.0, 30.0) == 30.0);
    CHECK(clamp_sdf(-35.0, 30.0) == -30.0);
    CHECK(clamp_sdf(5.0, 30.0) == 5.0);
}

TEST_CASE("per-pixel Gaussian NLL values") {
    CHECK(nll_gaussian_pixel(3.0, 1.0, 3.0) == doctest::Approx(kHalfLn2Pi).epsilon(1e-12));
    CHECK(nll_gaussian_pixel(5.0, 1.0, 3.0) ==
          doctest::Approx(2.0 + kHalfLn2Pi).epsilon(1e-12));
    // mu=0, target=1, sigma=2: (0.25 + ln 4 + ln 2pi)/2
    CHECK(nll_gaussian_pixel(0.0, 2.0, 1.0) ==
          doctest::Approx(1.7370857137646180512).epsilon(1e-14));
    CHECK_THROWS(nll_gaussian_pixel(0.0, 0.0, 1.0));
    CHECK_THROWS(nll_gaussian_pixel(0.0, -1.0, 1.0));
}

TEST_CASE("total NLL with unit sigma is half SSE plus the constant") {
    Rng rng(71);
    for (int rep = 0; rep < 20; ++rep) {
        const int w = 8, h = 8;
        ProbabilisticField f = random_prob_field(rng, w, h);
        for (auto& v : f.sigma.values) v = 1.0;
        const SignedDistanceField t = random_target(rng, w, h);
        double sse = 0.0;
        for (size_t i = 0; i < t.values.values.size(); ++i) {
            const double r = t.values.values[i] - f.mu.values[i];
            sse += r * r;
        }
        const double expected = 0.5 * sse + double(w * h) * kHalfLn2Pi;
        const double got = total_nll(f, t);
        CHECK(std::abs(got - expected) <= 1e-10 * std::abs(expected));
    }
}

TEST_CASE("total NLL equals the naive per-pixel loop") {
    Rng rng(72);
    const ProbabilisticField f = random_prob_field(rng, 8, 8);
    const SignedDistanceField t = random_target(rng, 8, 8);
    double expected = 0.0;
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) {
            const double r = t.values.at(x, y) - f.mu.at(x, y);
            const double s2 = f.sigma.at(x, y) * f.sigma.at(x, y);
            expected += 0.5 * (r * r / s2 + std::log(s2)) + kHalfLn2Pi;
        }
    CHECK(total_nll(f, t) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("clamped L1 examples") {
    ClampConfig cfg{30.0};
    SignedDistanceField t;
    t.values = ScalarField(1, 1, -100.0);
    ScalarField p(1, 1, 100.0);
    CHECK(clamped_l1_loss(p, t, cfg) == 60.0);

    t.values.at(0, 0) = 12.0;
    p.at(0, 0) = 12.0;
    CHECK(clamped_l1_loss(p, t, cfg) == 0.0);
}

TEST_CASE("clamped losses match loop oracles and clamp neutrality") {
    Rng rng(73);
    const ClampConfig cfg{30.0};
    for (int rep = 0; rep < 10; ++rep) {
        const ProbabilisticField f = random_prob_field(rng, 8, 8);
        const SignedDistanceField t = random_target(rng, 8, 8);

        double l1 = 0.0, nll = 0.0;
        for (size_t i = 0; i < t.values.values.size(); ++i) {
            const double ct = clamp_sdf(t.values.values[i], cfg.delta);
            const double cm = clamp_sdf(f.mu.values[i], cfg.delta);
            const double s = f.sigma.values[i];
            l1 += std::abs(ct - cm);
            nll += 0.5 * ((ct - cm) * (ct - cm) / (s * s) + std::log(s * s));
        }
        CHECK(clamped_l1_loss(f.mu, t, cfg) == doctest::Approx(l1).epsilon(1e-12));
        CHECK(clamped_nll_loss(f, t, cfg) == doctest::Approx(nll).epsilon(1e-12));
    }

    // when nothing saturates, the clamped forms equal the unclamped ones
    Rng rng2(74);
    ProbabilisticField f = random_prob_field(rng2, 6, 6);
    SignedDistanceField t = random_target(rng2, 6, 6);
    for (auto& v : f.mu.values) v *= 0.25;      // within +-10
    for (auto& v : t.values.values) v *= 0.25;
    const double n_px = 36.0;
    CHECK(clamped_nll_loss(f, t, ClampConfig{30.0}) ==
          doctest::Approx(total_nll(f, t) - n_px * kHalfLn2Pi).epsilon(1e-12));
    double plain_l1 = 0.0;
    for (size_t i = 0; i < t.values.values.size(); ++i)
        plain_l1 += std::abs(t.values.values[i] - f.mu.values[i]);
    CHECK(clamped_l1_loss(f.mu, t, ClampConfig{30.0}) == plain_l1);
}

TEST_CASE("clamped NLL single-pixel example") {
    ProbabilisticField f;
    f.mu = ScalarField(1, 1, 1.0);
    f.sigma = ScalarField(1, 1, 1.0);
    SignedDistanceField t;
    t.values = ScalarField(1, 1, 3.0);  // residual 2 after (no-op) clamping
    CHECK(clamped_nll_loss(f, t, ClampConfig{30.0}) == doctest::Approx(2.0));
    f.mu.at(0, 0) = 3.0;
    CHECK(clamped_nll_loss(f, t, ClampConfig{30.0}) == 0.0);
}

TEST_CASE("regression NLL examples and oracle") {
    ProbabilisticCurve c;
    c.mu = {1.0, 2.0, 3.0};
    c.sigma = {1.0, 1.0, 1.0};
    c.missing = {0, 0, 0};
    LayerCurve gt;
    gt.y = {1.0, 2.0, 3.0};
    CHECK(regr_nll_loss(c, gt) == doctest::Approx(3.0 * kHalfLn2Pi));

    gt.y = {1.0, 5.0, 3.0};  // one column off by 3 adds 4.5
    CHECK(regr_nll_loss(c, gt) == doctest::Approx(4.5 + 3.0 * kHalfLn2Pi));

    Rng rng(75);
    ProbabilisticCurve rc;
    LayerCurve rgt;
    for (int i = 0; i < 32; ++i) {
        rc.mu.push_back(rng.uniform(-10.0, 10.0));
        rc.sigma.push_back(rng.uniform(0.3, 3.0));
        rc.missing.push_back(0);
        rgt.y.push_back(rng.uniform(-10.0, 10.0));
    }
    double expected = 0.0;
    for (int i = 0; i < 32; ++i)
        expected += nll_gaussian_pixel(rc.mu[size_t(i)], rc.sigma[size_t(i)], rgt[size_t(i)]);
    CHECK(regr_nll_loss(rc, rgt) == doctest::Approx(expected).epsilon(1e-13));
}

TEST_CASE("NLL is monotone in |residual| and stationary at sigma = |residual|") {
    for (double r : {0.5, 1.0, 2.5}) {
        CHECK(nll_gaussian_pixel(0.0, 1.0, r + 0.1) > nll_gaussian_pixel(0.0, 1.0, r));
        // numerical derivative in sigma changes sign at sigma = r
        const double below = nll_gaussian_pixel(0.0, r - 1e-4, r);
        const double at = nll_gaussian_pixel(0.0, r, r);
        const double above = nll_gaussian_pixel(0.0, r + 1e-4, r);
        CHECK(below > at);
        CHECK(above > at);
    }
}

TEST_CASE("uncertainty propagation: constant sigma passes through exactly") {
    Rng rng(76);
    const int w = 8, h = 32;
    const LayerCurve c = oracle::random_rough_curve(rng, w, 2.0, h - 3.0);
    ProbabilisticField f;
    f.mu = vertical_signed_distance(c, w, h).values;
    f.sigma = ScalarField(w, h, 1.75);
    const ProbabilisticCurve got = propagate_uncertainty(f, ExtractionConfig{});
    for (int x = 0; x < w; ++x) {
        CHECK(got.missing[size_t(x)] == 0);
        CHECK(got.mu[size_t(x)] == doctest::Approx(c[size_t(x)]).epsilon(1e-12));
        CHECK(got.sigma[size_t(x)] == 1.75);
    }
}

TEST_CASE("uncertainty propagation: linear sigma is interpolated at the crossing") {
    const int w = 4, h = 16;
    LayerCurve c;
    c.y = {3.25, 7.5, 11.75, 2.0};
    ProbabilisticField f;
    f.mu = vertical_signed_distance(c, w, h).values;
    f.sigma = ScalarField(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) f.sigma.at(x, y) = 0.5 + 0.125 * y + 0.01 * x;
    const ProbabilisticCurve got = propagate_uncertainty(f, ExtractionConfig{});
    for (int x = 0; x < w; ++x) {
        const double expected = 0.5 + 0.125 * c[size_t(x)] + 0.01 * x;  // linear in y
        CHECK(got.sigma[size_t(x)] == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("uncertainty propagation: missing crossings get the sentinel") {
    ProbabilisticField f;
    f.mu = ScalarField(2, 6, 3.0);  // all positive, no crossing
    f.sigma = ScalarField(2, 6, 1.0);
    const ProbabilisticCurve got = propagate_uncertainty(f, ExtractionConfig{});
    for (int x = 0; x < 2; ++x) {
        CHECK(got.missing[size_t(x)] == 1);
        CHECK(std::isinf(got.sigma[size_t(x)]));
    }
}

TEST_CASE("probabilistic curve CSV round trip") {
    ProbabilisticCurve c;
    c.mu = {1.5, 2.25, 0.0};
    c.sigma = {0.5, 1.0, std::numeric_limits<double>::infinity()};
    c.missing = {0, 0, 1};
    const std::string path =
        (std::filesystem::temp_directory_path() / "osk_prob_curve.csv").string();
    save_probabilistic_curve(c, path);
    const ProbabilisticCurve r = load_probabilistic_curve(path);
    CHECK(r.mu == c.mu);
    CHECK(r.sigma[0] == c.sigma[0]);
    CHECK(std::isinf(r.sigma[2]));
    CHECK(r.missing == c.missing);
}
