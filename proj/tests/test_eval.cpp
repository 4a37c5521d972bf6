#include "osk/eval.hpp"
#include "osk/phantom.hpp"
#include "osk/rng.hpp"

#include "doctest.h"

#include <cmath>

using namespace osk;

namespace {

LayerCurve curve_of(std::initializer_list<double> v) {
    LayerCurve c;
    c.y = v;
    return c;
}

}  // namespace

TEST_CASE("mae basics") {
    const LayerCurve gt = curve_of({1, 2, 3, 4});
    CHECK(mae(gt, gt).mae == 0.0);

    LayerCurve off = gt;
    for (auto& v : off.y) v += 2.0;
    CHECK(mae(off, gt).mae == 2.0);

    Rng rng(1);
    LayerCurve a, b;
    for (int i = 0; i < 50; ++i) {
        a.y.push_back(rng.uniform(0.0, 60.0));
        b.y.push_back(rng.uniform(0.0, 60.0));
    }
    double expected = 0.0;
    for (int i = 0; i < 50; ++i) expected += std::abs(a[size_t(i)] - b[size_t(i)]);
    CHECK(mae(a, b).mae == doctest::Approx(expected / 50.0));
}

TEST_CASE("mae excludes flagged columns and reports them") {
    const LayerCurve gt = curve_of({1, 2, 3, 4});
    LayerCurve pred = curve_of({1, 999, 3, 4});
    const std::vector<uint8_t> missing = {0, 1, 0, 0};
    const MaeResult r = mae(pred, gt, &missing);
    CHECK(r.mae == 0.0);
    CHECK(r.excluded_columns == 1);

    const std::vector<uint8_t> all = {1, 1, 1, 1};
    CHECK_THROWS(mae(pred, gt, &all));
    CHECK_THROWS(mae(curve_of({1.0}), gt));
}

TEST_CASE("mae is translation-detecting") {
    Rng rng(2);
    LayerCurve gt;
    for (int i = 0; i < 40; ++i) gt.y.push_back(rng.uniform(0.0, 50.0));
    for (double c : {-3.5, -0.25, 0.75, 4.0}) {
        LayerCurve moved = gt;
        for (auto& v : moved.y) v += c;
        CHECK(mae(moved, gt).mae == doctest::Approx(std::abs(c)));
    }
}

TEST_CASE("corpus report: single scan with per-layer offsets") {
    MultiLayerCurve gt;
    gt.labels = {"ILM", "RPE", "BM"};
    gt.layers.resize(3);
    for (int k = 0; k < 3; ++k)
        for (int x = 0; x < 8; ++x) gt.layers[size_t(k)].y.push_back(10.0 * (k + 1));
    MultiLayerCurve pred = gt;
    for (int k = 0; k < 3; ++k)
        for (auto& v : pred.layers[size_t(k)].y) v += double(k + 1);

    const MaeReport r = mae_corpus({pred}, {gt});
    CHECK(r.layer_mean[0] == doctest::Approx(1.0));
    CHECK(r.layer_mean[1] == doctest::Approx(2.0));
    CHECK(r.layer_mean[2] == doctest::Approx(3.0));
    CHECK(r.layer_sd[0] == 0.0);
    CHECK(r.aggregate == doctest::Approx(2.0));
}

TEST_CASE("corpus report: two-scan population sd") {
    MultiLayerCurve gt;
    gt.labels = {"ILM"};
    gt.layers.resize(1);
    gt.layers[0].y = {0, 0, 0};
    MultiLayerCurve p1 = gt, p2 = gt;
    for (auto& v : p1.layers[0].y) v += 1.0;  // MAE 1
    for (auto& v : p2.layers[0].y) v += 3.0;  // MAE 3

    const MaeReport r = mae_corpus({p1, p2}, {gt, gt});
    CHECK(r.layer_mean[0] == doctest::Approx(2.0));
    CHECK(r.layer_sd[0] == doctest::Approx(1.0));  // population sd of {1,3}
}

TEST_CASE("mae report CSV round trip") {
    MaeReport r;
    r.layer_labels = {"ILM", "RPE"};
    r.layer_mean = {0.123456789012345, 1.75};
    r.layer_sd = {0.5, 0.0625};
    r.aggregate = 0.5 * (r.layer_mean[0] + r.layer_mean[1]);
    r.excluded_columns = 7;
    const MaeReport back = MaeReport::from_csv(r.to_csv());
    CHECK(back.layer_labels == r.layer_labels);
    CHECK(back.layer_mean == r.layer_mean);
    CHECK(back.layer_sd == r.layer_sd);
    CHECK(back.aggregate == r.aggregate);
    CHECK(back.excluded_columns == r.excluded_columns);
    CHECK_FALSE(r.to_text().empty());
}

TEST_CASE("region variance") {
    ProbabilisticCurve c;
    for (int x = 0; x < 6; ++x) {
        c.mu.push_back(0.0);
        c.sigma.push_back(2.0);
        c.missing.push_back(0);
    }
    CHECK(region_variance(c, ColumnRegion{0, 6}) == doctest::Approx(4.0));

    c.sigma = {1.0, 2.0, 3.0, 9.0, 9.0, 9.0};
    CHECK(region_variance(c, ColumnRegion{0, 3}) == doctest::Approx((1.0 + 4.0 + 9.0) / 3.0));

    c.missing = {0, 1, 0, 0, 0, 0};
    CHECK(region_variance(c, ColumnRegion{0, 3}) == doctest::Approx((1.0 + 9.0) / 2.0));
    const std::vector<uint8_t> all_missing(6, 1);
    c.missing = all_missing;
    CHECK_THROWS(region_variance(c, ColumnRegion{0, 3}));
    c.missing = {0, 0, 0, 0, 0, 0};
    CHECK_THROWS(region_variance(c, ColumnRegion{4, 9}));
}

TEST_CASE("region variance is monotone under pointwise sigma increase") {
    Rng rng(3);
    ProbabilisticCurve a;
    for (int x = 0; x < 12; ++x) {
        a.mu.push_back(0.0);
        a.sigma.push_back(rng.uniform(0.5, 2.0));
        a.missing.push_back(0);
    }
    ProbabilisticCurve b = a;
    for (auto& s : b.sigma) s += rng.uniform(0.0, 1.0);
    CHECK(region_variance(b, ColumnRegion{0, 12}) >= region_variance(a, ColumnRegion{0, 12}));
}

TEST_CASE("uncertainty experiment with a synthetic contrast-driven predictor") {
    // predictor whose sigma grows with local intensity dispersion; the
    // experiment direction must reproduce without any trained model
    const auto samples = generate_phantoms(PhantomConfig{}, 6);
    std::vector<BScan> scans;
    for (const auto& s : samples) scans.push_back(s.scan);

    const CurvePredictor predictor = [](const BScan& scan) {
        std::vector<ProbabilisticCurve> out(1);
        ProbabilisticCurve& c = out[0];
        for (int x = 0; x < scan.width; ++x) {
            double mean = 0.0, var = 0.0;
            for (int y = 0; y < scan.height; ++y) mean += scan.at(x, y);
            mean /= scan.height;
            for (int y = 0; y < scan.height; ++y) {
                const double d = scan.at(x, y) - mean;
                var += d * d;
            }
            var /= scan.height;
            c.mu.push_back(scan.height / 2.0);
            c.sigma.push_back(0.05 + var);
            c.missing.push_back(0);
        }
        return out;
    };

    UncertaintyExperimentConfig cfg;
    cfg.regions_per_scan = 4;
    const VarianceReport report = uncertainty_experiment(predictor, scans, cfg);
    REQUIRE(report.rows.size() == 5);  // four kinds plus the control
    CHECK(report.rows[4].label == "control");
    CHECK(report.rows[4].ratio == doctest::Approx(1.0));
    for (const auto& row : report.rows) {
        CHECK(row.clean_variance >= 0.0);
        CHECK(row.corrupted_variance >= 0.0);
    }
    // speckle flips pixels to min/max, maximizing column dispersion
    CHECK(report.rows[2].label == "speckle");
    CHECK(report.rows[2].ratio > 1.0);
    CHECK_FALSE(report.to_csv().empty());
    CHECK_FALSE(report.to_text().empty());
}

TEST_CASE("experiment reruns identically for the same seed") {
    const auto samples = generate_phantoms(PhantomConfig{}, 2);
    std::vector<BScan> scans;
    for (const auto& s : samples) scans.push_back(s.scan);
    const CurvePredictor predictor = [](const BScan& scan) {
        std::vector<ProbabilisticCurve> out(1);
        for (int x = 0; x < scan.width; ++x) {
            out[0].mu.push_back(1.0);
            out[0].sigma.push_back(1.0 + scan.at(x, 0));
            out[0].missing.push_back(0);
        }
        return out;
    };
    UncertaintyExperimentConfig cfg;
    cfg.regions_per_scan = 3;
    const VarianceReport a = uncertainty_experiment(predictor, scans, cfg);
    const VarianceReport b = uncertainty_experiment(predictor, scans, cfg);
    CHECK(a.to_csv() == b.to_csv());
}
