#pragma once

// Metrics and reports: per-layer mean absolute error over a corpus, and
// the clean-vs-corrupted per-A-scan variance experiment.

#include "osk/artifacts.hpp"
#include "osk/grid.hpp"
#include "osk/prob.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace osk {

// Mean absolute vertical error in pixels over valid columns. Columns
// flagged in `missing` are excluded and tallied separately. Throws when
// every column is flagged or lengths differ.
struct MaeResult {
    double mae = 0.0;
    int excluded_columns = 0;
};
MaeResult mae(const LayerCurve& pred, const LayerCurve& gt,
              const std::vector<uint8_t>* missing = nullptr);

struct MaeReport {
    std::vector<std::string> layer_labels;
    std::vector<double> layer_mean;  // across scans
    std::vector<double> layer_sd;    // population sd across scans
    double aggregate = 0.0;          // unweighted mean of layer means
    long excluded_columns = 0;

    std::string to_csv() const;
    std::string to_text() const;
    static MaeReport from_csv(const std::string& csv);
};

// Per-scan predictions and ground truth, aligned; flags optional
// per scan per layer.
MaeReport mae_corpus(const std::vector<MultiLayerCurve>& preds,
                     const std::vector<MultiLayerCurve>& gts,
                     const std::vector<std::vector<std::vector<uint8_t>>>* flags = nullptr);

// Mean of sigma(x)^2 over the region's unflagged columns.
double region_variance(const ProbabilisticCurve& curve, const ColumnRegion& region);

// Per noise kind: mean per-A-scan variance on clean and corrupted
// regions, and their ratio. The control row re-runs the pipeline with
// no corruption applied.
struct VarianceReport {
    struct Row {
        std::string label;
        double clean_variance = 0.0;
        double corrupted_variance = 0.0;
        double ratio = 0.0;
    };
    std::vector<Row> rows;

    std::string to_csv() const;
    std::string to_text() const;
};

// Model adapter: predicts per-layer probabilistic contours for a scan.
using CurvePredictor = std::function<std::vector<ProbabilisticCurve>(const BScan&)>;

struct UncertaintyExperimentConfig {
    int regions_per_scan = 10;
    int region_width = 8;  // X/8 at the default scan width
    int motion_max_shift = 6;
    uint64_t seed = 99;
};

// For each noise kind and each sampled region: predict on the clean
// scan and on the region-corrupted scan, measure region variance on the
// same columns, aggregate over the corpus.
VarianceReport uncertainty_experiment(const CurvePredictor& predictor,
                                      const std::vector<BScan>& scans,
                                      const UncertaintyExperimentConfig& cfg);

}  // namespace osk
