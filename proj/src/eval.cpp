#include "osk/eval.hpp"

#include "osk/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace osk {

MaeResult mae(const LayerCurve& pred, const LayerCurve& gt,
              const std::vector<uint8_t>* missing) {
    if (pred.size() != gt.size()) throw std::invalid_argument("curve length mismatch");
    MaeResult out;
    double sum = 0.0;
    int valid = 0;
    for (size_t x = 0; x < gt.size(); ++x) {
        if (missing && (*missing)[x]) {
            ++out.excluded_columns;
            continue;
        }
        sum += std::abs(pred[x] - gt[x]);
        ++valid;
    }
    if (valid == 0) throw std::invalid_argument("all columns flagged, MAE undefined");
    out.mae = sum / valid;
    return out;
}

MaeReport mae_corpus(const std::vector<MultiLayerCurve>& preds,
                     const std::vector<MultiLayerCurve>& gts,
                     const std::vector<std::vector<std::vector<uint8_t>>>* flags) {
    if (preds.size() != gts.size() || preds.empty())
        throw std::invalid_argument("corpus size mismatch");
    const size_t n_layers = gts[0].layers.size();

    MaeReport report;
    report.layer_labels = gts[0].labels;
    report.layer_mean.assign(n_layers, 0.0);
    report.layer_sd.assign(n_layers, 0.0);

    std::vector<std::vector<double>> per_scan(n_layers);
    for (size_t s = 0; s < gts.size(); ++s) {
        if (preds[s].layers.size() != n_layers)
            throw std::invalid_argument("layer count mismatch in scan " + std::to_string(s));
        for (size_t k = 0; k < n_layers; ++k) {
            const std::vector<uint8_t>* m = flags ? &(*flags)[s][k] : nullptr;
            const MaeResult r = mae(preds[s].layers[k], gts[s].layers[k], m);
            per_scan[k].push_back(r.mae);
            report.excluded_columns += r.excluded_columns;
        }
    }
    for (size_t k = 0; k < n_layers; ++k) {
        double mean = 0.0;
        for (double v : per_scan[k]) mean += v;
        mean /= double(per_scan[k].size());
        double var = 0.0;
        for (double v : per_scan[k]) var += (v - mean) * (v - mean);
        report.layer_mean[k] = mean;
        report.layer_sd[k] = std::sqrt(var / double(per_scan[k].size()));
        report.aggregate += mean;
    }
    report.aggregate /= double(n_layers);
    return report;
}

std::string MaeReport::to_csv() const {
    std::ostringstream out;
    out << "layer,mae_mean,mae_sd\n";
    for (size_t k = 0; k < layer_labels.size(); ++k)
        out << layer_labels[k] << "," << format_double(layer_mean[k]) << ","
            << format_double(layer_sd[k]) << "\n";
    out << "Avg," << format_double(aggregate) << ",\n";
    out << "# excluded_columns," << excluded_columns << ",\n";
    return out.str();
}

std::string MaeReport::to_text() const {
    std::ostringstream out;
    out << "layer      MAE (px)   sd\n";
    char buf[96];
    for (size_t k = 0; k < layer_labels.size(); ++k) {
        std::snprintf(buf, sizeof(buf), "%-9s  %8.4f   %8.4f\n", layer_labels[k].c_str(),
                      layer_mean[k], layer_sd[k]);
        out << buf;
    }
    std::snprintf(buf, sizeof(buf), "%-9s  %8.4f\n", "Avg.", aggregate);
    out << buf;
    out << "excluded columns: " << excluded_columns << "\n";
    out << "(sd is the population sd across scans)\n";
    return out.str();
}

MaeReport MaeReport::from_csv(const std::string& csv) {
    MaeReport report;
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) || line != "layer,mae_mean,mae_sd")
        throw std::runtime_error("bad MAE report header");
    double agg_sum = 0.0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const size_t c1 = line.find(','), c2 = line.find(',', c1 + 1);
        const std::string label = line.substr(0, c1);
        const std::string v1 = line.substr(c1 + 1, c2 - c1 - 1);
        const std::string v2 = line.substr(c2 + 1);
        if (label == "Avg") {
            report.aggregate = std::stod(v1);
        } else if (label == "# excluded_columns") {
            report.excluded_columns = std::stol(v1);
        } else {
            report.layer_labels.push_back(label);
            report.layer_mean.push_back(std::stod(v1));
            report.layer_sd.push_back(std::stod(v2));
            agg_sum += report.layer_mean.back();
        }
    }
    return report;
}

double region_variance(const ProbabilisticCurve& curve, const ColumnRegion& region) {
    if (region.x0 < 0 || region.x1 > static_cast<int>(curve.mu.size()) || region.x0 >= region.x1)
        throw std::invalid_argument("region outside curve");
    double sum = 0.0;
    int valid = 0;
    for (int x = region.x0; x < region.x1; ++x) {
        if (curve.missing[size_t(x)]) continue;
        sum += curve.sigma[size_t(x)] * curve.sigma[size_t(x)];
        ++valid;
    }
    if (valid == 0) throw std::invalid_argument("region has no valid columns");
    return sum / valid;
}

VarianceReport uncertainty_experiment(const CurvePredictor& predictor,
                                      const std::vector<BScan>& scans,
                                      const UncertaintyExperimentConfig& cfg) {
    if (scans.empty()) throw std::invalid_argument("no scans for the experiment");
    const NoiseKind kinds[] = {NoiseKind::shadow, NoiseKind::blinking, NoiseKind::speckle,
                               NoiseKind::motion};

    VarianceReport report;
    Rng rng(cfg.seed);

    struct Acc {
        double clean = 0.0, corrupted = 0.0;
        long n = 0;
    };
    Acc control;
    Acc per_kind[4];

    for (size_t s = 0; s < scans.size(); ++s) {
        const BScan& scan = scans[s];
        const std::vector<ProbabilisticCurve> clean_curves = predictor(scan);
        for (int r = 0; r < cfg.regions_per_scan; ++r) {
            const int width = std::min(cfg.region_width, scan.width);
            const int x0 = static_cast<int>(rng.integer(uint64_t(scan.width - width + 1)));
            const ColumnRegion region{x0, x0 + width};
            const uint64_t region_seed = rng.fork(uint64_t(r)).integer(uint64_t(1) << 62) + 1;

            double clean_var = 0.0;
            bool clean_ok = true;
            {
                double sum = 0.0;
                int n = 0;
                for (const auto& c : clean_curves) {
                    try {
                        sum += region_variance(c, region);
                        ++n;
                    } catch (const std::invalid_argument&) {
                        clean_ok = false;
                    }
                }
                if (n == 0) clean_ok = false;
                if (clean_ok) clean_var = sum / n;
            }
            if (!clean_ok) continue;

            // control: identical pipeline, no corruption applied
            {
                const std::vector<ProbabilisticCurve> again = predictor(scan);
                double sum = 0.0;
                int n = 0;
                for (const auto& c : again) {
                    sum += region_variance(c, region);
                    ++n;
                }
                control.clean += clean_var;
                control.corrupted += sum / n;
                control.n += 1;
            }

            for (int ki = 0; ki < 4; ++ki) {
                NoiseConfig ncfg;
                ncfg.kind = kinds[ki];
                ncfg.region = region;
                ncfg.motion_max_shift = cfg.motion_max_shift;
                ncfg.seed = region_seed + uint64_t(ki);
                const NoiseResult corrupted = apply_noise(scan, ncfg);
                const std::vector<ProbabilisticCurve> curves = predictor(corrupted.scan);
                double sum = 0.0;
                int n = 0;
                for (const auto& c : curves) {
                    try {
                        sum += region_variance(c, region);
                        ++n;
                    } catch (const std::invalid_argument&) {
                    }
                }
                if (n == 0) continue;
                per_kind[ki].clean += clean_var;
                per_kind[ki].corrupted += sum / n;
                per_kind[ki].n += 1;
            }
        }
    }

    auto push_row = [&](const std::string& label, const Acc& acc) {
        VarianceReport::Row row;
        row.label = label;
        if (acc.n > 0) {
            row.clean_variance = acc.clean / double(acc.n);
            row.corrupted_variance = acc.corrupted / double(acc.n);
            row.ratio = row.corrupted_variance / row.clean_variance;
        }
        report.rows.push_back(row);
    };
    for (int ki = 0; ki < 4; ++ki) push_row(noise_name(kinds[ki]), per_kind[ki]);
    push_row("control", control);
    return report;
}

std::string VarianceReport::to_csv() const {
    std::ostringstream out;
    out << "noise,clean_variance,corrupted_variance,ratio\n";
    for (const auto& r : rows)
        out << r.label << "," << format_double(r.clean_variance) << ","
            << format_double(r.corrupted_variance) << "," << format_double(r.ratio) << "\n";
    return out.str();
}

std::string VarianceReport::to_text() const {
    std::ostringstream out;
    out << "noise      clean var   corrupt var   ratio\n";
    char buf[128];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%-9s  %10.5f  %12.5f  %6.3f\n", r.label.c_str(),
                      r.clean_variance, r.corrupted_variance, r.ratio);
        out << buf;
    }
    return out.str();
}

}  // namespace osk
