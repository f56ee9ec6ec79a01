#pragma once

#include <string>
#include <vector>

#include "csod/tensor.hpp"

namespace csod {

// One evaluation pair: prediction in [0,1], strictly binary ground truth.
struct SaliencyPair {
    Tensor pred;  // (1,1,h,w)
    Tensor gt;    // (1,1,h,w), values in {0,1}

    SaliencyPair() = default;
    SaliencyPair(Tensor p, Tensor g);
    void validate() const;
};

struct PrPoint {
    double threshold;
    double precision;
    double recall;
};

struct MetricsReport {
    double max_f{0.0};
    double mae{0.0};
    double iou{0.0};
    double s_measure{0.0};
    std::vector<PrPoint> pr_curve;  // exactly 255 entries
};

inline constexpr int kPrThresholds = 255;
inline constexpr double kFBetaSquared = 0.3;

// Thresholds k/256 for k=1..255; predictions binarized as pred >= threshold.
// Per-pair precision/recall are averaged across pairs (macro). A pair with no
// predicted positives contributes `zero_pred_precision` (1 by convention); a
// pair with empty ground truth contributes recall 1.
std::vector<PrPoint> pr_curve(const std::vector<SaliencyPair>& pairs,
                              bool micro_average = false, double zero_pred_precision = 1.0);

double max_f_measure(const std::vector<SaliencyPair>& pairs, bool micro_average = false,
                     double zero_pred_precision = 1.0);

double mae(const std::vector<SaliencyPair>& pairs);

double iou(const std::vector<SaliencyPair>& pairs, double threshold = 0.5);

// Structure measure S = 0.5*S_object + 0.5*S_region (region split at the GT
// centroid, per-quadrant similarity weighted by area). Degenerate GT: all-zero
// gives 1 - mean(pred), all-one gives mean(pred). Result clamped to [0,1].
double s_measure(const std::vector<SaliencyPair>& pairs);

MetricsReport evaluate(const std::vector<SaliencyPair>& pairs);

void write_metrics_csv(const std::string& path, const std::string& dataset,
                       const MetricsReport& report);
void write_pr_csv(const std::string& path, const MetricsReport& report);

}  // namespace csod
