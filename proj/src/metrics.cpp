#include "csod/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace csod {

namespace {

constexpr double kEps = 2.220446049250313e-16;

void require_nonempty(const std::vector<SaliencyPair>& pairs, const char* op) {
    check(!pairs.empty(), op, ": empty pair list");
}

}  // namespace

SaliencyPair::SaliencyPair(Tensor p, Tensor g) : pred(std::move(p)), gt(std::move(g)) {
    validate();
}

void SaliencyPair::validate() const {
    check(pred.n() == 1 && pred.c() == 1, "SaliencyPair: pred must be a single-channel map, got ",
          pred.shape().str());
    check(pred.shape() == gt.shape(), "SaliencyPair: pred ", pred.shape().str(), " and gt ",
          gt.shape().str(), " dimensions differ");
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        check(pred[i] >= 0.0 && pred[i] <= 1.0, "SaliencyPair: pred value ", pred[i],
              " outside [0,1]");
        check(gt[i] == 0.0 || gt[i] == 1.0, "SaliencyPair: gt value ", gt[i], " is not binary");
    }
}

std::vector<PrPoint> pr_curve(const std::vector<SaliencyPair>& pairs, bool micro_average,
                              double zero_pred_precision) {
    require_nonempty(pairs, "pr_curve");
    for (const auto& p : pairs) p.validate();
    std::vector<PrPoint> out(kPrThresholds);

    // One histogram pass per pair, then cumulative counts per threshold bin.
    // Bin b holds predictions in [b/256, (b+1)/256), so pixels with pred >= k/256
    // are exactly the bins b >= k.
    for (int k = 1; k <= kPrThresholds; ++k) {
        out[static_cast<std::size_t>(k - 1)] = PrPoint{static_cast<double>(k) / 256.0, 0.0, 0.0};
    }
    std::vector<double> prec_sum(kPrThresholds, 0.0), rec_sum(kPrThresholds, 0.0);
    std::vector<std::int64_t> tp_all(kPrThresholds, 0), pp_all(kPrThresholds, 0);
    std::int64_t gt_all = 0;

    std::vector<std::int64_t> pos_hist(257), tp_hist(257);
    for (const auto& pair : pairs) {
        std::fill(pos_hist.begin(), pos_hist.end(), 0);
        std::fill(tp_hist.begin(), tp_hist.end(), 0);
        std::int64_t gt_pos = 0;
        for (std::int64_t i = 0; i < pair.pred.size(); ++i) {
            int bin = static_cast<int>(std::floor(pair.pred[i] * 256.0));
            bin = std::clamp(bin, 0, 256);
            pos_hist[static_cast<std::size_t>(bin)]++;
            if (pair.gt[i] == 1.0) {
                gt_pos++;
                tp_hist[static_cast<std::size_t>(bin)]++;
            }
        }
        gt_all += gt_pos;
        std::int64_t pos = 0, tp = 0;
        // walk thresholds from high to low accumulating suffix counts
        std::vector<std::int64_t> pos_at(kPrThresholds + 1), tp_at(kPrThresholds + 1);
        for (int k = 256; k >= 1; --k) {
            pos += pos_hist[static_cast<std::size_t>(k)];
            tp += tp_hist[static_cast<std::size_t>(k)];
            if (k <= kPrThresholds) {
                pos_at[static_cast<std::size_t>(k)] = pos;
                tp_at[static_cast<std::size_t>(k)] = tp;
            }
        }
        for (int k = 1; k <= kPrThresholds; ++k) {
            const std::int64_t p = pos_at[static_cast<std::size_t>(k)];
            const std::int64_t t = tp_at[static_cast<std::size_t>(k)];
            prec_sum[static_cast<std::size_t>(k - 1)] +=
                p == 0 ? zero_pred_precision : static_cast<double>(t) / static_cast<double>(p);
            rec_sum[static_cast<std::size_t>(k - 1)] +=
                gt_pos == 0 ? 1.0 : static_cast<double>(t) / static_cast<double>(gt_pos);
            tp_all[static_cast<std::size_t>(k - 1)] += t;
            pp_all[static_cast<std::size_t>(k - 1)] += p;
        }
    }

    const double np = static_cast<double>(pairs.size());
    for (int k = 0; k < kPrThresholds; ++k) {
        if (micro_average) {
            const std::int64_t p = pp_all[static_cast<std::size_t>(k)];
            const std::int64_t t = tp_all[static_cast<std::size_t>(k)];
            out[static_cast<std::size_t>(k)].precision =
                p == 0 ? zero_pred_precision : static_cast<double>(t) / static_cast<double>(p);
            out[static_cast<std::size_t>(k)].recall =
                gt_all == 0 ? 1.0 : static_cast<double>(t) / static_cast<double>(gt_all);
        } else {
            out[static_cast<std::size_t>(k)].precision = prec_sum[static_cast<std::size_t>(k)] / np;
            out[static_cast<std::size_t>(k)].recall = rec_sum[static_cast<std::size_t>(k)] / np;
        }
    }
    return out;
}

double max_f_measure(const std::vector<SaliencyPair>& pairs, bool micro_average,
                     double zero_pred_precision) {
    auto curve = pr_curve(pairs, micro_average, zero_pred_precision);
    double best = 0.0;
    for (const auto& pt : curve) {
        const double denom = kFBetaSquared * pt.precision + pt.recall;
        const double f =
            denom == 0.0 ? 0.0 : (1.0 + kFBetaSquared) * pt.precision * pt.recall / denom;
        best = std::max(best, f);
    }
    return best;
}

double mae(const std::vector<SaliencyPair>& pairs) {
    require_nonempty(pairs, "mae");
    double total = 0.0;
    for (const auto& pair : pairs) {
        pair.validate();
        double acc = 0.0;
        for (std::int64_t i = 0; i < pair.pred.size(); ++i) {
            acc += std::abs(pair.pred[i] - pair.gt[i]);
        }
        total += acc / static_cast<double>(pair.pred.size());
    }
    return total / static_cast<double>(pairs.size());
}

double iou(const std::vector<SaliencyPair>& pairs, double threshold) {
    require_nonempty(pairs, "iou");
    double total = 0.0;
    for (const auto& pair : pairs) {
        pair.validate();
        std::int64_t inter = 0, uni = 0;
        for (std::int64_t i = 0; i < pair.pred.size(); ++i) {
            const bool p = pair.pred[i] >= threshold;
            const bool g = pair.gt[i] == 1.0;
            inter += p && g;
            uni += p || g;
        }
        total += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return total / static_cast<double>(pairs.size());
}

namespace {

// object-level similarity of the prediction values inside one GT region
double object_score(const std::vector<double>& vals) {
    if (vals.empty()) return 0.0;
    const double n = static_cast<double>(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    double sd = 0.0;
    if (vals.size() > 1) {
        double acc = 0.0;
        for (double v : vals) acc += (v - mean) * (v - mean);
        sd = std::sqrt(acc / (n - 1.0));
    }
    return 2.0 * mean / (mean * mean + 1.0 + sd + kEps);
}

double s_object(const SaliencyPair& pair) {
    std::vector<double> fg, bg;
    double gt_mean = 0.0;
    for (std::int64_t i = 0; i < pair.pred.size(); ++i) {
        if (pair.gt[i] == 1.0) {
            fg.push_back(pair.pred[i]);
            gt_mean += 1.0;
        } else {
            bg.push_back(1.0 - pair.pred[i]);
        }
    }
    gt_mean /= static_cast<double>(pair.pred.size());
    return gt_mean * object_score(fg) + (1.0 - gt_mean) * object_score(bg);
}

// similarity of one region; the ssim-style form from the structure-measure
// reference (variances normalized by N-1+eps)
double region_ssim(const double* pred, const double* gt, int row_stride, int x0, int y0,
                   int x1, int y1) {
    const std::int64_t n = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
    if (n <= 0) return 0.0;
    double mx = 0.0, my = 0.0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            mx += pred[y * row_stride + x];
            my += gt[y * row_stride + x];
        }
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sx = 0.0, sy = 0.0, sxy = 0.0;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const double dx = pred[y * row_stride + x] - mx;
            const double dy = gt[y * row_stride + x] - my;
            sx += dx * dx;
            sy += dy * dy;
            sxy += dx * dy;
        }
    }
    const double denom_n = static_cast<double>(n) - 1.0 + kEps;
    sx /= denom_n;
    sy /= denom_n;
    sxy /= denom_n;
    const double alpha = 4.0 * mx * my * sxy;
    const double beta = (mx * mx + my * my) * (sx + sy);
    if (alpha != 0.0) return alpha / (beta + kEps);
    return beta == 0.0 ? 1.0 : 0.0;
}

double s_region(const SaliencyPair& pair) {
    const int h = pair.gt.h(), w = pair.gt.w();
    const double* gt = pair.gt.data();
    const double* pred = pair.pred.data();

    // GT centroid, 1-based with round-half-away-from-zero, as in the reference
    double total = 0.0, sx = 0.0, sy = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const double g = gt[y * w + x];
            total += g;
            sx += g * (x + 1);
            sy += g * (y + 1);
        }
    }
    int cx, cy;
    if (total == 0.0) {
        cx = static_cast<int>(std::round(w / 2.0));
        cy = static_cast<int>(std::round(h / 2.0));
    } else {
        cx = static_cast<int>(std::round(sx / total));
        cy = static_cast<int>(std::round(sy / total));
    }

    const double area = static_cast<double>(h) * w;
    const double w1 = (static_cast<double>(cx) * cy) / area;
    const double w2 = (static_cast<double>(w - cx) * cy) / area;
    const double w3 = (static_cast<double>(cx) * (h - cy)) / area;
    const double w4 = 1.0 - w1 - w2 - w3;

    const double q1 = region_ssim(pred, gt, w, 0, 0, cx, cy);
    const double q2 = region_ssim(pred, gt, w, cx, 0, w, cy);
    const double q3 = region_ssim(pred, gt, w, 0, cy, cx, h);
    const double q4 = region_ssim(pred, gt, w, cx, cy, w, h);
    return w1 * q1 + w2 * q2 + w3 * q3 + w4 * q4;
}

double s_measure_one(const SaliencyPair& pair) {
    double gt_mean = 0.0;
    for (std::int64_t i = 0; i < pair.gt.size(); ++i) gt_mean += pair.gt[i];
    gt_mean /= static_cast<double>(pair.gt.size());
    double pred_mean = 0.0;
    for (std::int64_t i = 0; i < pair.pred.size(); ++i) pred_mean += pair.pred[i];
    pred_mean /= static_cast<double>(pair.pred.size());

    double s;
    if (gt_mean == 0.0) {
        s = 1.0 - pred_mean;
    } else if (gt_mean == 1.0) {
        s = pred_mean;
    } else {
        s = 0.5 * s_object(pair) + 0.5 * s_region(pair);
    }
    return std::clamp(s, 0.0, 1.0);
}

}  // namespace

double s_measure(const std::vector<SaliencyPair>& pairs) {
    require_nonempty(pairs, "s_measure");
    double total = 0.0;
    for (const auto& pair : pairs) {
        pair.validate();
        total += s_measure_one(pair);
    }
    return total / static_cast<double>(pairs.size());
}

MetricsReport evaluate(const std::vector<SaliencyPair>& pairs) {
    MetricsReport r;
    r.pr_curve = pr_curve(pairs);
    double best = 0.0;
    for (const auto& pt : r.pr_curve) {
        const double denom = kFBetaSquared * pt.precision + pt.recall;
        const double f =
            denom == 0.0 ? 0.0 : (1.0 + kFBetaSquared) * pt.precision * pt.recall / denom;
        best = std::max(best, f);
    }
    r.max_f = best;
    r.mae = mae(pairs);
    r.iou = iou(pairs);
    r.s_measure = s_measure(pairs);
    return r;
}

void write_metrics_csv(const std::string& path, const std::string& dataset,
                       const MetricsReport& report) {
    std::ofstream f(path, std::ios::trunc);
    check<IoError>(f.good(), "cannot open metrics csv for writing: ", path);
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.12g,%.12g,%.12g,%.12g\n", dataset.c_str(),
                  report.max_f, report.mae, report.iou, report.s_measure);
    f << "dataset,maxf,mae,iou,smeasure\n" << buf;
    check<IoError>(f.good(), "failed writing metrics csv: ", path);
}

void write_pr_csv(const std::string& path, const MetricsReport& report) {
    std::ofstream f(path, std::ios::trunc);
    check<IoError>(f.good(), "cannot open pr csv for writing: ", path);
    f << "threshold,precision,recall\n";
    char buf[256];
    for (const auto& pt : report.pr_curve) {
        std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g\n", pt.threshold, pt.precision,
                      pt.recall);
        f << buf;
    }
    check<IoError>(f.good(), "failed writing pr csv: ", path);
}

}  // namespace csod
