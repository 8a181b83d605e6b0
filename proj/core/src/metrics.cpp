#include "geofuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace geofuse {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : classes_(classes), counts_(classes * classes, 0) {
    if (classes == 0) throw std::invalid_argument("confusion matrix needs at least one class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::span<const std::size_t> truths,
                                 std::span<const std::size_t> predictions)
    : ConfusionMatrix(classes) {
    if (truths.size() != predictions.size()) {
        throw std::invalid_argument("truth and prediction counts differ");
    }
    for (std::size_t i = 0; i < truths.size(); ++i) add(truths[i], predictions[i]);
}

void ConfusionMatrix::add(std::size_t truth, std::size_t prediction, std::uint64_t count) {
    if (truth >= classes_ || prediction >= classes_) {
        throw std::out_of_range("label outside the confusion matrix");
    }
    counts_[truth * classes_ + prediction] += count;
    total_ += count;
}

std::uint64_t ConfusionMatrix::false_negatives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t p = 0; p < classes_; ++p)
        if (p != c) s += at(c, p);
    return s;
}

std::uint64_t ConfusionMatrix::false_positives(std::size_t c) const {
    std::uint64_t s = 0;
    for (std::size_t t = 0; t < classes_; ++t)
        if (t != c) s += at(t, c);
    return s;
}

std::uint64_t ConfusionMatrix::true_negatives(std::size_t c) const {
    return total_ - true_positives(c) - false_negatives(c) - false_positives(c);
}

MetricReport classification_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw std::invalid_argument("classification_metrics: empty confusion matrix");
    const std::size_t k = cm.classes();
    MetricReport r;
    std::uint64_t tp_sum = 0;
    std::uint64_t tp_fn_sum = 0;
    double p_sum = 0.0, r_sum = 0.0, s_sum = 0.0;

    auto ratio = [](std::uint64_t num, std::uint64_t den, bool& flagged) {
        if (den == 0) {
            flagged = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };

    for (std::size_t c = 0; c < k; ++c) {
        const auto tp = cm.true_positives(c);
        const auto fn = cm.false_negatives(c);
        const auto fp = cm.false_positives(c);
        const auto tn = cm.true_negatives(c);
        tp_sum += tp;
        tp_fn_sum += tp + fn;
        bool flagged = false;
        const double prec = ratio(tp, tp + fp, flagged);
        const double rec = ratio(tp, tp + fn, flagged);
        const double spec = ratio(tn, tn + fp, flagged);
        if (flagged) r.zero_division_classes.push_back(c);
        p_sum += prec;
        r_sum += rec;
        s_sum += spec;
        r.per_class_accuracy.push_back(rec);
    }
    r.accuracy = static_cast<double>(tp_sum) / static_cast<double>(tp_fn_sum);
    r.precision = p_sum / static_cast<double>(k);
    r.recall = r_sum / static_cast<double>(k);
    r.specificity = s_sum / static_cast<double>(k);
    r.f1 = (r.precision + r.recall) > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    return r;
}

double auc_binary(std::span<const double> positives, std::span<const double> negatives) {
    if (positives.empty() || negatives.empty()) {
        throw std::invalid_argument("auc needs at least one positive and one negative");
    }
    // Rank-sum over the pooled, sorted scores with mid-ranks for ties.
    struct Item {
        double score;
        bool positive;
    };
    std::vector<Item> items;
    items.reserve(positives.size() + negatives.size());
    for (double s : positives) items.push_back({s, true});
    for (double s : negatives) items.push_back({s, false});
    std::sort(items.begin(), items.end(), [](const Item& a, const Item& b) { return a.score < b.score; });

    double rank_sum = 0.0;
    std::size_t i = 0;
    while (i < items.size()) {
        std::size_t j = i;
        while (j < items.size() && items[j].score == items[i].score) ++j;
        const double mid = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1..j
        for (std::size_t t = i; t < j; ++t)
            if (items[t].positive) rank_sum += mid;
        i = j;
    }
    const double np = static_cast<double>(positives.size());
    const double nn = static_cast<double>(negatives.size());
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

AucResult auc_roc(std::span<const std::vector<double>> scores, std::span<const std::size_t> truths) {
    if (scores.size() != truths.size()) throw std::invalid_argument("auc_roc: score/truth count mismatch");
    if (scores.empty()) throw std::invalid_argument("auc_roc: no samples");
    const std::size_t k = scores.front().size();
    AucResult out;
    out.per_class.assign(k, std::numeric_limits<double>::quiet_NaN());
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t c = 0; c < k; ++c) {
        std::vector<double> pos, neg;
        for (std::size_t s = 0; s < scores.size(); ++s) {
            if (scores[s].size() != k) throw std::invalid_argument("auc_roc: ragged score rows");
            (truths[s] == c ? pos : neg).push_back(scores[s][c]);
        }
        if (pos.empty() || neg.empty()) {
            out.excluded.push_back(c);
            continue;
        }
        out.per_class[c] = auc_binary(pos, neg);
        sum += out.per_class[c];
        ++used;
    }
    if (used == 0) throw std::invalid_argument("auc_roc: every class is degenerate");
    out.macro = sum / static_cast<double>(used);
    return out;
}

double iou(std::span<const bool> pred, std::span<const bool> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("iou: mask shape mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] && truth[i];
        uni += pred[i] || truth[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double iou(const std::vector<bool>& pred, const std::vector<bool>& truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("iou: mask shape mismatch");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        inter += pred[i] && truth[i];
        uni += pred[i] || truth[i];
    }
    return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double mean_iou(const LabelImage& pred, const LabelImage& truth, std::size_t classes) {
    if (!pred.same_shape(truth)) throw std::invalid_argument("mean_iou: shape mismatch");
    if (classes == 0) throw std::invalid_argument("mean_iou: zero classes");
    double sum = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        std::size_t inter = 0, uni = 0;
        for (std::size_t i = 0; i < pred.labels.size(); ++i) {
            const bool a = pred.labels[i] == c;
            const bool b = truth.labels[i] == c;
            inter += a && b;
            uni += a || b;
        }
        sum += uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
    }
    return sum / static_cast<double>(classes);
}

std::size_t BinaryImage::count() const {
    return static_cast<std::size_t>(std::count(pixels.begin(), pixels.end(), std::uint8_t{1}));
}

BinaryImage boundary_map(const LabelImage& seg) {
    BinaryImage b{seg.height, seg.width, std::vector<std::uint8_t>(seg.labels.size(), 0)};
    for (std::size_t i = 0; i < seg.height; ++i) {
        for (std::size_t j = 0; j < seg.width; ++j) {
            const auto v = seg.at(i, j);
            const bool edge = (i > 0 && seg.at(i - 1, j) != v) || (i + 1 < seg.height && seg.at(i + 1, j) != v) ||
                              (j > 0 && seg.at(i, j - 1) != v) || (j + 1 < seg.width && seg.at(i, j + 1) != v);
            b.pixels[i * seg.width + j] = edge ? 1 : 0;
        }
    }
    return b;
}

double boundary_gradient_norm(const BinaryImage& b) {
    auto v = [&](std::size_t i, std::size_t j) { return static_cast<double>(b.at(i, j)); };
    auto diff = [](double lo, double hi, std::size_t span) { return span == 0 ? 0.0 : (hi - lo) / static_cast<double>(span); };
    double sum = 0.0;
    for (std::size_t i = 0; i < b.height; ++i) {
        const std::size_t i0 = i > 0 ? i - 1 : i;
        const std::size_t i1 = i + 1 < b.height ? i + 1 : i;
        for (std::size_t j = 0; j < b.width; ++j) {
            const std::size_t j0 = j > 0 ? j - 1 : j;
            const std::size_t j1 = j + 1 < b.width ? j + 1 : j;
            const double gy = diff(v(i0, j), v(i1, j), i1 - i0);
            const double gx = diff(v(i, j0), v(i, j1), j1 - j0);
            sum += gx * gx + gy * gy;
        }
    }
    return std::sqrt(sum);
}

double boundary_accuracy(const LabelImage& pred, const LabelImage& truth, std::size_t tol) {
    if (!pred.same_shape(truth)) throw std::invalid_argument("boundary_accuracy: shape mismatch");
    const BinaryImage bp = boundary_map(pred);
    const BinaryImage bt = boundary_map(truth);
    const std::size_t h = pred.height, w = pred.width;
    std::size_t predicted = 0, matched = 0;
    for (std::size_t i = 0; i < h; ++i) {
        for (std::size_t j = 0; j < w; ++j) {
            if (!bp.at(i, j)) continue;
            ++predicted;
            const std::size_t ilo = i >= tol ? i - tol : 0, ihi = std::min(h - 1, i + tol);
            const std::size_t jlo = j >= tol ? j - tol : 0, jhi = std::min(w - 1, j + tol);
            bool hit = false;
            for (std::size_t a = ilo; a <= ihi && !hit; ++a)
                for (std::size_t c = jlo; c <= jhi && !hit; ++c) hit = bt.at(a, c) != 0;
            matched += hit;
        }
    }
    if (predicted == 0) return bt.count() == 0 ? 1.0 : 0.0;
    return static_cast<double>(matched) / static_cast<double>(predicted);
}

TemporalMetrics temporal_metrics(std::span<const LabelImage> pred, std::span<const LabelImage> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("temporal_metrics: series length mismatch");
    if (pred.size() < 2) throw std::invalid_argument("temporal_metrics: need at least two frames");
    TemporalMetrics m;
    for (std::size_t t = 0; t < pred.size(); ++t) {
        if (!pred[t].same_shape(truth[t]) || !truth[t].same_shape(truth.front())) {
            throw std::invalid_argument("temporal_metrics: frame shape mismatch");
        }
        std::size_t hits = 0;
        for (std::size_t i = 0; i < truth[t].labels.size(); ++i) hits += pred[t].labels[i] == truth[t].labels[i];
        m.temporal_accuracy += static_cast<double>(hits) / static_cast<double>(truth[t].labels.size());
    }
    m.temporal_accuracy /= static_cast<double>(pred.size());
    m.prediction_error = 1.0 - m.temporal_accuracy;

    for (std::size_t t = 1; t < pred.size(); ++t) {
        std::vector<bool> dp(truth[t].labels.size()), dt(truth[t].labels.size());
        for (std::size_t i = 0; i < dp.size(); ++i) {
            dp[i] = pred[t].labels[i] != pred[t - 1].labels[i];
            dt[i] = truth[t].labels[i] != truth[t - 1].labels[i];
        }
        m.temporal_iou += iou(dp, dt);
    }
    m.temporal_iou /= static_cast<double>(pred.size() - 1);
    return m;
}

double mean_absolute_percentage_error(std::span<const double> pred, std::span<const double> truth) {
    if (pred.size() != truth.size()) throw std::invalid_argument("mape: length mismatch");
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (truth[i] == 0.0) continue;
        sum += std::abs((pred[i] - truth[i]) / truth[i]);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("mape: no non-zero truth values");
    return sum / static_cast<double>(n);
}

}  // namespace geofuse
