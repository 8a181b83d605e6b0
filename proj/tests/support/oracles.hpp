#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Nothing here calls into the library code it is compared against.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numeric>
#include <utility>
#include <vector>

#include "geofuse/rng.hpp"
#include "geofuse/tensor.hpp"

namespace oracle {

inline geofuse::Tensor random_tensor(const geofuse::Shape& shape, geofuse::Rng& rng, double lo = -1.0,
                                     double hi = 1.0) {
    geofuse::Tensor t(shape);
    for (double& v : t.values()) v = rng.uniform(lo, hi);
    return t;
}

/// Zero-padded same-size convolution, channel-major then filter row then
/// filter column; out-of-image taps are skipped.
inline geofuse::Tensor conv2d(const geofuse::Tensor& x, const geofuse::Tensor& w, const geofuse::Tensor& b) {
    const long C = static_cast<long>(x.dim(0)), H = static_cast<long>(x.dim(1)), W = static_cast<long>(x.dim(2));
    const long O = static_cast<long>(w.dim(0)), K = static_cast<long>(w.dim(2)), k = K / 2;
    geofuse::Tensor y({static_cast<std::size_t>(O), x.dim(1), x.dim(2)});
    for (long o = 0; o < O; ++o)
        for (long i = 0; i < H; ++i)
            for (long j = 0; j < W; ++j) {
                double acc = 0.0;
                for (long c = 0; c < C; ++c)
                    for (long m = 0; m < K; ++m)
                        for (long n = 0; n < K; ++n) {
                            const long r = i + m - k, s = j + n - k;
                            if (r < 0 || r >= H || s < 0 || s >= W) continue;
                            acc += w[((o * C + c) * K + m) * K + n] * x[(c * H + r) * W + s];
                        }
                y[(o * H + i) * W + j] = acc + b[o];
            }
    return y;
}

inline geofuse::Tensor maxpool(const geofuse::Tensor& x, std::size_t win) {
    const std::size_t C = x.dim(0), H = x.dim(1) / win, W = x.dim(2) / win;
    geofuse::Tensor y({C, H, W});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < H; ++i)
            for (std::size_t j = 0; j < W; ++j) {
                double best = -std::numeric_limits<double>::infinity();
                for (std::size_t a = 0; a < win; ++a)
                    for (std::size_t b = 0; b < win; ++b) best = std::max(best, x.at(c, i * win + a, j * win + b));
                y.at(c, i, j) = best;
            }
    return y;
}

/// Central difference of f with respect to every element of `param`.
inline geofuse::Tensor numeric_gradient(geofuse::Tensor& param, const std::function<double()>& f,
                                        double step = 1e-5) {
    geofuse::Tensor g(param.shape());
    for (std::size_t i = 0; i < param.size(); ++i) {
        const double saved = param[i];
        param[i] = saved + step;
        const double up = f();
        param[i] = saved - step;
        const double down = f();
        param[i] = saved;
        g[i] = (up - down) / (2.0 * step);
    }
    return g;
}

/// Largest elementwise |a - n| / max(|a|, |n|); pairs where both sides are
/// below `floor` are compared absolutely.
inline double max_relative_error(const geofuse::Tensor& analytic, const geofuse::Tensor& numeric,
                                 double floor = 1e-7) {
    double worst = 0.0;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
        const double a = analytic[i], n = numeric[i];
        const double scale = std::max(std::abs(a), std::abs(n));
        const double err = scale < floor ? std::abs(a - n) : std::abs(a - n) / scale;
        worst = std::max(worst, err);
    }
    return worst;
}

inline double dot(const geofuse::Tensor& a, const geofuse::Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

struct Counts {
    double accuracy, precision, recall, f1, specificity;
    std::vector<double> per_class;
};

/// Per-sample counting over (truth, prediction) pairs; macro averages over
/// classes, zero-denominator ratios count as 0.
inline Counts count_metrics(const std::vector<std::size_t>& truth, const std::vector<std::size_t>& pred,
                            std::size_t classes) {
    Counts out{};
    double correct = 0.0;
    for (std::size_t s = 0; s < truth.size(); ++s) correct += truth[s] == pred[s];
    out.accuracy = correct / static_cast<double>(truth.size());
    double p = 0.0, r = 0.0, sp = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
        double tp = 0, fp = 0, fn = 0, tn = 0;
        for (std::size_t s = 0; s < truth.size(); ++s) {
            const bool t = truth[s] == c, q = pred[s] == c;
            tp += t && q;
            fp += !t && q;
            fn += t && !q;
            tn += !t && !q;
        }
        const double pc = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        const double rc = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double sc = tn + fp > 0 ? tn / (tn + fp) : 0.0;
        p += pc;
        r += rc;
        sp += sc;
        out.per_class.push_back(rc);
    }
    const double k = static_cast<double>(classes);
    out.precision = p / k;
    out.recall = r / k;
    out.specificity = sp / k;
    out.f1 = out.precision + out.recall > 0 ? 2 * out.precision * out.recall / (out.precision + out.recall) : 0.0;
    return out;
}

/// Area under the ROC polyline, thresholds at every distinct score.
inline double trapezoid_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    std::vector<std::pair<double, bool>> all;
    for (double s : pos) all.emplace_back(s, true);
    for (double s : neg) all.emplace_back(s, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    double tp = 0, fp = 0, prev_tpr = 0, prev_fpr = 0, area = 0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) {
            (all[j].second ? tp : fp) += 1;
            ++j;
        }
        const double tpr = tp / static_cast<double>(pos.size());
        const double fpr = fp / static_cast<double>(neg.size());
        area += (fpr - prev_fpr) * (tpr + prev_tpr) / 2.0;
        prev_tpr = tpr;
        prev_fpr = fpr;
        i = j;
    }
    return area;
}

/// Scalar LSTM step on explicit per-gate weights over [h; x].
struct ScalarLstm {
    // rows: forget, input, output, candidate; columns: h, x, bias
    double w[4][3];

    static double sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

    std::pair<double, double> step(double x, double c, double h) const {
        const double f = sig(w[0][0] * h + w[0][1] * x + w[0][2]);
        const double i = sig(w[1][0] * h + w[1][1] * x + w[1][2]);
        const double o = sig(w[2][0] * h + w[2][1] * x + w[2][2]);
        const double g = std::tanh(w[3][0] * h + w[3][1] * x + w[3][2]);
        const double c2 = f * c + i * g;
        return {c2, o * std::tanh(c2)};
    }
};

}  // namespace oracle
