#include "explab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "explab/error.hpp"
#include "explab/parallel.hpp"
#include "explab/rng.hpp"

namespace explab {
namespace {

constexpr std::size_t kMaxRedraws = 100000;

void require_both_classes(const LabeledScores& data, std::string_view what) {
    data.validate();
    if (data.positives() == 0) {
        throw std::invalid_argument(std::string(what) + ": no positive samples (label 1)");
    }
    if (data.negatives() == 0) {
        throw std::invalid_argument(std::string(what) + ": no negative samples (label 0)");
    }
}

// Indices sorted by descending score; equal scores keep input order.
std::vector<std::size_t> descending_order(const LabeledScores& data) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return data.scores[a] > data.scores[b]; });
    return order;
}

} // namespace

std::size_t LabeledScores::positives() const noexcept {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

void LabeledScores::validate() const {
    if (scores.size() != labels.size()) {
        throw ShapeError("labeled scores: " + std::to_string(scores.size()) + " scores but " +
                         std::to_string(labels.size()) + " labels");
    }
    if (scores.empty()) {
        throw std::invalid_argument("labeled scores: empty input");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw std::invalid_argument("labeled scores: label at index " + std::to_string(i) + " is not 0 or 1");
        }
        if (!std::isfinite(scores[i])) {
            throw NumericError("labeled scores: score at index " + std::to_string(i) + " is not finite");
        }
    }
}

std::string_view to_string(Metric metric) { return metric == Metric::Auroc ? "AUROC" : "AUPRC"; }

double auroc(const LabeledScores& data) {
    require_both_classes(data, "auroc");
    const std::size_t n = data.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return data.scores[a] < data.scores[b]; });

    // Sum of positive ranks with ties given their mid-rank, all in half units.
    double rank_sum2 = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        std::size_t pos = 0;
        while (j < n && data.scores[order[j]] == data.scores[order[i]]) {
            pos += static_cast<std::size_t>(data.labels[order[j]]);
            ++j;
        }
        // Ranks i+1 .. j average to (i + 1 + j) / 2.
        rank_sum2 += static_cast<double>(pos) * static_cast<double>(i + 1 + j);
        i = j;
    }
    const double p = static_cast<double>(data.positives());
    const double q = static_cast<double>(data.negatives());
    const double u2 = rank_sum2 - p * (p + 1.0);
    return u2 / (2.0 * p * q);
}

double auprc(const LabeledScores& data) {
    data.validate();
    const std::size_t pos = data.positives();
    if (pos == 0) {
        throw std::invalid_argument("auprc: no positive samples (label 1)");
    }
    const auto order = descending_order(data);
    double sum = 0.0;
    std::size_t tp = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (data.labels[order[k]] == 1) {
            ++tp;
            sum += static_cast<double>(tp) / static_cast<double>(k + 1);
        }
    }
    return sum / static_cast<double>(pos);
}

double compute_metric(Metric metric, const LabeledScores& data) {
    return metric == Metric::Auroc ? auroc(data) : auprc(data);
}

std::vector<CurvePoint> roc_points(const LabeledScores& data) {
    require_both_classes(data, "roc_points");
    const auto order = descending_order(data);
    const double p = static_cast<double>(data.positives());
    const double q = static_cast<double>(data.negatives());
    std::vector<CurvePoint> points{{0.0, 0.0}};
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = data.scores[order[i]];
        for (; i < order.size() && data.scores[order[i]] == threshold; ++i) {
            (data.labels[order[i]] == 1 ? tp : fp) += 1;
        }
        points.push_back({static_cast<double>(fp) / q, static_cast<double>(tp) / p});
    }
    return points;
}

std::vector<CurvePoint> pr_points(const LabeledScores& data) {
    data.validate();
    if (data.positives() == 0) {
        throw std::invalid_argument("pr_points: no positive samples (label 1)");
    }
    const auto order = descending_order(data);
    const double p = static_cast<double>(data.positives());
    std::vector<CurvePoint> points;
    std::size_t tp = 0, seen = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = data.scores[order[i]];
        for (; i < order.size() && data.scores[order[i]] == threshold; ++i) {
            tp += static_cast<std::size_t>(data.labels[order[i]]);
            ++seen;
        }
        points.push_back({static_cast<double>(tp) / p, static_cast<double>(tp) / static_cast<double>(seen)});
    }
    return points;
}

double trapezoid_area(std::span<const CurvePoint> points) {
    double area = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        area += (points[i].x - points[i - 1].x) * (points[i].y + points[i - 1].y) * 0.5;
    }
    return area;
}

double sorted_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) {
        throw std::invalid_argument("sorted_quantile: empty input");
    }
    const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

MetricWithCi bootstrap_ci(const LabeledScores& data, Metric metric, const BootstrapOptions& options) {
    if (options.n_boot == 0) {
        throw std::invalid_argument("bootstrap_ci: n_boot must be >= 1");
    }
    if (!(options.level > 0.0 && options.level < 1.0)) {
        throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");
    }
    MetricWithCi out;
    out.metric = metric;
    out.point = compute_metric(metric, data);
    require_both_classes(data, "bootstrap_ci");
    out.n_boot = options.n_boot;
    out.ci_level = options.level;
    out.seed = options.seed;

    const std::size_t n = data.size();
    std::vector<double> values(options.n_boot);
    std::vector<std::size_t> redraws(options.n_boot, 0);
    const std::size_t threads = options.threads == 0 ? worker_count() : options.threads;

    parallel_for(options.n_boot, threads, [&](std::size_t b) {
        Rng rng(options.seed + b);
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        LabeledScores sample;
        sample.scores.resize(n);
        sample.labels.resize(n);
        for (std::size_t attempt = 0;; ++attempt) {
            if (attempt == kMaxRedraws) {
                throw std::runtime_error("bootstrap_ci: could not draw a resample containing both classes");
            }
            std::size_t pos = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const std::size_t k = pick(rng);
                sample.scores[i] = data.scores[k];
                sample.labels[i] = data.labels[k];
                pos += static_cast<std::size_t>(data.labels[k]);
            }
            if (pos > 0 && pos < n) {
                break;
            }
            ++redraws[b];
        }
        values[b] = compute_metric(metric, sample);
    });

    out.redrawn = std::accumulate(redraws.begin(), redraws.end(), std::size_t{0});
    std::sort(values.begin(), values.end());
    const double alpha = 1.0 - options.level;
    out.ci_low = sorted_quantile(values, alpha / 2.0);
    out.ci_high = sorted_quantile(values, 1.0 - alpha / 2.0);
    return out;
}

} // namespace explab
