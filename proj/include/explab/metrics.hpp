#pragma once

// Binary-classifier evaluation: AUROC, AUPRC (average precision), ROC/PR
// curve points and percentile-bootstrap confidence intervals.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace explab {

struct LabeledScores {
    std::vector<double> scores;
    /// 0 or 1.
    std::vector<int> labels;

    std::size_t size() const noexcept { return scores.size(); }
    std::size_t positives() const noexcept;
    std::size_t negatives() const noexcept { return size() - positives(); }

    /// Equal non-zero lengths, labels in {0, 1}, finite scores.
    void validate() const;
};

enum class Metric { Auroc, Auprc };
std::string_view to_string(Metric metric);

/// Probability that a random positive outscores a random negative, ties 1/2.
double auroc(const LabeledScores& data);

/// Average precision: mean over positives of the precision at that positive's
/// rank, ranking by descending score with ties kept in input order.
double auprc(const LabeledScores& data);

double compute_metric(Metric metric, const LabeledScores& data);

struct CurvePoint {
    double x;
    double y;
};

/// (fpr, tpr) after each distinct threshold, descending; starts at (0,0), ends at (1,1).
std::vector<CurvePoint> roc_points(const LabeledScores& data);

/// (recall, precision) after each distinct threshold, descending.
std::vector<CurvePoint> pr_points(const LabeledScores& data);

/// Trapezoidal area under a polyline given in increasing x.
double trapezoid_area(std::span<const CurvePoint> points);

struct MetricWithCi {
    Metric metric = Metric::Auroc;
    double point = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::size_t n_boot = 0;
    double ci_level = 0.95;
    std::uint64_t seed = 0;
    /// Resamples redrawn because they lacked one of the classes.
    std::size_t redrawn = 0;
};

struct BootstrapOptions {
    std::size_t n_boot = 1000;
    double level = 0.95;
    std::uint64_t seed = 0;
    /// 0 means worker_count().
    std::size_t threads = 0;
};

/// Percentile bootstrap over samples. Resample i is drawn from an RNG seeded
/// with seed + i, so results are independent of the thread count.
MetricWithCi bootstrap_ci(const LabeledScores& data, Metric metric, const BootstrapOptions& options = {});

/// Linear-interpolated quantile of already sorted values, q in [0, 1].
double sorted_quantile(std::span<const double> sorted, double q);

} // namespace explab
