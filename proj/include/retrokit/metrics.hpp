#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace retrokit {

struct TaskPredictions {
    std::string task;
    std::vector<int> y_true;
    std::vector<int> y_pred;
    int class_count = 0;

    void validate() const;
};

// Which classes enter the macro average: those observed in true or
// predicted labels (default), or every schema class.
enum class MacroUniverse { observed, schema };

// Micro-averaged F1 from globally pooled per-class counts. For
// single-label multiclass this equals plain accuracy; both are computed
// as one division of exact integer counts, so the equality is exact.
double micro_f1(const TaskPredictions& p);

double macro_f1(const TaskPredictions& p, MacroUniverse universe = MacroUniverse::observed);

using MetricFn = std::function<double(const TaskPredictions&)>;

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
};

// Percentile interval over with-replacement resamples of the
// (true, pred) pairs. Per-resample rngs are derived from the seed, so
// the result is independent of evaluation order.
ConfidenceInterval bootstrap_ci(const TaskPredictions& p, const MetricFn& metric,
                                std::size_t resamples = 1000, double level = 0.95,
                                std::uint64_t seed = 0);

// Fraction of documents whose prediction is correct for every task in
// `subset` (indices into `tasks`). All tasks must cover the same
// documents in the same order.
double phenotype_accuracy(const std::vector<TaskPredictions>& tasks,
                          const std::vector<std::size_t>& subset);

struct StrataAccuracy {
    double most_prevalent = 0.0;
    double least_prevalent = 0.0;
};

// Classes ranked by true-label frequency; accuracy over documents whose
// true class falls in the top / bottom `quantile` of classes, boundary
// ties included.
StrataAccuracy prevalence_strata(const TaskPredictions& p, double quantile = 0.1);

}  // namespace retrokit
