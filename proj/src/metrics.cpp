#include "retrokit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>
#include <stdexcept>

#include "retrokit/common.hpp"

namespace retrokit {

namespace {

struct ClassCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

std::map<int, ClassCounts> confusion_counts(const TaskPredictions& p) {
    std::map<int, ClassCounts> counts;
    for (std::size_t i = 0; i < p.y_true.size(); ++i) {
        int t = p.y_true[i];
        int pr = p.y_pred[i];
        if (t == pr) {
            ++counts[t].tp;
        } else {
            ++counts[pr].fp;
            ++counts[t].fn;
        }
    }
    return counts;
}

double f1_from_counts(const ClassCounts& c) {
    std::int64_t denom = 2 * c.tp + c.fp + c.fn;
    if (denom == 0) return 0.0;
    return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

// Linear interpolation between order statistics.
double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    double pos = q * static_cast<double>(sorted.size() - 1);
    std::size_t lo = static_cast<std::size_t>(std::floor(pos));
    std::size_t hi = static_cast<std::size_t>(std::ceil(pos));
    double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

void TaskPredictions::validate() const {
    if (y_true.empty()) throw std::invalid_argument("metrics: empty prediction lists");
    if (y_true.size() != y_pred.size()) {
        throw std::invalid_argument("metrics: true/pred length mismatch");
    }
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        if (y_true[i] < 0 || y_true[i] >= class_count || y_pred[i] < 0 || y_pred[i] >= class_count) {
            throw std::invalid_argument("metrics: class index out of range for task '" + task + "'");
        }
    }
}

double micro_f1(const TaskPredictions& p) {
    p.validate();
    auto counts = confusion_counts(p);
    ClassCounts pooled;
    for (const auto& [cls, c] : counts) {
        pooled.tp += c.tp;
        pooled.fp += c.fp;
        pooled.fn += c.fn;
    }
    return f1_from_counts(pooled);
}

double macro_f1(const TaskPredictions& p, MacroUniverse universe) {
    p.validate();
    auto counts = confusion_counts(p);
    double sum = 0.0;
    std::size_t n_classes = 0;
    if (universe == MacroUniverse::observed) {
        // Classes appearing in true or predicted labels; a class with
        // tp = fp = fn = 0 never appears in `counts`.
        for (const auto& [cls, c] : counts) {
            sum += f1_from_counts(c);
            ++n_classes;
        }
    } else {
        for (int cls = 0; cls < p.class_count; ++cls) {
            auto it = counts.find(cls);
            sum += it == counts.end() ? 0.0 : f1_from_counts(it->second);
            ++n_classes;
        }
    }
    return n_classes == 0 ? 0.0 : sum / static_cast<double>(n_classes);
}

ConfidenceInterval bootstrap_ci(const TaskPredictions& p, const MetricFn& metric,
                                std::size_t resamples, double level, std::uint64_t seed) {
    p.validate();
    if (resamples < 100) throw std::invalid_argument("bootstrap: resamples must be >= 100");
    if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("bootstrap: level must be in (0, 1)");
    const std::size_t n = p.y_true.size();
    std::vector<double> stats(resamples);
    TaskPredictions sample;
    sample.task = p.task;
    sample.class_count = p.class_count;
    sample.y_true.resize(n);
    sample.y_pred.resize(n);
    for (std::size_t r = 0; r < resamples; ++r) {
        std::mt19937_64 rng(splitmix64(seed ^ (0x9e3779b97f4a7c15ull * (r + 1))));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t idx = pick(rng);
            sample.y_true[i] = p.y_true[idx];
            sample.y_pred[i] = p.y_pred[idx];
        }
        stats[r] = metric(sample);
    }
    std::sort(stats.begin(), stats.end());
    double tail = (1.0 - level) / 2.0;
    return {quantile_sorted(stats, tail), quantile_sorted(stats, 1.0 - tail)};
}

double phenotype_accuracy(const std::vector<TaskPredictions>& tasks,
                          const std::vector<std::size_t>& subset) {
    if (subset.empty()) throw std::invalid_argument("phenotype: empty task subset");
    std::size_t n = 0;
    for (std::size_t s : subset) {
        if (s >= tasks.size()) throw std::invalid_argument("phenotype: task index out of range");
        tasks[s].validate();
        if (n == 0) {
            n = tasks[s].y_true.size();
        } else if (tasks[s].y_true.size() != n) {
            throw std::invalid_argument("phenotype: misaligned document lists");
        }
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        bool all = true;
        for (std::size_t s : subset) {
            if (tasks[s].y_true[i] != tasks[s].y_pred[i]) {
                all = false;
                break;
            }
        }
        if (all) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n);
}

StrataAccuracy prevalence_strata(const TaskPredictions& p, double quantile) {
    p.validate();
    if (quantile <= 0.0 || quantile > 0.5) {
        throw std::invalid_argument("prevalence_strata: quantile must be in (0, 0.5]");
    }
    std::map<int, std::int64_t> freq;
    for (int t : p.y_true) ++freq[t];
    if (freq.size() < 2) throw std::invalid_argument("prevalence_strata: needs >= 2 distinct true classes");

    std::vector<std::int64_t> sorted_freq;
    for (const auto& [cls, f] : freq) sorted_freq.push_back(f);
    std::sort(sorted_freq.begin(), sorted_freq.end(), std::greater<>());
    std::size_t k = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(quantile * static_cast<double>(sorted_freq.size()))));
    std::int64_t top_threshold = sorted_freq[k - 1];
    std::int64_t bottom_threshold = sorted_freq[sorted_freq.size() - k];

    std::set<int> top, bottom;
    for (const auto& [cls, f] : freq) {
        if (f >= top_threshold) top.insert(cls);
        if (f <= bottom_threshold) bottom.insert(cls);
    }
    auto stratum_accuracy = [&](const std::set<int>& stratum) {
        std::int64_t total = 0, correct = 0;
        for (std::size_t i = 0; i < p.y_true.size(); ++i) {
            if (!stratum.count(p.y_true[i])) continue;
            ++total;
            if (p.y_true[i] == p.y_pred[i]) ++correct;
        }
        return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
    };
    return {stratum_accuracy(top), stratum_accuracy(bottom)};
}

}  // namespace retrokit
