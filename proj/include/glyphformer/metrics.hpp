#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace glyphformer {

struct MetricsReport {
    double loss = 0.0;
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    double weighted_f1 = 0.0;
    // confusion[true][predicted]
    std::vector<std::vector<std::int64_t>> confusion;
    std::vector<double> per_class_f1;
    // Classes with neither support nor predictions: F1 recorded as 0 and
    // left out of the macro average.
    std::vector<int> absent_classes;
    std::int64_t total = 0;
};

std::vector<std::vector<std::int64_t>> confusion_matrix(std::span<const int> predictions, std::span<const int> truth,
                                                        int num_classes);

// All scores are derived from the confusion matrix.
MetricsReport metrics_from_confusion(std::vector<std::vector<std::int64_t>> confusion, double loss);
MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> truth, int num_classes,
                              double loss);

nlohmann::json to_json(const MetricsReport& report, const std::vector<std::string>& labels);

}  // namespace glyphformer
