#include "glyphformer/metrics.hpp"

#include "glyphformer/error.hpp"

namespace glyphformer {

std::vector<std::vector<std::int64_t>> confusion_matrix(std::span<const int> predictions, std::span<const int> truth,
                                                        int num_classes) {
    if (predictions.size() != truth.size())
        throw Error(ErrorKind::ShapeMismatch, "prediction and truth vectors differ in length");
    std::vector<std::vector<std::int64_t>> m(static_cast<std::size_t>(num_classes),
                                             std::vector<std::int64_t>(static_cast<std::size_t>(num_classes), 0));
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || predictions[i] < 0 || predictions[i] >= num_classes)
            throw Error(ErrorKind::InvalidArgument, "class id outside [0, K)");
        ++m[truth[i]][predictions[i]];
    }
    return m;
}

MetricsReport metrics_from_confusion(std::vector<std::vector<std::int64_t>> confusion, double loss) {
    MetricsReport r;
    r.loss = loss;
    const std::size_t k = confusion.size();
    std::vector<std::int64_t> support(k, 0), predicted(k, 0);
    std::int64_t trace = 0;
    for (std::size_t t = 0; t < k; ++t) {
        for (std::size_t p = 0; p < k; ++p) {
            support[t] += confusion[t][p];
            predicted[p] += confusion[t][p];
            r.total += confusion[t][p];
        }
        trace += confusion[t][t];
    }
    r.accuracy = r.total > 0 ? static_cast<double>(trace) / static_cast<double>(r.total) : 0.0;

    r.per_class_f1.assign(k, 0.0);
    double macro_sum = 0.0, weighted_sum = 0.0;
    int present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const std::int64_t tp = confusion[c][c];
        const std::int64_t denom = support[c] + predicted[c];  // 2TP + FP + FN
        if (denom == 0) {
            r.absent_classes.push_back(static_cast<int>(c));
            continue;
        }
        const double f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
        r.per_class_f1[c] = f1;
        macro_sum += f1;
        weighted_sum += f1 * static_cast<double>(support[c]);
        ++present;
    }
    r.macro_f1 = present > 0 ? macro_sum / present : 0.0;
    r.weighted_f1 = r.total > 0 ? weighted_sum / static_cast<double>(r.total) : 0.0;
    r.confusion = std::move(confusion);
    return r;
}

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> truth, int num_classes,
                              double loss) {
    return metrics_from_confusion(confusion_matrix(predictions, truth, num_classes), loss);
}

nlohmann::json to_json(const MetricsReport& report, const std::vector<std::string>& labels) {
    return {{"loss", report.loss},
            {"accuracy", report.accuracy},
            {"macro_f1", report.macro_f1},
            {"weighted_f1", report.weighted_f1},
            {"total", report.total},
            {"labels", labels},
            {"per_class_f1", report.per_class_f1},
            {"absent_classes", report.absent_classes},
            {"confusion", report.confusion}};
}

}  // namespace glyphformer
