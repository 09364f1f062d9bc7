#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "glyphformer/experiment.hpp"
#include "glyphformer/metrics.hpp"

namespace glyphformer {

// All writers are pure functions of their inputs: fixed number formatting,
// no timestamps, so identical runs give identical bytes.

std::string format_fixed(double v, int digits = 6);

std::string metrics_csv(const MetricsReport& report, const std::vector<std::string>& labels);
std::string train_log_jsonl(const std::vector<EpochLog>& log);
nlohmann::json to_json(const EpochLog& log);

// Columns outline,loss,acc,macro_f1,w_f1; one row per representation.
std::string comparison_csv(const Comparison& cmp, bool use_final = false);
nlohmann::json to_json(const Comparison& cmp);
// Plain-text table for the terminal.
std::string comparison_table(const Comparison& cmp);

std::string confusion_svg(const MetricsReport& report, const std::vector<std::string>& labels,
                          const std::string& title);

struct LossSeries {
    std::string name;
    std::vector<EpochLog> log;
};
// Train (solid) and validation (dashed) loss per series on shared axes.
std::string loss_curves_svg(const std::vector<LossSeries>& series, const std::string& title);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace glyphformer
