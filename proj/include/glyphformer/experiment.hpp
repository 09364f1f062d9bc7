#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "glyphformer/checkpoint.hpp"
#include "glyphformer/error.hpp"
#include "glyphformer/font.hpp"
#include "glyphformer/metrics.hpp"
#include "glyphformer/model.hpp"
#include "glyphformer/optimizer.hpp"
#include "glyphformer/outline.hpp"
#include "glyphformer/tokenizer.hpp"

namespace glyphformer {

enum class Task { Style, Weight };

struct TrainingConfig {
    int epochs = 64;
    int batch_size = 256;
    AdamWConfig optimizer;
};

// Named hyperparameter profiles. "paper" is the published protocol, "desk"
// a CPU-sized variant; both share the architecture and optimizer settings.
struct Preset {
    std::string name;
    int epochs = 0;
    int batch_size = 0;
    std::size_t glyph_cap = 0;  // 0 = all usable glyphs
};

Preset preset_by_name(const std::string& name);

struct ManifestEntry {
    std::filesystem::path font;
    std::string label;
    std::string weight;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
    Task task = Task::Style;
    std::uint64_t seed = 0;
    std::array<double, 3> split{0.8, 0.1, 0.1};
    Representation representation = Representation::PostScript;
    std::string preset = "desk";
    std::size_t glyph_cap = 500;
    int bins = 256;
    EncoderConfig encoder;  // num_classes and mode are derived from the data
    TrainingConfig training;

    // Paths in the file are resolved against the manifest's directory.
    static Manifest load(const std::filesystem::path& path);
    static Manifest from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
    void apply_preset(const std::string& name);
    void check() const;

    // Class names in first-appearance order; weight tasks pair family and weight.
    std::vector<std::string> class_labels() const;
    std::string class_of(const ManifestEntry& entry) const;
};

struct GlyphSample {
    int font_index = 0;
    char32_t codepoint = 0;
    std::uint32_t glyph_id = 0;
    int label = 0;

    friend bool operator==(const GlyphSample&, const GlyphSample&) = default;
};

struct FontStats {
    std::string path;
    std::size_t codepoints = 0;
    std::size_t usable = 0;
    std::size_t skipped_empty = 0;
    std::size_t skipped_too_long = 0;
    std::size_t skipped_duplicate = 0;
    std::size_t skipped_invalid = 0;
    std::size_t selected = 0;
};

// Glyph partition shared by every representation. A glyph is usable when
// it has contours and fits the token limits in all four formats; the split is
// drawn per font so each class keeps the same proportions.
struct SplitPlan {
    std::vector<std::shared_ptr<const FontFile>> fonts;
    std::vector<std::string> font_paths;
    std::vector<std::string> labels;
    std::vector<GlyphSample> train, val, test;
    std::vector<FontStats> stats;
};

SplitPlan plan_splits(const Manifest& manifest);

enum class Split { Train, Val, Test };
std::string_view to_string(Split s);
Split parse_split(std::string_view name);

struct Dataset {
    Representation representation = Representation::OriginalTT;
    TokenMode mode = TokenMode::Point;
    std::vector<std::string> labels;
    std::vector<GlyphSample> train_samples, val_samples, test_samples;
    std::vector<TokenSequence> train, val, test;

    const std::vector<TokenSequence>& split(Split s) const;
    const std::vector<GlyphSample>& samples(Split s) const;
};

Dataset encode_dataset(const SplitPlan& plan, Representation representation, int bins = 256);
Dataset build_dataset(const Manifest& manifest);

// Encoder settings for a dataset: manifest sizes plus the data's mode and K.
EncoderConfig encoder_for(const Manifest& manifest, const Dataset& data);

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

struct TrainResult {
    Checkpoint best;
    Checkpoint final;
    int best_epoch = 0;
    std::vector<EpochLog> log;
};

// Raised when a loss or activation turns non-finite; carries the state from
// the end of the last completed epoch.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& message, Checkpoint last_good)
        : Error(ErrorKind::DivergenceDetected, message), last_good_(std::move(last_good)) {}
    const Checkpoint& last_good() const { return last_good_; }

private:
    Checkpoint last_good_;
};

using EpochCallback = std::function<void(const EpochLog&)>;

TrainResult train(const Dataset& data, const EncoderConfig& encoder, const TrainingConfig& training,
                  std::uint64_t seed, const EpochCallback& on_epoch = {});

// Per-example outputs for one split.
struct Predictions {
    std::vector<int> predicted;
    std::vector<int> truth;
    std::vector<double> losses;
};

Predictions predict(const ModelParams<float>& params, const EncoderConfig& encoder,
                    const std::vector<TokenSequence>& seqs, int batch_size = 256);
MetricsReport evaluate(const ModelParams<float>& params, const EncoderConfig& encoder,
                       const std::vector<TokenSequence>& seqs, int batch_size = 256);
// Throws ConfigMismatch when the checkpoint was trained on another
// representation or label space.
MetricsReport evaluate(const Checkpoint& ckpt, const Dataset& data, Split split, int batch_size = 256);

struct FormatResult {
    Representation representation = Representation::OriginalTT;
    MetricsReport best;   // best-validation checkpoint on test
    MetricsReport final;  // final checkpoint on test
    int best_epoch = 0;
    std::vector<EpochLog> log;
    std::vector<char32_t> test_codepoints;
};

struct Comparison {
    std::vector<std::string> labels;
    std::vector<FontStats> stats;
    std::vector<FormatResult> rows;
    double majority_baseline = 0.0;
};

using FormatEpochCallback = std::function<void(Representation, const EpochLog&)>;

Comparison compare_formats(const Manifest& manifest, const FormatEpochCallback& on_epoch = {});

std::string display_name(Representation r);

}  // namespace glyphformer
