#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "glyphformer/model.hpp"
#include "glyphformer/optimizer.hpp"
#include "glyphformer/outline.hpp"

namespace glyphformer {

// Everything needed to resume training or evaluate: configuration, label
// space, parameters and AdamW moments.
struct Checkpoint {
    EncoderConfig encoder;
    AdamWConfig optimizer;
    Representation representation = Representation::OriginalTT;
    std::vector<std::string> labels;
    std::int64_t epoch = 0;
    OptimizerState<float> state;
    ModelParams<float> params;
};

// Layout: 8-byte magic "GLYFCKPT", u32 format version, u64 header length,
// JSON header, then float32 little-endian tensors (parameters, first
// moments, second moments) in ModelParams::refs() order.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace glyphformer
