#pragma once

#include <cstdint>

#include "json.hpp"

#include "glyphformer/model.hpp"

namespace glyphformer {

struct AdamWConfig {
    double base_lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    std::int64_t warmup = 250;

    friend bool operator==(const AdamWConfig&, const AdamWConfig&) = default;
};

nlohmann::json to_json(const AdamWConfig& cfg);
AdamWConfig adamw_config_from_json(const nlohmann::json& j);

// Linear warmup to base_lr over `warmup` optimizer steps, then inverse
// square-root decay: base_lr * min(step / warmup, sqrt(warmup / step)).
double lr_at(std::int64_t step, const AdamWConfig& cfg);

template <typename T>
struct OptimizerState {
    AdamWConfig config;
    std::int64_t step = 0;
    ModelParams<T> first_moment;
    ModelParams<T> second_moment;

    static OptimizerState create(const EncoderConfig& encoder, const AdamWConfig& config);
};

// One AdamW update. Weight decay is decoupled (p <- p - lr * wd * p) and only
// touches parameters flagged for decay, skipping embedding pad rows.
template <typename T>
void adamw_step(ModelParams<T>& params, const ModelParams<T>& grads, OptimizerState<T>& state);

}  // namespace glyphformer
