#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "glyphformer/tensor.hpp"
#include "glyphformer/tokenizer.hpp"

namespace glyphformer {

struct EncoderConfig {
    int d_model = 64;
    int heads = 4;
    int layers = 3;
    int ffn_dim = 128;
    int num_classes = 2;
    double dropout = 0.0;
    std::uint64_t seed = 0;

    TokenMode mode = TokenMode::Point;
    int bins = 256;
    TableLimits limits;

    int head_dim() const { return d_model / heads; }
    void check() const;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

nlohmann::json to_json(const EncoderConfig& cfg);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);

// Row vectors (biases, norm gains) are stored as 1 x n matrices so every
// parameter has the same type.
template <typename T>
struct LayerParams {
    Matrix<T> ln1_gain, ln1_bias;
    Matrix<T> wq, bq, wk, bk, wv, bv, wo, bo;
    Matrix<T> ln2_gain, ln2_bias;
    Matrix<T> w1, b1, w2, b2;
};

template <typename T>
struct ParamRef {
    std::string name;
    Matrix<T>* value = nullptr;
    bool decay = false;
    int pad_row = -1;  // row excluded from weight decay, -1 for none
};

template <typename T>
struct ModelParams {
    EmbeddingTables<T> embeddings;
    std::vector<LayerParams<T>> layers;
    Matrix<T> final_gain, final_bias;
    Matrix<T> classifier, classifier_bias;

    // Same shapes as `cfg` demands, every entry zero.
    static ModelParams zeros(const EncoderConfig& cfg);
    // Truncated normal (std 0.02, cut at 2 std) for matrices and embedding
    // tables, unit norm gains, zero biases and a zero classifier.
    static ModelParams initialize(const EncoderConfig& cfg);

    // Stable traversal order shared by the optimizer and checkpoints.
    std::vector<ParamRef<T>> refs();
    std::size_t size() const;
    void set_zero();

    template <typename U>
    ModelParams<U> cast() const;
};

// Multi-head self-attention sublayer (projections included) on a padded
// batch laid out as Batch::embedded. Masked keys receive zero weight.
template <typename T>
Matrix<T> attention(const Matrix<T>& x, std::span<const std::uint8_t> mask, int batch_size, int steps,
                    const LayerParams<T>& layer, const EncoderConfig& cfg);

// Attention weights of one head for one sequence of the batch, for tests.
template <typename T>
Matrix<T> attention_weights(const Matrix<T>& x, std::span<const std::uint8_t> mask, int steps, int sequence,
                            int head, const LayerParams<T>& layer, const EncoderConfig& cfg);

// Pre-norm encoder stack, final norm, classifier on the CLS position.
// Returns logits [batch_size, num_classes].
template <typename T>
Matrix<T> forward(const Batch<T>& batch, const ModelParams<T>& params, const EncoderConfig& cfg,
                  bool train_mode, std::uint64_t dropout_seed = 0);

template <typename T>
T cross_entropy(const Matrix<T>& logits, std::span<const int> labels);

template <typename T>
struct LossAndGrads {
    T loss = 0;
    Matrix<T> logits;
    ModelParams<T> grads;
    Matrix<T> grad_embedded;  // gradient w.r.t. Batch::embedded
};

// Mean cross-entropy and exact gradients w.r.t. every parameter.
template <typename T>
LossAndGrads<T> loss_and_grads(const Batch<T>& batch, std::span<const TokenSequence* const> seqs,
                               const ModelParams<T>& params, const EncoderConfig& cfg,
                               std::uint64_t dropout_seed = 0);

template <typename T>
LossAndGrads<T> loss_and_grads(std::span<const TokenSequence* const> seqs, const ModelParams<T>& params,
                               const EncoderConfig& cfg, std::uint64_t dropout_seed = 0);

}  // namespace glyphformer
