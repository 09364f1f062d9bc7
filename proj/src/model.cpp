#include "glyphformer/model.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInitStd = 0.02;

// ---------------------------------------------------------------------------
// Building blocks

template <typename T>
struct NormCache {
    Matrix<T> xhat;
    std::vector<T> rstd;
};

template <typename T>
Matrix<T> layer_norm(const Matrix<T>& x, const Matrix<T>& gain, const Matrix<T>& bias, NormCache<T>* cache) {
    const Eigen::Index n = x.rows(), d = x.cols();
    Matrix<T> xhat(n, d);
    std::vector<T> rstd(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
        const T mean = x.row(r).mean();
        const auto centered = (x.row(r).array() - mean).matrix();
        const T var = centered.squaredNorm() / static_cast<T>(d);
        const T rs = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
        xhat.row(r) = centered * rs;
        rstd[r] = rs;
    }
    Matrix<T> y = (xhat.array().rowwise() * gain.row(0).array()).matrix();
    y.rowwise() += bias.row(0);
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->rstd = std::move(rstd);
    }
    return y;
}

template <typename T>
Matrix<T> layer_norm_backward(const Matrix<T>& dy, const NormCache<T>& cache, const Matrix<T>& gain,
                              Matrix<T>& dgain, Matrix<T>& dbias) {
    const Eigen::Index n = dy.rows(), d = dy.cols();
    dgain += dy.cwiseProduct(cache.xhat).colwise().sum();
    dbias += dy.colwise().sum();
    const Matrix<T> dxhat = (dy.array().rowwise() * gain.row(0).array()).matrix();
    Matrix<T> dx(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        const T s1 = dxhat.row(r).sum();
        const T s2 = dxhat.row(r).dot(cache.xhat.row(r));
        dx.row(r) = (cache.rstd[r] / static_cast<T>(d)) *
                    (static_cast<T>(d) * dxhat.row(r).array() - s1 - cache.xhat.row(r).array() * s2).matrix();
    }
    return dx;
}

template <typename T>
Matrix<T> linear(const Matrix<T>& x, const Matrix<T>& w, const Matrix<T>& b) {
    Matrix<T> y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

template <typename T>
T gelu(T u) {
    return T(0.5) * u * (T(1) + std::erf(u / std::sqrt(T(2))));
}

template <typename T>
T gelu_grad(T u) {
    const T cdf = T(0.5) * (T(1) + std::erf(u / std::sqrt(T(2))));
    const T pdf = std::exp(T(-0.5) * u * u) / std::sqrt(T(2) * T(M_PI));
    return cdf + u * pdf;
}

template <typename T>
void softmax_rows(Matrix<T>& s) {
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
        auto row = s.row(r);
        const T mx = row.maxCoeff();
        // Vectorized exp clamps its input, so masked (-inf) entries are
        // zeroed explicitly.
        row = (row.array() == -std::numeric_limits<T>::infinity()).select(T(0), (row.array() - mx).exp()).matrix();
        row /= row.sum();
    }
}

template <typename T>
Matrix<T> dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, std::mt19937_64& rng) {
    Matrix<T> mask(rows, cols);
    const T scale = static_cast<T>(1.0 / (1.0 - p));
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
        mask.data()[i] = u < p ? T(0) : scale;
    }
    return mask;
}

template <typename T>
Matrix<T> truncated_normal(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix<T> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
        double z = normal(rng);
        while (std::abs(z) > 2.0) z = normal(rng);
        m.data()[i] = static_cast<T>(z * kInitStd);
    }
    return m;
}

// ---------------------------------------------------------------------------
// Forward pass over packed rows: only CLS + real tokens of every sequence
// are materialized, sequence b occupying rows [offset[b], offset[b]+length[b]).

struct Packing {
    std::vector<Eigen::Index> offsets;
    std::vector<Eigen::Index> lengths;
    Eigen::Index rows = 0;
};

template <typename T>
Packing pack_layout(const Batch<T>& batch) {
    Packing p;
    for (int b = 0; b < batch.batch_size; ++b) {
        const Eigen::Index len = batch.lengths[b];
        p.offsets.push_back(p.rows);
        p.lengths.push_back(len);
        p.rows += len;
    }
    return p;
}

template <typename T>
struct LayerCache {
    NormCache<T> ln1;
    Matrix<T> h1, q, k, v;
    std::vector<Matrix<T>> probs;  // [sequence * heads + head]
    Matrix<T> concat;
    Matrix<T> attn_drop;
    Matrix<T> x_mid;
    NormCache<T> ln2;
    Matrix<T> h2, u, g;
    Matrix<T> ffn_drop;
};

template <typename T>
struct ForwardCache {
    Packing packing;
    std::vector<LayerCache<T>> layers;
    NormCache<T> final_ln;
    Matrix<T> z;
};

template <typename T>
Matrix<T> run_forward(const Batch<T>& batch, const ModelParams<T>& params, const EncoderConfig& cfg,
                      bool train_mode, std::uint64_t dropout_seed, ForwardCache<T>* cache) {
    cfg.check();
    if (batch.embedded.cols() != cfg.d_model || batch.embedded.rows() != Eigen::Index{batch.batch_size} * batch.steps)
        throw Error(ErrorKind::ShapeMismatch, "batch does not match the encoder width");
    const Packing packing = pack_layout(batch);
    const int dh = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    const bool use_dropout = train_mode && cfg.dropout > 0.0;
    std::mt19937_64 rng(dropout_seed);

    Matrix<T> x(packing.rows, cfg.d_model);
    for (int b = 0; b < batch.batch_size; ++b)
        x.middleRows(packing.offsets[b], packing.lengths[b]) =
            batch.embedded.middleRows(Eigen::Index{b} * batch.steps, packing.lengths[b]);

    if (cache) {
        cache->packing = packing;
        cache->layers.assign(params.layers.size(), {});
    }
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& p = params.layers[l];
        LayerCache<T> local;
        LayerCache<T>& c = cache ? cache->layers[l] : local;
        c.h1 = layer_norm(x, p.ln1_gain, p.ln1_bias, &c.ln1);
        c.q = linear(c.h1, p.wq, p.bq);
        c.k = linear(c.h1, p.wk, p.bk);
        c.v = linear(c.h1, p.wv, p.bv);
        c.concat.resize(packing.rows, cfg.d_model);
        c.probs.clear();
        for (int b = 0; b < batch.batch_size; ++b) {
            const auto off = packing.offsets[b], len = packing.lengths[b];
            for (int h = 0; h < cfg.heads; ++h) {
                Matrix<T> s = (c.q.block(off, h * dh, len, dh) * c.k.block(off, h * dh, len, dh).transpose()) * scale;
                softmax_rows(s);
                c.concat.block(off, h * dh, len, dh) = s * c.v.block(off, h * dh, len, dh);
                if (cache) c.probs.push_back(std::move(s));
            }
        }
        Matrix<T> attn = linear(c.concat, p.wo, p.bo);
        if (use_dropout) {
            c.attn_drop = dropout_mask<T>(attn.rows(), attn.cols(), cfg.dropout, rng);
            attn = attn.cwiseProduct(c.attn_drop);
        }
        c.x_mid = x + attn;
        c.h2 = layer_norm(c.x_mid, p.ln2_gain, p.ln2_bias, &c.ln2);
        c.u = linear(c.h2, p.w1, p.b1);
        c.g = c.u.unaryExpr([](T u) { return gelu(u); });
        Matrix<T> ffn = linear(c.g, p.w2, p.b2);
        if (use_dropout) {
            c.ffn_drop = dropout_mask<T>(ffn.rows(), ffn.cols(), cfg.dropout, rng);
            ffn = ffn.cwiseProduct(c.ffn_drop);
        }
        x = c.x_mid + ffn;
    }

    Matrix<T> cls(batch.batch_size, cfg.d_model);
    for (int b = 0; b < batch.batch_size; ++b) cls.row(b) = x.row(packing.offsets[b]);
    NormCache<T> local_norm;
    Matrix<T> z = layer_norm(cls, params.final_gain, params.final_bias, cache ? &cache->final_ln : &local_norm);
    Matrix<T> logits = linear(z, params.classifier, params.classifier_bias);
    if (!logits.allFinite()) throw Error(ErrorKind::NonFiniteActivation, "non-finite logits");
    if (cache) cache->z = std::move(z);
    return logits;
}

}  // namespace

// ---------------------------------------------------------------------------

void EncoderConfig::check() const {
    if (d_model <= 0 || heads <= 0 || layers < 0 || ffn_dim <= 0 || num_classes <= 0 || bins < 2)
        throw Error(ErrorKind::InvalidArgument, "encoder dimensions must be positive");
    if (d_model % heads != 0) throw Error(ErrorKind::InvalidArgument, "d_model must be divisible by heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorKind::InvalidArgument, "dropout must lie in [0, 1)");
}

nlohmann::json to_json(const EncoderConfig& cfg) {
    return {{"d_model", cfg.d_model},
            {"heads", cfg.heads},
            {"layers", cfg.layers},
            {"ffn_dim", cfg.ffn_dim},
            {"num_classes", cfg.num_classes},
            {"dropout", cfg.dropout},
            {"seed", cfg.seed},
            {"mode", to_string(cfg.mode)},
            {"bins", cfg.bins},
            {"max_contours", cfg.limits.max_contours},
            {"max_points", cfg.limits.max_points},
            {"max_cmds", cfg.limits.max_cmds}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
    EncoderConfig cfg;
    cfg.d_model = j.value("d_model", cfg.d_model);
    cfg.heads = j.value("heads", cfg.heads);
    cfg.layers = j.value("layers", cfg.layers);
    cfg.ffn_dim = j.value("ffn_dim", cfg.ffn_dim);
    cfg.num_classes = j.value("num_classes", cfg.num_classes);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.mode = j.value("mode", std::string("point")) == "command" ? TokenMode::Command : TokenMode::Point;
    cfg.bins = j.value("bins", cfg.bins);
    cfg.limits.max_contours = j.value("max_contours", cfg.limits.max_contours);
    cfg.limits.max_points = j.value("max_points", cfg.limits.max_points);
    cfg.limits.max_cmds = j.value("max_cmds", cfg.limits.max_cmds);
    cfg.check();
    return cfg;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const EncoderConfig& cfg) {
    cfg.check();
    const int d = cfg.d_model, f = cfg.ffn_dim;
    ModelParams p;
    p.embeddings = EmbeddingTables<T>::zeros(cfg.mode, d, cfg.bins, cfg.limits);
    p.layers.resize(static_cast<std::size_t>(cfg.layers));
    for (auto& l : p.layers) {
        l.ln1_gain = Matrix<T>::Zero(1, d);
        l.ln1_bias = Matrix<T>::Zero(1, d);
        for (Matrix<T>* w : {&l.wq, &l.wk, &l.wv, &l.wo}) *w = Matrix<T>::Zero(d, d);
        for (Matrix<T>* b : {&l.bq, &l.bk, &l.bv, &l.bo}) *b = Matrix<T>::Zero(1, d);
        l.ln2_gain = Matrix<T>::Zero(1, d);
        l.ln2_bias = Matrix<T>::Zero(1, d);
        l.w1 = Matrix<T>::Zero(d, f);
        l.b1 = Matrix<T>::Zero(1, f);
        l.w2 = Matrix<T>::Zero(f, d);
        l.b2 = Matrix<T>::Zero(1, d);
    }
    p.final_gain = Matrix<T>::Zero(1, d);
    p.final_bias = Matrix<T>::Zero(1, d);
    p.classifier = Matrix<T>::Zero(d, cfg.num_classes);
    p.classifier_bias = Matrix<T>::Zero(1, cfg.num_classes);
    return p;
}

template <typename T>
ModelParams<T> ModelParams<T>::initialize(const EncoderConfig& cfg) {
    ModelParams p = zeros(cfg);
    std::mt19937_64 rng(cfg.seed);
    for (auto& ref : p.refs()) {
        Matrix<T>& m = *ref.value;
        if (ref.name.ends_with("gain")) {
            m.setOnes();
        } else if (!ref.decay || ref.name == "classifier") {
            m.setZero();
        } else {
            m = truncated_normal<T>(m.rows(), m.cols(), rng);
        }
    }
    return p;
}

template <typename T>
std::vector<ParamRef<T>> ModelParams<T>::refs() {
    std::vector<ParamRef<T>> out;
    auto& e = embeddings;
    const int pad = e.mode == TokenMode::Point ? static_cast<int>(e.loc_x.rows()) - 1
                                               : static_cast<int>(e.args[0].rows()) - 1;
    out.push_back({"embed.cls", &e.cls, true, -1});
    if (e.mode == TokenMode::Point) {
        out.push_back({"embed.contour_index", &e.contour_index, true, -1});
        out.push_back({"embed.point_index", &e.point_index, true, -1});
        out.push_back({"embed.loc_x", &e.loc_x, true, pad});
        out.push_back({"embed.loc_y", &e.loc_y, true, pad});
        out.push_back({"embed.flag", &e.flag, true, -1});
    } else {
        out.push_back({"embed.command_index", &e.command_index, true, -1});
        out.push_back({"embed.command_kind", &e.command_kind, true, -1});
        for (int s = 0; s < 6; ++s) out.push_back({"embed.arg" + std::to_string(s), &e.args[s], true, pad});
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
        auto& l = layers[i];
        const std::string n = "layer" + std::to_string(i) + ".";
        out.push_back({n + "ln1_gain", &l.ln1_gain, false, -1});
        out.push_back({n + "ln1_bias", &l.ln1_bias, false, -1});
        out.push_back({n + "wq", &l.wq, true, -1});
        out.push_back({n + "bq", &l.bq, false, -1});
        out.push_back({n + "wk", &l.wk, true, -1});
        out.push_back({n + "bk", &l.bk, false, -1});
        out.push_back({n + "wv", &l.wv, true, -1});
        out.push_back({n + "bv", &l.bv, false, -1});
        out.push_back({n + "wo", &l.wo, true, -1});
        out.push_back({n + "bo", &l.bo, false, -1});
        out.push_back({n + "ln2_gain", &l.ln2_gain, false, -1});
        out.push_back({n + "ln2_bias", &l.ln2_bias, false, -1});
        out.push_back({n + "w1", &l.w1, true, -1});
        out.push_back({n + "b1", &l.b1, false, -1});
        out.push_back({n + "w2", &l.w2, true, -1});
        out.push_back({n + "b2", &l.b2, false, -1});
    }
    out.push_back({"final_gain", &final_gain, false, -1});
    out.push_back({"final_bias", &final_bias, false, -1});
    out.push_back({"classifier", &classifier, true, -1});
    out.push_back({"classifier_bias", &classifier_bias, false, -1});
    return out;
}

template <typename T>
std::size_t ModelParams<T>::size() const {
    std::size_t n = 0;
    for (const auto& r : const_cast<ModelParams*>(this)->refs()) n += static_cast<std::size_t>(r.value->size());
    return n;
}

template <typename T>
void ModelParams<T>::set_zero() {
    for (auto& r : refs()) r.value->setZero();
}

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
    ModelParams<U> out;
    out.embeddings.mode = embeddings.mode;
    out.layers.resize(layers.size());
    auto src = const_cast<ModelParams*>(this)->refs();
    auto dst = out.refs();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].value = src[i].value->template cast<U>();
    return out;
}

template <typename T>
Matrix<T> attention(const Matrix<T>& x, std::span<const std::uint8_t> mask, int batch_size, int steps,
                    const LayerParams<T>& layer, const EncoderConfig& cfg) {
    if (x.cols() != cfg.d_model || x.rows() != Eigen::Index{batch_size} * steps ||
        mask.size() != static_cast<std::size_t>(x.rows()))
        throw Error(ErrorKind::ShapeMismatch, "attention input does not match batch layout");
    const int dh = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));
    const Matrix<T> q = linear(x, layer.wq, layer.bq);
    const Matrix<T> k = linear(x, layer.wk, layer.bk);
    const Matrix<T> v = linear(x, layer.wv, layer.bv);
    Matrix<T> concat = Matrix<T>::Zero(x.rows(), x.cols());
    for (int b = 0; b < batch_size; ++b) {
        const Eigen::Index base = Eigen::Index{b} * steps;
        for (int h = 0; h < cfg.heads; ++h) {
            Matrix<T> s = (q.block(base, h * dh, steps, dh) * k.block(base, h * dh, steps, dh).transpose()) * scale;
            for (int key = 0; key < steps; ++key)
                if (!mask[base + key]) s.col(key).setConstant(-std::numeric_limits<T>::infinity());
            softmax_rows(s);
            concat.block(base, h * dh, steps, dh) = s * v.block(base, h * dh, steps, dh);
        }
    }
    return linear(concat, layer.wo, layer.bo);
}

template <typename T>
Matrix<T> attention_weights(const Matrix<T>& x, std::span<const std::uint8_t> mask, int steps, int sequence,
                            int head, const LayerParams<T>& layer, const EncoderConfig& cfg) {
    const int dh = cfg.head_dim();
    const Eigen::Index base = Eigen::Index{sequence} * steps;
    const Matrix<T> rows = x.middleRows(base, steps);
    const Matrix<T> q = linear(rows, layer.wq, layer.bq);
    const Matrix<T> k = linear(rows, layer.wk, layer.bk);
    Matrix<T> s = (q.middleCols(head * dh, dh) * k.middleCols(head * dh, dh).transpose()) /
                  std::sqrt(static_cast<T>(dh));
    for (int key = 0; key < steps; ++key)
        if (!mask[base + key]) s.col(key).setConstant(-std::numeric_limits<T>::infinity());
    softmax_rows(s);
    return s;
}

template <typename T>
Matrix<T> forward(const Batch<T>& batch, const ModelParams<T>& params, const EncoderConfig& cfg, bool train_mode,
                  std::uint64_t dropout_seed) {
    return run_forward<T>(batch, params, cfg, train_mode, dropout_seed, nullptr);
}

template <typename T>
T cross_entropy(const Matrix<T>& logits, std::span<const int> labels) {
    T total = 0;
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        const T mx = logits.row(r).maxCoeff();
        const T lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
        total += lse - logits(r, labels[r]);
    }
    return total / static_cast<T>(logits.rows());
}

template <typename T>
LossAndGrads<T> loss_and_grads(const Batch<T>& batch, std::span<const TokenSequence* const> seqs,
                               const ModelParams<T>& params, const EncoderConfig& cfg, std::uint64_t dropout_seed) {
    for (int label : batch.labels)
        if (label < 0 || label >= cfg.num_classes)
            throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(label) + " outside [0, K)");
    ForwardCache<T> cache;
    LossAndGrads<T> out;
    out.logits = run_forward<T>(batch, params, cfg, true, dropout_seed, &cache);
    out.loss = cross_entropy<T>(out.logits, batch.labels);
    out.grads = ModelParams<T>::zeros(cfg);
    auto& g = out.grads;

    const Packing& packing = cache.packing;
    const int n_batch = batch.batch_size;
    const int dh = cfg.head_dim();
    const T scale = T(1) / std::sqrt(static_cast<T>(dh));

    // Softmax cross-entropy.
    Matrix<T> dlogits = out.logits;
    for (int r = 0; r < n_batch; ++r) {
        auto row = dlogits.row(r);
        const T mx = row.maxCoeff();
        // Vectorized exp clamps its input, so masked (-inf) entries are
        // zeroed explicitly.
        row = (row.array() == -std::numeric_limits<T>::infinity()).select(T(0), (row.array() - mx).exp()).matrix();
        row /= row.sum();
        row(batch.labels[r]) -= T(1);
    }
    dlogits /= static_cast<T>(n_batch);

    g.classifier += cache.z.transpose() * dlogits;
    g.classifier_bias += dlogits.colwise().sum();
    const Matrix<T> dz = dlogits * params.classifier.transpose();
    const Matrix<T> dcls = layer_norm_backward(dz, cache.final_ln, params.final_gain, g.final_gain, g.final_bias);

    Matrix<T> dx = Matrix<T>::Zero(packing.rows, cfg.d_model);
    for (int b = 0; b < n_batch; ++b) dx.row(packing.offsets[b]) = dcls.row(b);

    for (std::size_t li = params.layers.size(); li-- > 0;) {
        const auto& p = params.layers[li];
        auto& gl = g.layers[li];
        const auto& c = cache.layers[li];

        // Feed-forward sublayer.
        Matrix<T> dffn = c.ffn_drop.size() ? dx.cwiseProduct(c.ffn_drop) : dx;
        gl.w2 += c.g.transpose() * dffn;
        gl.b2 += dffn.colwise().sum();
        Matrix<T> du = dffn * p.w2.transpose();
        du = du.cwiseProduct(c.u.unaryExpr([](T u) { return gelu_grad(u); }));
        gl.w1 += c.h2.transpose() * du;
        gl.b1 += du.colwise().sum();
        const Matrix<T> dh2 = du * p.w1.transpose();
        Matrix<T> dx_mid = dx + layer_norm_backward(dh2, c.ln2, p.ln2_gain, gl.ln2_gain, gl.ln2_bias);

        // Attention sublayer.
        Matrix<T> dattn = c.attn_drop.size() ? dx_mid.cwiseProduct(c.attn_drop) : dx_mid;
        gl.wo += c.concat.transpose() * dattn;
        gl.bo += dattn.colwise().sum();
        const Matrix<T> dconcat = dattn * p.wo.transpose();
        Matrix<T> dq(packing.rows, cfg.d_model), dk(packing.rows, cfg.d_model), dv(packing.rows, cfg.d_model);
        std::size_t probe = 0;
        for (int b = 0; b < n_batch; ++b) {
            const auto off = packing.offsets[b], len = packing.lengths[b];
            for (int h = 0; h < cfg.heads; ++h) {
                const Matrix<T>& prob = c.probs[probe++];
                const auto dout = dconcat.block(off, h * dh, len, dh);
                dv.block(off, h * dh, len, dh) = prob.transpose() * dout;
                const Matrix<T> dprob = dout * c.v.block(off, h * dh, len, dh).transpose();
                Matrix<T> ds = prob.cwiseProduct(dprob);
                const auto row_dot = ds.rowwise().sum();
                ds -= (prob.array().colwise() * row_dot.array()).matrix();
                ds *= scale;
                dq.block(off, h * dh, len, dh) = ds * c.k.block(off, h * dh, len, dh);
                dk.block(off, h * dh, len, dh) = ds.transpose() * c.q.block(off, h * dh, len, dh);
            }
        }
        gl.wq += c.h1.transpose() * dq;
        gl.bq += dq.colwise().sum();
        gl.wk += c.h1.transpose() * dk;
        gl.bk += dk.colwise().sum();
        gl.wv += c.h1.transpose() * dv;
        gl.bv += dv.colwise().sum();
        const Matrix<T> dh1 = dq * p.wq.transpose() + dk * p.wk.transpose() + dv * p.wv.transpose();
        dx = dx_mid + layer_norm_backward(dh1, c.ln1, p.ln1_gain, gl.ln1_gain, gl.ln1_bias);
    }

    out.grad_embedded = Matrix<T>::Zero(batch.embedded.rows(), batch.embedded.cols());
    for (int b = 0; b < n_batch; ++b)
        out.grad_embedded.middleRows(Eigen::Index{b} * batch.steps, packing.lengths[b]) =
            dx.middleRows(packing.offsets[b], packing.lengths[b]);

    if (!seqs.empty()) {
        if (seqs.size() != static_cast<std::size_t>(n_batch))
            throw Error(ErrorKind::ShapeMismatch, "token sequences do not match the batch");
        for (int b = 0; b < n_batch; ++b) {
            const Matrix<T> rows = out.grad_embedded.middleRows(Eigen::Index{b} * batch.steps, packing.lengths[b]);
            embed_backward(*seqs[b], rows, g.embeddings);
        }
    }
    return out;
}

template <typename T>
LossAndGrads<T> loss_and_grads(std::span<const TokenSequence* const> seqs, const ModelParams<T>& params,
                               const EncoderConfig& cfg, std::uint64_t dropout_seed) {
    const Batch<T> batch = assemble_batch<T>(seqs, params.embeddings);
    return loss_and_grads<T>(batch, seqs, params, cfg, dropout_seed);
}

#define GLYPHFORMER_INSTANTIATE(T)                                                                           \
    template struct ModelParams<T>;                                                                          \
    template Matrix<T> attention(const Matrix<T>&, std::span<const std::uint8_t>, int, int,                  \
                                 const LayerParams<T>&, const EncoderConfig&);                               \
    template Matrix<T> attention_weights(const Matrix<T>&, std::span<const std::uint8_t>, int, int, int,     \
                                         const LayerParams<T>&, const EncoderConfig&);                       \
    template Matrix<T> forward(const Batch<T>&, const ModelParams<T>&, const EncoderConfig&, bool,           \
                               std::uint64_t);                                                               \
    template T cross_entropy(const Matrix<T>&, std::span<const int>);                                        \
    template LossAndGrads<T> loss_and_grads(const Batch<T>&, std::span<const TokenSequence* const>,          \
                                            const ModelParams<T>&, const EncoderConfig&, std::uint64_t);     \
    template LossAndGrads<T> loss_and_grads(std::span<const TokenSequence* const>, const ModelParams<T>&,    \
                                            const EncoderConfig&, std::uint64_t);

GLYPHFORMER_INSTANTIATE(float)
GLYPHFORMER_INSTANTIATE(double)
#undef GLYPHFORMER_INSTANTIATE

template ModelParams<double> ModelParams<float>::cast<double>() const;
template ModelParams<float> ModelParams<double>::cast<float>() const;
template ModelParams<float> ModelParams<float>::cast<float>() const;
template ModelParams<double> ModelParams<double>::cast<double>() const;

}  // namespace glyphformer
