#include "glyphformer/optimizer.hpp"

#include <algorithm>
#include <cmath>

#include "glyphformer/error.hpp"

namespace glyphformer {

nlohmann::json to_json(const AdamWConfig& cfg) {
    return {{"base_lr", cfg.base_lr}, {"beta1", cfg.beta1},
            {"beta2", cfg.beta2},     {"eps", cfg.eps},
            {"weight_decay", cfg.weight_decay}, {"warmup", cfg.warmup}};
}

AdamWConfig adamw_config_from_json(const nlohmann::json& j) {
    AdamWConfig cfg;
    cfg.base_lr = j.value("base_lr", cfg.base_lr);
    cfg.beta1 = j.value("beta1", cfg.beta1);
    cfg.beta2 = j.value("beta2", cfg.beta2);
    cfg.eps = j.value("eps", cfg.eps);
    cfg.weight_decay = j.value("weight_decay", cfg.weight_decay);
    cfg.warmup = j.value("warmup", cfg.warmup);
    return cfg;
}

double lr_at(std::int64_t step, const AdamWConfig& cfg) {
    if (step < 1) throw Error(ErrorKind::InvalidArgument, "learning-rate steps start at 1");
    if (cfg.warmup <= 0) return cfg.base_lr;
    const double s = static_cast<double>(step);
    const double w = static_cast<double>(cfg.warmup);
    return cfg.base_lr * std::min(s / w, std::sqrt(w / s));
}

template <typename T>
OptimizerState<T> OptimizerState<T>::create(const EncoderConfig& encoder, const AdamWConfig& config) {
    OptimizerState s;
    s.config = config;
    s.first_moment = ModelParams<T>::zeros(encoder);
    s.second_moment = ModelParams<T>::zeros(encoder);
    return s;
}

template <typename T>
void adamw_step(ModelParams<T>& params, const ModelParams<T>& grads, OptimizerState<T>& state) {
    auto p_refs = params.refs();
    auto g_refs = const_cast<ModelParams<T>&>(grads).refs();
    auto m_refs = state.first_moment.refs();
    auto v_refs = state.second_moment.refs();
    if (p_refs.size() != g_refs.size() || p_refs.size() != m_refs.size() || p_refs.size() != v_refs.size())
        throw Error(ErrorKind::ShapeMismatch, "optimizer state does not match the parameters");

    state.step += 1;
    const auto& cfg = state.config;
    const double lr = lr_at(state.step, cfg);
    const T decay_factor = static_cast<T>(1.0 - lr * cfg.weight_decay);
    const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
    const T correction1 = static_cast<T>(1.0 - std::pow(cfg.beta1, static_cast<double>(state.step)));
    const T correction2 = static_cast<T>(1.0 - std::pow(cfg.beta2, static_cast<double>(state.step)));
    const T step_size = static_cast<T>(lr);
    const T eps = static_cast<T>(cfg.eps);

    for (std::size_t i = 0; i < p_refs.size(); ++i) {
        Matrix<T>& p = *p_refs[i].value;
        const Matrix<T>& g = *g_refs[i].value;
        Matrix<T>& m = *m_refs[i].value;
        Matrix<T>& v = *v_refs[i].value;
        if (p.rows() != g.rows() || p.cols() != g.cols())
            throw Error(ErrorKind::ShapeMismatch, "gradient shape mismatch for " + p_refs[i].name);
        const int cols = static_cast<int>(p.cols());
        for (Eigen::Index r = 0; r < p.rows(); ++r) {
            const bool decay = cfg.weight_decay != 0.0 && p_refs[i].decay && r != p_refs[i].pad_row;
            for (int c = 0; c < cols; ++c) {
                T& w = p(r, c);
                if (decay) w *= decay_factor;
                const T gr = g(r, c);
                m(r, c) = b1 * m(r, c) + (T(1) - b1) * gr;
                v(r, c) = b2 * v(r, c) + (T(1) - b2) * gr * gr;
                const T m_hat = m(r, c) / correction1;
                const T v_hat = v(r, c) / correction2;
                w -= step_size * m_hat / (std::sqrt(v_hat) + eps);
            }
        }
    }
}

template struct OptimizerState<float>;
template struct OptimizerState<double>;
template void adamw_step(ModelParams<float>&, const ModelParams<float>&, OptimizerState<float>&);
template void adamw_step(ModelParams<double>&, const ModelParams<double>&, OptimizerState<double>&);

}  // namespace glyphformer
