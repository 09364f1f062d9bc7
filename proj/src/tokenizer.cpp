#include "glyphformer/tokenizer.hpp"

#include <algorithm>
#include <cmath>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

int clamp_index(int i, Eigen::Index rows) { return std::min(i, static_cast<int>(rows) - 1); }

template <typename T>
Matrix<T> zero_table(Eigen::Index rows, int width) {
    return Matrix<T>::Zero(rows, width);
}

void check_length(std::size_t n, std::size_t max_len) {
    if (n > max_len)
        throw Error(ErrorKind::SequenceTooLong,
                    std::to_string(n) + " tokens exceed the limit of " + std::to_string(max_len));
}

}  // namespace

void QuantizerConfig::check() const {
    if (bins < 2) throw Error(ErrorKind::InvalidArgument, "quantizer needs at least 2 bins");
    if (!(units_per_em > 0.0) || !std::isfinite(units_per_em))
        throw Error(ErrorKind::InvalidArgument, "quantizer extent must be positive");
}

QuantizerConfig QuantizerConfig::for_font(const FontFile& font, int bins) {
    const auto& b = font.bounds();
    QuantizerConfig cfg;
    cfg.bins = bins;
    cfg.origin_x = b.x_min;
    cfg.origin_y = b.y_min;
    const double width = static_cast<double>(b.x_max) - b.x_min;
    const double height = static_cast<double>(b.y_max) - b.y_min;
    cfg.units_per_em = std::max({static_cast<double>(font.units_per_em()), width, height});
    return cfg;
}

int quantize(double coord, const QuantizerConfig& cfg) {
    if (coord == kPadArg) return cfg.pad_index();
    if (!std::isfinite(coord)) throw Error(ErrorKind::NonFiniteCoordinate, "coordinate is not finite");
    const double t = std::clamp(coord / cfg.units_per_em, 0.0, 1.0);
    const auto bin = static_cast<long long>(std::floor(t * cfg.bins));
    return static_cast<int>(std::clamp<long long>(bin, 0, cfg.bins - 1));
}

std::string_view to_string(TokenMode m) { return m == TokenMode::Point ? "point" : "command"; }

TokenMode token_mode_for(Representation r) { return is_point_form(r) ? TokenMode::Point : TokenMode::Command; }

std::size_t max_tokens_for(TokenMode mode) {
    return mode == TokenMode::Point ? kDefaultMaxPointTokens : kDefaultMaxCommandTokens;
}

TokenSequence encode_points(const GlyphOutline& outline, const QuantizerConfig& cfg, std::size_t max_len) {
    check_length(outline.point_count(), max_len);
    TokenSequence seq;
    seq.mode = TokenMode::Point;
    seq.points.reserve(outline.point_count());
    for (std::size_t i = 0; i < outline.contours.size(); ++i) {
        const auto& contour = outline.contours[i];
        for (std::size_t j = 0; j < contour.size(); ++j) {
            const auto& p = contour[j];
            seq.points.push_back({static_cast<int>(i), static_cast<int>(j),
                                  quantize(std::max(0.0, p.x - cfg.origin_x), cfg),
                                  quantize(std::max(0.0, p.y - cfg.origin_y), cfg), p.on_curve ? 1 : 0});
        }
    }
    return seq;
}

TokenSequence encode_commands(const CommandPath& path, const QuantizerConfig& cfg, std::size_t max_len) {
    check_length(path.commands.size(), max_len);
    TokenSequence seq;
    seq.mode = TokenMode::Command;
    seq.commands.reserve(path.commands.size());
    for (std::size_t i = 0; i < path.commands.size(); ++i) {
        const auto& c = path.commands[i];
        const auto used = used_slots(c.kind);
        CommandToken tok;
        tok.index = static_cast<int>(i);
        tok.kind = c.kind;
        for (int s = 0; s < 6; ++s) {
            const double origin = s % 2 == 0 ? cfg.origin_x : cfg.origin_y;
            tok.arg_bins[s] = used[s] ? quantize(std::max(0.0, c.args[s] - origin), cfg) : cfg.pad_index();
        }
        seq.commands.push_back(tok);
    }
    return seq;
}

TokenSequence encode_glyph(const GlyphOutline& original, Representation r, const QuantizerConfig& cfg) {
    if (is_point_form(r)) return encode_points(to_point_form(original, r), cfg);
    return encode_commands(to_command_form(original, r), cfg);
}

template <typename T>
EmbeddingTables<T> EmbeddingTables<T>::zeros(TokenMode mode, int width, int bins, const TableLimits& limits) {
    EmbeddingTables t;
    t.mode = mode;
    t.cls = zero_table<T>(1, width);
    if (mode == TokenMode::Point) {
        t.contour_index = zero_table<T>(limits.max_contours + 1, width);
        t.point_index = zero_table<T>(limits.max_points + 1, width);
        t.loc_x = zero_table<T>(bins + 1, width);
        t.loc_y = zero_table<T>(bins + 1, width);
        t.flag = zero_table<T>(2, width);
    } else {
        t.command_index = zero_table<T>(limits.max_cmds + 1, width);
        t.command_kind = zero_table<T>(kNumCommandKinds, width);
        for (auto& a : t.args) a = zero_table<T>(bins + 1, width);
    }
    return t;
}

template <typename T>
void EmbeddingTables<T>::set_zero() {
    for (Matrix<T>* m : {&cls, &contour_index, &point_index, &loc_x, &loc_y, &flag, &command_index, &command_kind})
        m->setZero();
    for (auto& a : args) a.setZero();
}

template <typename T>
Matrix<T> embed(const TokenSequence& seq, const EmbeddingTables<T>& tables) {
    if (seq.mode != tables.mode)
        throw Error(ErrorKind::ConfigMismatch, "token mode does not match the embedding tables");
    const int width = tables.width();
    const auto n = static_cast<Eigen::Index>(seq.size());
    Matrix<T> out(n + 1, width);
    out.row(0) = tables.cls.row(0);
    if (seq.mode == TokenMode::Point) {
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto& p = seq.points[t];
            out.row(t + 1) = tables.contour_index.row(clamp_index(p.contour, tables.contour_index.rows())) +
                             tables.point_index.row(clamp_index(p.point, tables.point_index.rows())) +
                             tables.loc_x.row(p.x_bin) + tables.loc_y.row(p.y_bin) + tables.flag.row(p.flag);
        }
    } else {
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto& c = seq.commands[t];
            auto row = out.row(t + 1);
            row = tables.command_index.row(clamp_index(c.index, tables.command_index.rows())) +
                  tables.command_kind.row(static_cast<int>(c.kind));
            for (int s = 0; s < 6; ++s) row += tables.args[s].row(c.arg_bins[s]);
        }
    }
    return out;
}

template <typename T>
void embed_backward(const TokenSequence& seq, const Matrix<T>& grad_rows, EmbeddingTables<T>& g) {
    const auto n = static_cast<Eigen::Index>(seq.size());
    g.cls.row(0) += grad_rows.row(0);
    if (seq.mode == TokenMode::Point) {
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto& p = seq.points[t];
            const auto gr = grad_rows.row(t + 1);
            g.contour_index.row(clamp_index(p.contour, g.contour_index.rows())) += gr;
            g.point_index.row(clamp_index(p.point, g.point_index.rows())) += gr;
            g.loc_x.row(p.x_bin) += gr;
            g.loc_y.row(p.y_bin) += gr;
            g.flag.row(p.flag) += gr;
        }
    } else {
        for (Eigen::Index t = 0; t < n; ++t) {
            const auto& c = seq.commands[t];
            const auto gr = grad_rows.row(t + 1);
            g.command_index.row(clamp_index(c.index, g.command_index.rows())) += gr;
            g.command_kind.row(static_cast<int>(c.kind)) += gr;
            for (int s = 0; s < 6; ++s) g.args[s].row(c.arg_bins[s]) += gr;
        }
    }
}

template <typename T>
Batch<T> assemble_batch(std::span<const TokenSequence* const> seqs, const EmbeddingTables<T>& tables) {
    if (seqs.empty()) throw Error(ErrorKind::InvalidArgument, "cannot assemble an empty batch");
    Batch<T> batch;
    batch.batch_size = static_cast<int>(seqs.size());
    std::size_t longest = 0;
    for (const auto* s : seqs) longest = std::max(longest, s->size());
    batch.steps = static_cast<int>(longest) + 1;
    batch.embedded = Matrix<T>::Zero(static_cast<Eigen::Index>(seqs.size()) * batch.steps, tables.width());
    batch.mask.assign(seqs.size() * static_cast<std::size_t>(batch.steps), 0);
    for (std::size_t b = 0; b < seqs.size(); ++b) {
        const Matrix<T> rows = embed(*seqs[b], tables);
        const auto base = static_cast<Eigen::Index>(b) * batch.steps;
        batch.embedded.middleRows(base, rows.rows()) = rows;
        std::fill_n(batch.mask.begin() + base, rows.rows(), std::uint8_t{1});
        batch.labels.push_back(seqs[b]->label);
        batch.lengths.push_back(static_cast<int>(rows.rows()));
    }
    return batch;
}

template <typename T>
Batch<T> assemble_batch(std::span<const TokenSequence> seqs, const EmbeddingTables<T>& tables) {
    std::vector<const TokenSequence*> ptrs;
    ptrs.reserve(seqs.size());
    for (const auto& s : seqs) ptrs.push_back(&s);
    return assemble_batch<T>(std::span<const TokenSequence* const>(ptrs), tables);
}

nlohmann::json to_json(const TokenRecord& record) {
    const auto& seq = record.sequence;
    nlohmann::json tokens = nlohmann::json::array();
    if (seq.mode == TokenMode::Point) {
        for (const auto& p : seq.points)
            tokens.push_back({{"i", p.contour}, {"j", p.point}, {"x", p.x_bin}, {"y", p.y_bin}, {"o", p.flag}});
    } else {
        for (const auto& c : seq.commands)
            tokens.push_back({{"i", c.index}, {"kind", to_string(c.kind)}, {"args", c.arg_bins}});
    }
    return {{"font", record.font},
            {"codepoint", static_cast<std::uint32_t>(record.codepoint)},
            {"label", seq.label},
            {"mode", to_string(seq.mode)},
            {"tokens", std::move(tokens)}};
}

TokenRecord token_record_from_json(const nlohmann::json& j) {
    TokenRecord r;
    r.font = j.at("font").get<std::string>();
    r.codepoint = static_cast<char32_t>(j.at("codepoint").get<std::uint32_t>());
    auto& seq = r.sequence;
    seq.label = j.at("label").get<int>();
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "point") {
        seq.mode = TokenMode::Point;
        for (const auto& t : j.at("tokens"))
            seq.points.push_back({t.at("i").get<int>(), t.at("j").get<int>(), t.at("x").get<int>(),
                                  t.at("y").get<int>(), t.at("o").get<int>()});
    } else if (mode == "command") {
        seq.mode = TokenMode::Command;
        for (const auto& t : j.at("tokens")) {
            CommandToken c;
            c.index = t.at("i").get<int>();
            const auto kind = t.at("kind").get<std::string>();
            bool found = false;
            for (int k = 0; k < kNumCommandKinds; ++k) {
                if (to_string(static_cast<CommandKind>(k)) == kind) {
                    c.kind = static_cast<CommandKind>(k);
                    found = true;
                }
            }
            if (!found) throw Error(ErrorKind::InvalidArgument, "unknown command kind '" + kind + "'");
            c.arg_bins = t.at("args").get<std::array<int, 6>>();
            seq.commands.push_back(c);
        }
    } else {
        throw Error(ErrorKind::InvalidArgument, "unknown token mode '" + mode + "'");
    }
    return r;
}

template struct EmbeddingTables<float>;
template struct EmbeddingTables<double>;
template Matrix<float> embed(const TokenSequence&, const EmbeddingTables<float>&);
template Matrix<double> embed(const TokenSequence&, const EmbeddingTables<double>&);
template void embed_backward(const TokenSequence&, const Matrix<float>&, EmbeddingTables<float>&);
template void embed_backward(const TokenSequence&, const Matrix<double>&, EmbeddingTables<double>&);
template Batch<float> assemble_batch(std::span<const TokenSequence* const>, const EmbeddingTables<float>&);
template Batch<double> assemble_batch(std::span<const TokenSequence* const>, const EmbeddingTables<double>&);
template Batch<float> assemble_batch(std::span<const TokenSequence>, const EmbeddingTables<float>&);
template Batch<double> assemble_batch(std::span<const TokenSequence>, const EmbeddingTables<double>&);

}  // namespace glyphformer
