#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "glyphformer/font.hpp"
#include "glyphformer/outline.hpp"
#include "glyphformer/tensor.hpp"

namespace glyphformer {

// Coordinates are mapped to t = (coord - origin) / units_per_em, clamped to
// [0, 1) and split into `bins` buckets. Row `bins` of every coordinate table
// is reserved for padded argument slots.
struct QuantizerConfig {
    int bins = 256;
    double units_per_em = 1000.0;
    double origin_x = 0.0;
    double origin_y = 0.0;

    int pad_index() const { return bins; }
    void check() const;

    // Fits the quantization box to a font: the origin is the head bbox
    // minimum and the extent covers both the em square and the bbox.
    static QuantizerConfig for_font(const FontFile& font, int bins = 256);
};

// Quantizes a coordinate already expressed relative to the origin. The pad
// sentinel -1 maps to pad_index().
int quantize(double coord, const QuantizerConfig& cfg);

enum class TokenMode { Point, Command };
std::string_view to_string(TokenMode m);
TokenMode token_mode_for(Representation r);

struct PointToken {
    int contour = 0;
    int point = 0;
    int x_bin = 0;
    int y_bin = 0;
    int flag = 0;

    friend bool operator==(const PointToken&, const PointToken&) = default;
};

struct CommandToken {
    int index = 0;
    CommandKind kind = CommandKind::ClosePath;
    std::array<int, 6> arg_bins{};

    friend bool operator==(const CommandToken&, const CommandToken&) = default;
};

struct TokenSequence {
    TokenMode mode = TokenMode::Point;
    std::vector<PointToken> points;
    std::vector<CommandToken> commands;
    int label = 0;

    std::size_t size() const { return mode == TokenMode::Point ? points.size() : commands.size(); }

    friend bool operator==(const TokenSequence&, const TokenSequence&) = default;
};

inline constexpr std::size_t kDefaultMaxPointTokens = 1024;
inline constexpr std::size_t kDefaultMaxCommandTokens = 512;

// Throw SequenceTooLong when the token count exceeds max_len.
TokenSequence encode_points(const GlyphOutline& outline, const QuantizerConfig& cfg,
                            std::size_t max_len = kDefaultMaxPointTokens);
TokenSequence encode_commands(const CommandPath& path, const QuantizerConfig& cfg,
                              std::size_t max_len = kDefaultMaxCommandTokens);

// Encodes the raw glyf outline in the requested representation.
TokenSequence encode_glyph(const GlyphOutline& original, Representation r, const QuantizerConfig& cfg);
std::size_t max_tokens_for(TokenMode mode);

// Index-table sizes; larger indices share the last row.
struct TableLimits {
    int max_contours = 64;
    int max_points = 512;
    int max_cmds = 512;

    friend bool operator==(const TableLimits&, const TableLimits&) = default;
};

// Learned lookup tables, one row per component value. Only the tables of
// the active mode are allocated.
template <typename T>
struct EmbeddingTables {
    TokenMode mode = TokenMode::Point;
    Matrix<T> cls;
    // point mode
    Matrix<T> contour_index;
    Matrix<T> point_index;
    Matrix<T> loc_x;
    Matrix<T> loc_y;
    Matrix<T> flag;
    // command mode
    Matrix<T> command_index;
    Matrix<T> command_kind;
    std::array<Matrix<T>, 6> args;

    static EmbeddingTables zeros(TokenMode mode, int width, int bins, const TableLimits& limits);
    int width() const { return static_cast<int>(cls.cols()); }
    void set_zero();
};

// Row 0 is the CLS vector; row t+1 sums the component lookups of token t.
template <typename T>
Matrix<T> embed(const TokenSequence& seq, const EmbeddingTables<T>& tables);

// Scatters gradients of embed() outputs (one row per output row) back into
// the tables; rows are accumulated, never overwritten.
template <typename T>
void embed_backward(const TokenSequence& seq, const Matrix<T>& grad_rows, EmbeddingTables<T>& grad_tables);

// Right-padded batch; rows are laid out sequence-major, batch_index * steps + position.
template <typename T>
struct Batch {
    int batch_size = 0;
    int steps = 0;  // T_max + 1
    Matrix<T> embedded;
    std::vector<std::uint8_t> mask;
    std::vector<int> labels;
    std::vector<int> lengths;  // CLS + real tokens per sequence
};

template <typename T>
Batch<T> assemble_batch(std::span<const TokenSequence* const> seqs, const EmbeddingTables<T>& tables);
template <typename T>
Batch<T> assemble_batch(std::span<const TokenSequence> seqs, const EmbeddingTables<T>& tables);

// Line-delimited dataset dump record.
struct TokenRecord {
    std::string font;
    char32_t codepoint = 0;
    TokenSequence sequence;
};

nlohmann::json to_json(const TokenRecord& record);
TokenRecord token_record_from_json(const nlohmann::json& j);

}  // namespace glyphformer
