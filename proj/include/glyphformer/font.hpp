#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace glyphformer {

struct OutlinePoint {
    double x = 0.0;
    double y = 0.0;
    bool on_curve = true;

    friend bool operator==(const OutlinePoint&, const OutlinePoint&) = default;
};

using Contour = std::vector<OutlinePoint>;

// Glyph geometry in font units. Coordinates are integral for simple glyphs;
// composite components with a scale or 2x2 transform may produce fractional
// values, which are kept as-is.
struct GlyphOutline {
    std::uint32_t glyph_id = 0;
    std::vector<Contour> contours;

    std::size_t point_count() const;
    bool empty() const { return contours.empty(); }

    friend bool operator==(const GlyphOutline&, const GlyphOutline&) = default;
};

enum class LocaFormat { Short, Long };

struct TableRange {
    std::uint32_t offset = 0;
    std::uint32_t length = 0;
};

struct BoundingBox {
    std::int16_t x_min = 0;
    std::int16_t y_min = 0;
    std::int16_t x_max = 0;
    std::int16_t y_max = 0;
};

// A parsed TrueType-flavoured sfnt. Immutable after parse(); glyph extraction
// only reads shared state and is safe to call from several threads.
class FontFile {
public:
    static FontFile parse(std::vector<std::uint8_t> bytes);
    static FontFile load(const std::filesystem::path& path);

    std::uint16_t units_per_em() const { return units_per_em_; }
    std::uint16_t num_glyphs() const { return num_glyphs_; }
    LocaFormat loca_format() const { return loca_format_; }
    const BoundingBox& bounds() const { return bounds_; }
    const std::map<std::string, TableRange>& tables() const { return tables_; }

    GlyphOutline glyph_outline(std::uint32_t glyph_id) const;

    std::optional<std::uint32_t> char_to_glyph(char32_t codepoint) const;
    // Codepoints with a non-zero glyph mapping, ascending.
    std::vector<char32_t> list_codepoints() const;
    // Format of the selected unicode cmap subtable (4 or 12).
    int cmap_format() const;

private:
    FontFile() = default;

    std::span<const std::uint8_t> glyph_bytes(std::uint32_t glyph_id) const;
    void append_glyph(std::uint32_t glyph_id, int depth, std::vector<Contour>& out) const;
    void require_cmap() const;

    std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
    std::map<std::string, TableRange> tables_;
    std::uint16_t units_per_em_ = 0;
    std::uint16_t num_glyphs_ = 0;
    LocaFormat loca_format_ = LocaFormat::Short;
    BoundingBox bounds_;
    std::vector<std::uint32_t> loca_;

    // Sorted (codepoint, glyph) pairs from the chosen unicode subtable.
    std::vector<std::pair<char32_t, std::uint32_t>> cmap_;
    int cmap_format_ = 0;
    std::string cmap_error_;
};

}  // namespace glyphformer
