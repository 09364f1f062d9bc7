#include "glyphformer/font.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

constexpr int kMaxCompositeDepth = 8;

// glyf simple-glyph flag bits
constexpr std::uint8_t kOnCurve = 0x01;
constexpr std::uint8_t kXShort = 0x02;
constexpr std::uint8_t kYShort = 0x04;
constexpr std::uint8_t kRepeat = 0x08;
constexpr std::uint8_t kXSameOrPositive = 0x10;
constexpr std::uint8_t kYSameOrPositive = 0x20;

// glyf composite flag bits
constexpr std::uint16_t kArgsAreWords = 0x0001;
constexpr std::uint16_t kArgsAreXY = 0x0002;
constexpr std::uint16_t kHaveScale = 0x0008;
constexpr std::uint16_t kMoreComponents = 0x0020;
constexpr std::uint16_t kHaveXYScale = 0x0040;
constexpr std::uint16_t kHaveTwoByTwo = 0x0080;
constexpr std::uint16_t kScaledComponentOffset = 0x0800;

// Bounds-checked big-endian cursor over a byte span.
class Reader {
public:
    Reader(std::span<const std::uint8_t> data, ErrorKind on_error, std::string what)
        : data_(data), on_error_(on_error), what_(std::move(what)) {}

    std::size_t pos() const { return pos_; }
    std::size_t size() const { return data_.size(); }
    void seek(std::size_t pos) {
        if (pos > data_.size()) fail("seek past end");
        pos_ = pos;
    }
    void skip(std::size_t n) { seek(pos_ + n); }

    std::uint8_t u8() {
        need(1);
        return data_[pos_++];
    }
    std::int8_t i8() { return static_cast<std::int8_t>(u8()); }
    std::uint16_t u16() {
        need(2);
        auto v = static_cast<std::uint16_t>((data_[pos_] << 8) | data_[pos_ + 1]);
        pos_ += 2;
        return v;
    }
    std::int16_t i16() { return static_cast<std::int16_t>(u16()); }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = (std::uint32_t{data_[pos_]} << 24) | (std::uint32_t{data_[pos_ + 1]} << 16) |
                          (std::uint32_t{data_[pos_ + 2]} << 8) | std::uint32_t{data_[pos_ + 3]};
        pos_ += 4;
        return v;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(on_error_, what_ + ": " + msg + " (offset " + std::to_string(pos_) + ")");
    }

private:
    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) fail("truncated data");
    }

    std::span<const std::uint8_t> data_;
    std::size_t pos_ = 0;
    ErrorKind on_error_;
    std::string what_;
};

std::string tag_string(std::uint32_t tag) {
    std::string s(4, ' ');
    for (int i = 0; i < 4; ++i) s[i] = static_cast<char>((tag >> (24 - 8 * i)) & 0xFF);
    return s;
}

double f2dot14(std::int16_t v) { return static_cast<double>(v) / 16384.0; }

bool is_unicode_subtable(std::uint16_t platform, std::uint16_t encoding) {
    if (platform == 0) return true;
    return platform == 3 && (encoding == 1 || encoding == 10);
}

std::vector<std::pair<char32_t, std::uint32_t>> read_format4(Reader& r, std::size_t base) {
    r.seek(base + 6);
    const std::uint16_t seg_x2 = r.u16();
    if (seg_x2 % 2 != 0) r.fail("odd segCountX2 in cmap format 4");
    const std::size_t segs = seg_x2 / 2;
    const std::size_t end_at = base + 14;
    const std::size_t start_at = end_at + seg_x2 + 2;
    const std::size_t delta_at = start_at + seg_x2;
    const std::size_t range_at = delta_at + seg_x2;

    std::vector<std::pair<char32_t, std::uint32_t>> out;
    for (std::size_t s = 0; s < segs; ++s) {
        r.seek(end_at + 2 * s);
        const std::uint16_t end = r.u16();
        r.seek(start_at + 2 * s);
        const std::uint16_t start = r.u16();
        r.seek(delta_at + 2 * s);
        const std::uint16_t delta = r.u16();
        r.seek(range_at + 2 * s);
        const std::uint16_t range_offset = r.u16();
        if (start > end) continue;
        for (std::uint32_t c = start; c <= end; ++c) {
            if (c == 0xFFFF) break;
            std::uint32_t gid = 0;
            if (range_offset == 0) {
                gid = (c + delta) & 0xFFFF;
            } else {
                r.seek(range_at + 2 * s + range_offset + 2 * (c - start));
                gid = r.u16();
                if (gid != 0) gid = (gid + delta) & 0xFFFF;
            }
            if (gid != 0) out.emplace_back(static_cast<char32_t>(c), gid);
        }
    }
    return out;
}

std::vector<std::pair<char32_t, std::uint32_t>> read_format12(Reader& r, std::size_t base,
                                                              std::uint32_t num_glyphs) {
    r.seek(base + 12);
    const std::uint32_t groups = r.u32();
    if (groups > r.size() / 12) r.fail("cmap format 12 group count exceeds table");
    std::vector<std::pair<char32_t, std::uint32_t>> out;
    for (std::uint32_t g = 0; g < groups; ++g) {
        const std::uint32_t start = r.u32();
        const std::uint32_t end = r.u32();
        const std::uint32_t first = r.u32();
        if (start > end || end > 0x10FFFF) r.fail("invalid cmap format 12 group");
        for (std::uint32_t c = start; c <= end; ++c) {
            const std::uint32_t gid = first + (c - start);
            if (gid >= num_glyphs) break;
            if (gid != 0) out.emplace_back(static_cast<char32_t>(c), gid);
        }
    }
    return out;
}

}  // namespace

std::size_t GlyphOutline::point_count() const {
    std::size_t n = 0;
    for (const auto& c : contours) n += c.size();
    return n;
}

FontFile FontFile::load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse(std::move(bytes));
}

FontFile FontFile::parse(std::vector<std::uint8_t> bytes) {
    FontFile font;
    font.bytes_ = std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes));
    const auto& data = *font.bytes_;

    Reader r(data, ErrorKind::MalformedFont, "sfnt header");
    if (data.size() < 12) r.fail("file too short for an sfnt header");
    const std::uint32_t magic = r.u32();
    if (magic == 0x74746366) throw Error(ErrorKind::UnsupportedFont, "font collections (ttcf) are not supported");
    if (magic != 0x00010000 && magic != 0x74727565 && magic != 0x4F54544F) r.fail("bad sfnt magic");
    const std::uint16_t num_tables = r.u16();
    r.skip(6);
    for (std::uint16_t i = 0; i < num_tables; ++i) {
        const std::uint32_t tag = r.u32();
        r.skip(4);  // checksum
        const std::uint32_t offset = r.u32();
        const std::uint32_t length = r.u32();
        if (std::uint64_t{offset} + length > data.size())
            throw Error(ErrorKind::MalformedFont,
                        "table '" + tag_string(tag) + "' range exceeds file size");
        font.tables_[tag_string(tag)] = TableRange{offset, length};
    }

    const bool has_glyf = font.tables_.count("glyf") != 0;
    if (!has_glyf && (font.tables_.count("CFF ") || font.tables_.count("CFF2")))
        throw Error(ErrorKind::UnsupportedFont,
                    "CFF-flavoured font without a glyf table; supply TrueType outlines");
    for (const char* required : {"head", "maxp", "loca", "glyf", "cmap"}) {
        if (!font.tables_.count(required))
            throw Error(ErrorKind::MalformedFont, std::string("missing required table '") + required + "'");
    }

    auto table = [&](const std::string& tag) {
        const auto& t = font.tables_.at(tag);
        return std::span<const std::uint8_t>(data.data() + t.offset, t.length);
    };

    {
        Reader head(table("head"), ErrorKind::MalformedFont, "table 'head'");
        head.seek(18);
        font.units_per_em_ = head.u16();
        if (font.units_per_em_ == 0) head.fail("unitsPerEm is zero");
        head.seek(36);
        font.bounds_.x_min = head.i16();
        font.bounds_.y_min = head.i16();
        font.bounds_.x_max = head.i16();
        font.bounds_.y_max = head.i16();
        head.seek(50);
        const std::int16_t loca_format = head.i16();
        if (loca_format != 0 && loca_format != 1) head.fail("unknown indexToLocFormat");
        font.loca_format_ = loca_format == 0 ? LocaFormat::Short : LocaFormat::Long;
    }
    {
        Reader maxp(table("maxp"), ErrorKind::MalformedFont, "table 'maxp'");
        maxp.seek(4);
        font.num_glyphs_ = maxp.u16();
    }
    {
        Reader loca(table("loca"), ErrorKind::MalformedFont, "table 'loca'");
        const std::uint32_t glyf_len = font.tables_.at("glyf").length;
        font.loca_.resize(std::size_t{font.num_glyphs_} + 1);
        for (auto& entry : font.loca_) {
            entry = font.loca_format_ == LocaFormat::Short ? std::uint32_t{loca.u16()} * 2 : loca.u32();
        }
        for (std::size_t i = 0; i < font.loca_.size(); ++i) {
            if (i > 0 && font.loca_[i] < font.loca_[i - 1]) loca.fail("offsets are not monotonic");
            if (font.loca_[i] > glyf_len) loca.fail("offset beyond the end of 'glyf'");
        }
    }

    // The first unicode subtable of the preferred format wins; format 12 is a
    // superset of format 4 in well-formed fonts.
    {
        Reader cmap(table("cmap"), ErrorKind::MalformedFont, "table 'cmap'");
        cmap.skip(2);
        const std::uint16_t n = cmap.u16();
        std::optional<std::uint32_t> f4, f12;
        for (std::uint16_t i = 0; i < n; ++i) {
            const std::uint16_t platform = cmap.u16();
            const std::uint16_t encoding = cmap.u16();
            const std::uint32_t offset = cmap.u32();
            if (!is_unicode_subtable(platform, encoding)) continue;
            const std::size_t save = cmap.pos();
            cmap.seek(offset);
            const std::uint16_t format = cmap.u16();
            cmap.seek(save);
            if (format == 12 && !f12) f12 = offset;
            if (format == 4 && !f4) f4 = offset;
        }
        if (f12) {
            font.cmap_ = read_format12(cmap, *f12, font.num_glyphs_);
            font.cmap_format_ = 12;
        } else if (f4) {
            font.cmap_ = read_format4(cmap, *f4);
            font.cmap_format_ = 4;
        } else {
            font.cmap_error_ = "no unicode format 4 or 12 cmap subtable";
        }
        std::sort(font.cmap_.begin(), font.cmap_.end());
        font.cmap_.erase(std::unique(font.cmap_.begin(), font.cmap_.end(),
                                     [](const auto& a, const auto& b) { return a.first == b.first; }),
                         font.cmap_.end());
    }
    return font;
}

std::span<const std::uint8_t> FontFile::glyph_bytes(std::uint32_t glyph_id) const {
    const auto& glyf = tables_.at("glyf");
    const std::uint32_t begin = loca_[glyph_id];
    const std::uint32_t end = loca_[glyph_id + 1];
    return {bytes_->data() + glyf.offset + begin, end - begin};
}

GlyphOutline FontFile::glyph_outline(std::uint32_t glyph_id) const {
    if (glyph_id >= num_glyphs_)
        throw Error(ErrorKind::GlyphOutOfRange,
                    "glyph id " + std::to_string(glyph_id) + " >= num_glyphs " + std::to_string(num_glyphs_));
    GlyphOutline outline;
    outline.glyph_id = glyph_id;
    append_glyph(glyph_id, 0, outline.contours);
    return outline;
}

void FontFile::append_glyph(std::uint32_t glyph_id, int depth, std::vector<Contour>& out) const {
    if (depth > kMaxCompositeDepth)
        throw Error(ErrorKind::CompositeDepthExceeded,
                    "composite nesting deeper than " + std::to_string(kMaxCompositeDepth) + " at glyph " +
                        std::to_string(glyph_id));
    const auto bytes = glyph_bytes(glyph_id);
    if (bytes.empty()) return;

    Reader r(bytes, ErrorKind::MalformedGlyph, "glyph " + std::to_string(glyph_id));
    const std::int16_t num_contours = r.i16();
    r.skip(8);  // bbox

    if (num_contours >= 0) {
        std::vector<std::uint16_t> end_points(static_cast<std::size_t>(num_contours));
        for (auto& e : end_points) e = r.u16();
        for (std::size_t i = 1; i < end_points.size(); ++i) {
            if (end_points[i] <= end_points[i - 1]) r.fail("contour end indices are not increasing");
        }
        if (num_contours == 0) return;
        const std::size_t num_points = std::size_t{end_points.back()} + 1;
        r.skip(r.u16());  // hinting instructions

        std::vector<std::uint8_t> flags;
        flags.reserve(num_points);
        while (flags.size() < num_points) {
            const std::uint8_t f = r.u8();
            flags.push_back(f);
            if (f & kRepeat) {
                const std::uint8_t count = r.u8();
                for (std::uint8_t k = 0; k < count; ++k) flags.push_back(f);
            }
        }
        if (flags.size() > num_points) r.fail("flag repeat overruns the point count");

        std::vector<std::int32_t> xs(num_points), ys(num_points);
        std::int32_t acc = 0;
        for (std::size_t i = 0; i < num_points; ++i) {
            const std::uint8_t f = flags[i];
            if (f & kXShort) {
                const std::int32_t d = r.u8();
                acc += (f & kXSameOrPositive) ? d : -d;
            } else if (!(f & kXSameOrPositive)) {
                acc += r.i16();
            }
            xs[i] = acc;
        }
        acc = 0;
        for (std::size_t i = 0; i < num_points; ++i) {
            const std::uint8_t f = flags[i];
            if (f & kYShort) {
                const std::int32_t d = r.u8();
                acc += (f & kYSameOrPositive) ? d : -d;
            } else if (!(f & kYSameOrPositive)) {
                acc += r.i16();
            }
            ys[i] = acc;
        }

        std::size_t start = 0;
        for (const std::uint16_t end : end_points) {
            Contour contour;
            contour.reserve(end + 1 - start);
            for (std::size_t k = start; k <= end; ++k) {
                contour.push_back({static_cast<double>(xs[k]), static_cast<double>(ys[k]),
                                   (flags[k] & kOnCurve) != 0});
            }
            out.push_back(std::move(contour));
            start = std::size_t{end} + 1;
        }
        return;
    }

    // Composite: components are resolved recursively and appended in order.
    // Point-matched placement may refer to points already emitted by earlier
    // components of this glyph, so track where this glyph's output begins.
    const std::size_t first_contour = out.size();
    std::uint16_t flags = 0;
    do {
        flags = r.u16();
        const std::uint16_t component = r.u16();
        if (component >= num_glyphs_) r.fail("component glyph id out of range");

        std::int32_t arg1 = 0, arg2 = 0;
        if (flags & kArgsAreWords) {
            if (flags & kArgsAreXY) {
                arg1 = r.i16();
                arg2 = r.i16();
            } else {
                arg1 = r.u16();
                arg2 = r.u16();
            }
        } else {
            if (flags & kArgsAreXY) {
                arg1 = r.i8();
                arg2 = r.i8();
            } else {
                arg1 = r.u8();
                arg2 = r.u8();
            }
        }

        bool has_transform = true;
        double xx = 1, xy = 0, yx = 0, yy = 1;  // x' = x*xx + y*yx, y' = x*xy + y*yy
        if (flags & kHaveScale) {
            xx = yy = f2dot14(r.i16());
        } else if (flags & kHaveXYScale) {
            xx = f2dot14(r.i16());
            yy = f2dot14(r.i16());
        } else if (flags & kHaveTwoByTwo) {
            xx = f2dot14(r.i16());
            xy = f2dot14(r.i16());
            yx = f2dot14(r.i16());
            yy = f2dot14(r.i16());
        } else {
            has_transform = false;
        }

        std::vector<Contour> part;
        append_glyph(component, depth + 1, part);

        auto transform = [&] {
            for (auto& c : part)
                for (auto& p : c) {
                    const double x = p.x * xx + p.y * yx;
                    const double y = p.x * xy + p.y * yy;
                    p.x = x;
                    p.y = y;
                }
        };
        auto translate = [&](double dx, double dy) {
            for (auto& c : part)
                for (auto& p : c) {
                    p.x += dx;
                    p.y += dy;
                }
        };
        auto nth_point = [&r](const std::vector<Contour>& contours, std::size_t from,
                              std::size_t index) -> const OutlinePoint& {
            for (std::size_t c = from; c < contours.size(); ++c) {
                if (index < contours[c].size()) return contours[c][index];
                index -= contours[c].size();
            }
            r.fail("component anchor point index out of range");
        };

        if (!(flags & kArgsAreXY)) {
            if (has_transform) transform();
            const OutlinePoint& anchor = nth_point(out, first_contour, static_cast<std::size_t>(arg1));
            const OutlinePoint& own = nth_point(part, 0, static_cast<std::size_t>(arg2));
            translate(anchor.x - own.x, anchor.y - own.y);
        } else if (!has_transform) {
            translate(arg1, arg2);
        } else if (flags & kScaledComponentOffset) {
            translate(arg1, arg2);
            transform();
        } else {
            transform();
            translate(arg1, arg2);
        }
        for (auto& c : part) out.push_back(std::move(c));
    } while (flags & kMoreComponents);
}

void FontFile::require_cmap() const {
    if (!cmap_error_.empty()) throw Error(ErrorKind::UnsupportedCmap, cmap_error_);
}

int FontFile::cmap_format() const {
    require_cmap();
    return cmap_format_;
}

std::optional<std::uint32_t> FontFile::char_to_glyph(char32_t codepoint) const {
    require_cmap();
    auto it = std::lower_bound(cmap_.begin(), cmap_.end(), codepoint,
                               [](const auto& entry, char32_t cp) { return entry.first < cp; });
    if (it == cmap_.end() || it->first != codepoint) return std::nullopt;
    return it->second;
}

std::vector<char32_t> FontFile::list_codepoints() const {
    require_cmap();
    std::vector<char32_t> out;
    out.reserve(cmap_.size());
    for (const auto& [cp, gid] : cmap_) out.push_back(cp);
    return out;
}

}  // namespace glyphformer
