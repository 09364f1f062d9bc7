#include "glyphformer/outline.hpp"

#include <cmath>
#include <cstdio>

#include "glyphformer/error.hpp"

namespace glyphformer {

namespace {

OutlinePoint midpoint(const OutlinePoint& a, const OutlinePoint& b) {
    return {(a.x + b.x) / 2.0, (a.y + b.y) / 2.0, true};
}

Vec2 at(const Command& c, int slot) { return {c.args[slot], c.args[slot + 1]}; }

bool same_point(Vec2 a, Vec2 b) { return a.x == b.x && a.y == b.y; }

void append(std::vector<Vec2>& out, const std::vector<Vec2>& samples) {
    out.insert(out.end(), samples.begin(), samples.end());
}

}  // namespace

std::string_view to_string(Representation r) {
    switch (r) {
        case Representation::OriginalTT: return "original";
        case Representation::DecomposedTT: return "decomposed";
        case Representation::SegmentedTT: return "segmented";
        case Representation::PostScript: return "postscript";
    }
    return "unknown";
}

Representation parse_representation(std::string_view name) {
    for (auto r : kAllRepresentations)
        if (to_string(r) == name) return r;
    throw Error(ErrorKind::InvalidArgument, "unknown outline format '" + std::string(name) + "'");
}

bool is_point_form(Representation r) {
    return r == Representation::OriginalTT || r == Representation::DecomposedTT;
}

std::string_view to_string(CommandKind k) {
    switch (k) {
        case CommandKind::MoveTo: return "moveTo";
        case CommandKind::LineTo: return "lineTo";
        case CommandKind::QCurveTo: return "qCurveTo";
        case CommandKind::CurveTo: return "curveTo";
        case CommandKind::ClosePath: return "closePath";
    }
    return "unknown";
}

Command Command::move_to(double x, double y) {
    Command c;
    c.kind = CommandKind::MoveTo;
    c.args[4] = x;
    c.args[5] = y;
    return c;
}

Command Command::line_to(double x, double y) {
    Command c = move_to(x, y);
    c.kind = CommandKind::LineTo;
    return c;
}

Command Command::qcurve_to(double x1, double y1, double x, double y) {
    Command c = move_to(x, y);
    c.kind = CommandKind::QCurveTo;
    c.args[0] = x1;
    c.args[1] = y1;
    return c;
}

Command Command::curve_to(double x1, double y1, double x2, double y2, double x, double y) {
    Command c;
    c.kind = CommandKind::CurveTo;
    c.args = {x1, y1, x2, y2, x, y};
    return c;
}

Command Command::close_path() { return Command{}; }

std::array<bool, 6> used_slots(CommandKind kind) {
    switch (kind) {
        case CommandKind::MoveTo:
        case CommandKind::LineTo: return {false, false, false, false, true, true};
        case CommandKind::QCurveTo: return {true, true, false, false, true, true};
        case CommandKind::CurveTo: return {true, true, true, true, true, true};
        case CommandKind::ClosePath: return {false, false, false, false, false, false};
    }
    return {};
}

GlyphOutline decompose(const GlyphOutline& outline) {
    GlyphOutline out;
    out.glyph_id = outline.glyph_id;
    out.contours.reserve(outline.contours.size());
    for (const auto& contour : outline.contours) {
        Contour c;
        c.reserve(contour.size() * 2);
        const std::size_t n = contour.size();
        for (std::size_t k = 0; k < n; ++k) {
            const auto& p = contour[k];
            const auto& next = contour[(k + 1) % n];
            c.push_back(p);
            if (!p.on_curve && !next.on_curve) c.push_back(midpoint(p, next));
        }
        out.contours.push_back(std::move(c));
    }
    return out;
}

Contour normalize_start(const Contour& contour) {
    if (contour.empty()) return contour;
    for (std::size_t k = 0; k < contour.size(); ++k) {
        if (contour[k].on_curve) {
            Contour out;
            out.reserve(contour.size());
            out.insert(out.end(), contour.begin() + static_cast<std::ptrdiff_t>(k), contour.end());
            out.insert(out.end(), contour.begin(), contour.begin() + static_cast<std::ptrdiff_t>(k));
            return out;
        }
    }
    Contour out;
    out.reserve(contour.size() + 1);
    out.push_back(midpoint(contour.back(), contour.front()));
    out.insert(out.end(), contour.begin(), contour.end());
    return out;
}

CommandPath segment(const GlyphOutline& outline) {
    CommandPath path;
    path.curve_order = CurveOrder::Quadratic;
    for (std::size_t ci = 0; ci < outline.contours.size(); ++ci) {
        if (outline.contours[ci].empty()) continue;
        const Contour c = normalize_start(outline.contours[ci]);
        const OutlinePoint& start = c.front();
        path.commands.push_back(Command::move_to(start.x, start.y));

        const OutlinePoint* control = nullptr;
        auto violation = [&] {
            throw Error(ErrorKind::InvariantViolation,
                        "adjacent off-curve points in contour " + std::to_string(ci) + " of glyph " +
                            std::to_string(outline.glyph_id) + "; decompose the outline first");
        };
        for (std::size_t k = 1; k < c.size(); ++k) {
            const OutlinePoint& p = c[k];
            if (!p.on_curve) {
                if (control) violation();
                control = &p;
            } else if (control) {
                path.commands.push_back(Command::qcurve_to(control->x, control->y, p.x, p.y));
                control = nullptr;
            } else {
                path.commands.push_back(Command::line_to(p.x, p.y));
            }
        }
        if (control) path.commands.push_back(Command::qcurve_to(control->x, control->y, start.x, start.y));
        path.commands.push_back(Command::close_path());
    }
    return path;
}

CommandPath elevate(const CommandPath& path) {
    if (path.curve_order != CurveOrder::Quadratic)
        throw Error(ErrorKind::InvariantViolation, "elevate expects a quadratic path");
    CommandPath out;
    out.curve_order = CurveOrder::Cubic;
    out.commands.reserve(path.commands.size());
    Vec2 current, start;
    for (const auto& c : path.commands) {
        switch (c.kind) {
            case CommandKind::MoveTo:
                start = current = at(c, 4);
                out.commands.push_back(c);
                break;
            case CommandKind::LineTo:
                current = at(c, 4);
                out.commands.push_back(c);
                break;
            case CommandKind::QCurveTo: {
                const Vec2 q = at(c, 0);
                const Vec2 end = at(c, 4);
                const double k = 2.0 / 3.0;
                out.commands.push_back(Command::curve_to(current.x + k * (q.x - current.x),
                                                         current.y + k * (q.y - current.y),
                                                         end.x + k * (q.x - end.x), end.y + k * (q.y - end.y),
                                                         end.x, end.y));
                current = end;
                break;
            }
            case CommandKind::CurveTo:
                throw Error(ErrorKind::InvariantViolation, "curveTo present in a quadratic path");
            case CommandKind::ClosePath:
                current = start;
                out.commands.push_back(c);
                break;
        }
    }
    return out;
}

GlyphOutline to_point_form(const GlyphOutline& original, Representation r) {
    switch (r) {
        case Representation::OriginalTT: return original;
        case Representation::DecomposedTT: return decompose(original);
        default: break;
    }
    throw Error(ErrorKind::InvalidArgument, std::string(to_string(r)) + " is a command-form representation");
}

CommandPath to_command_form(const GlyphOutline& original, Representation r) {
    switch (r) {
        case Representation::SegmentedTT: return segment(decompose(original));
        case Representation::PostScript: return elevate(segment(decompose(original)));
        default: break;
    }
    throw Error(ErrorKind::InvalidArgument, std::string(to_string(r)) + " is a point-form representation");
}

void validate(const CommandPath& path) {
    auto fail = [](std::size_t i, const std::string& msg) {
        throw Error(ErrorKind::InvariantViolation, "command " + std::to_string(i) + ": " + msg);
    };
    bool open = false;
    for (std::size_t i = 0; i < path.commands.size(); ++i) {
        const auto& c = path.commands[i];
        const auto used = used_slots(c.kind);
        for (int s = 0; s < 6; ++s) {
            if (!used[s] && c.args[s] != kPadArg) fail(i, "unused slot " + std::to_string(s) + " is not padded");
            if (used[s] && !std::isfinite(c.args[s])) fail(i, "non-finite argument");
        }
        if (c.kind == CommandKind::CurveTo && path.curve_order == CurveOrder::Quadratic)
            fail(i, "curveTo in a quadratic path");
        if (c.kind == CommandKind::QCurveTo && path.curve_order == CurveOrder::Cubic)
            fail(i, "qCurveTo in a cubic path");
        if (c.kind == CommandKind::MoveTo) {
            if (open) fail(i, "moveTo before the previous subpath was closed");
            open = true;
        } else if (!open) {
            fail(i, "drawing command outside a subpath");
        } else if (c.kind == CommandKind::ClosePath) {
            open = false;
        }
    }
    if (open) fail(path.commands.size(), "last subpath is not closed");
}

std::vector<Vec2> sample_line(Vec2 p0, Vec2 p1, int samples) {
    std::vector<Vec2> out(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / (samples - 1);
        out[k] = {p0.x + t * (p1.x - p0.x), p0.y + t * (p1.y - p0.y)};
    }
    return out;
}

std::vector<Vec2> sample_quadratic(Vec2 p0, Vec2 q, Vec2 p2, int samples) {
    std::vector<Vec2> out(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / (samples - 1);
        const double s = 1.0 - t;
        const double a = s * s, b = 2.0 * s * t, c = t * t;
        out[k] = {a * p0.x + b * q.x + c * p2.x, a * p0.y + b * q.y + c * p2.y};
    }
    return out;
}

std::vector<Vec2> sample_cubic(Vec2 p0, Vec2 c1, Vec2 c2, Vec2 p3, int samples) {
    std::vector<Vec2> out(static_cast<std::size_t>(samples));
    for (int k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) / (samples - 1);
        const double s = 1.0 - t;
        const double a = s * s * s, b = 3.0 * s * s * t, c = 3.0 * s * t * t, d = t * t * t;
        out[k] = {a * p0.x + b * c1.x + c * c2.x + d * p3.x, a * p0.y + b * c1.y + c * c2.y + d * p3.y};
    }
    return out;
}

std::vector<Vec2> sample_points(const GlyphOutline& outline, int samples_per_segment) {
    if (samples_per_segment < 2)
        throw Error(ErrorKind::InvalidArgument, "samples_per_segment must be at least 2");
    std::vector<Vec2> out;
    for (const auto& contour : outline.contours) {
        const std::size_t n = contour.size();
        if (n == 0) continue;
        // Expand implied on-curve points, then walk from the first on-curve one.
        std::vector<OutlinePoint> pts;
        pts.reserve(2 * n);
        for (std::size_t k = 0; k < n; ++k) {
            const auto& p = contour[k];
            const auto& next = contour[(k + 1) % n];
            pts.push_back(p);
            if (!p.on_curve && !next.on_curve) pts.push_back(midpoint(p, next));
        }
        std::size_t s = 0;
        while (!pts[s].on_curve) ++s;
        const std::size_t m = pts.size();
        const Vec2 start{pts[s].x, pts[s].y};
        Vec2 cur = start;
        const OutlinePoint* control = nullptr;
        for (std::size_t step = 1; step <= m; ++step) {
            const auto& e = pts[(s + step) % m];
            const Vec2 ev{e.x, e.y};
            if (!e.on_curve) {
                control = &e;
                continue;
            }
            if (control) {
                append(out, sample_quadratic(cur, {control->x, control->y}, ev, samples_per_segment));
                control = nullptr;
            } else if (step < m || !same_point(cur, ev)) {
                append(out, sample_line(cur, ev, samples_per_segment));
            }
            cur = ev;
        }
    }
    return out;
}

std::vector<Vec2> sample_points(const CommandPath& path, int samples_per_segment) {
    if (samples_per_segment < 2)
        throw Error(ErrorKind::InvalidArgument, "samples_per_segment must be at least 2");
    std::vector<Vec2> out;
    Vec2 cur, start;
    for (const auto& c : path.commands) {
        switch (c.kind) {
            case CommandKind::MoveTo: start = cur = at(c, 4); break;
            case CommandKind::LineTo:
                append(out, sample_line(cur, at(c, 4), samples_per_segment));
                cur = at(c, 4);
                break;
            case CommandKind::QCurveTo:
                append(out, sample_quadratic(cur, at(c, 0), at(c, 4), samples_per_segment));
                cur = at(c, 4);
                break;
            case CommandKind::CurveTo:
                append(out, sample_cubic(cur, at(c, 0), at(c, 2), at(c, 4), samples_per_segment));
                cur = at(c, 4);
                break;
            case CommandKind::ClosePath:
                if (!same_point(cur, start)) append(out, sample_line(cur, start, samples_per_segment));
                cur = start;
                break;
        }
    }
    return out;
}

std::string format_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", v);
    std::string s(buf);
    if (s.find('.') != std::string::npos) {
        while (s.back() == '0') s.pop_back();
        if (s.back() == '.') s.pop_back();
    }
    if (s == "-0") s = "0";
    return s;
}

std::string to_svg_path(const CommandPath& path, double em) {
    std::string out;
    auto point = [&](const Command& c, int slot) {
        out += ' ';
        out += format_number(c.args[slot]);
        out += ' ';
        out += format_number(em - c.args[slot + 1]);
    };
    for (const auto& c : path.commands) {
        if (!out.empty()) out += ' ';
        switch (c.kind) {
            case CommandKind::MoveTo: out += 'M'; point(c, 4); break;
            case CommandKind::LineTo: out += 'L'; point(c, 4); break;
            case CommandKind::QCurveTo:
                out += 'Q';
                point(c, 0);
                point(c, 4);
                break;
            case CommandKind::CurveTo:
                out += 'C';
                point(c, 0);
                point(c, 2);
                point(c, 4);
                break;
            case CommandKind::ClosePath: out += 'Z'; break;
        }
    }
    return out;
}

}  // namespace glyphformer
